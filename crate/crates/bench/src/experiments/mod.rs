//! The four experiments and their shared plumbing.

pub mod distill;
pub mod lasso;
pub mod ridge;
pub mod svm;

use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::BenchResult;
use crate::table::CsvTable;

/// A finished run: the main table, auxiliary tables keyed by file-name
/// suffix, and metadata destined for the JSON sidecar.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: CsvTable,
    pub extra_tables: Vec<(String, CsvTable)>,
    pub meta: Map<String, Value>,
    pub wall_times: Vec<(String, f64)>,
}

impl RunOutput {
    fn new(table: CsvTable, phases: Phases) -> Self {
        Self {
            table,
            extra_tables: Vec::new(),
            meta: Map::new(),
            wall_times: phases.0,
        }
    }

    /// Run metadata including the configuration and wall times.
    pub fn metadata(&self, cfg: &ExperimentConfig) -> Value {
        let mut meta = Map::new();
        meta.insert("experiment".into(), json!(cfg.experiment.name()));
        meta.insert("seed".into(), json!(cfg.seed));
        meta.insert(
            "dims".into(),
            json!({ "m": cfg.dims.m, "p": cfg.dims.p, "k": cfg.dims.k }),
        );
        meta.insert("inner_iters".into(), json!(cfg.inner_iters));
        meta.insert("outer_iters".into(), json!(cfg.outer_iters));
        meta.insert("solver".into(), json!(cfg.solver.name()));
        meta.insert("condition".into(), json!(cfg.condition.name()));
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        meta.insert("columns".into(), json!(self.table.header()));
        meta.insert("rows".into(), json!(self.table.len()));
        for (k, v) in &self.meta {
            meta.insert(k.clone(), v.clone());
        }
        let times: Map<String, Value> = self
            .wall_times
            .iter()
            .map(|(phase, secs)| (phase.clone(), json!(secs)))
            .collect();
        meta.insert("wall_time_seconds".into(), Value::Object(times));
        Value::Object(meta)
    }
}

/// Wall-clock time per named phase.
#[derive(Debug, Default)]
pub(crate) struct Phases(Vec<(String, f64)>);

impl Phases {
    pub(crate) fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

pub fn run(cfg: &ExperimentConfig) -> BenchResult<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::RidgePrecision => ridge::exp_ridge_precision(cfg),
        Experiment::SvmHpo => svm::exp_svm_hpo(cfg),
        Experiment::Distill => distill::exp_distill(cfg),
        Experiment::Lasso => lasso::exp_lasso(cfg),
    }
}

/// `|a − b| / max(|b|, floor)`.
pub(crate) fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}
