//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
//! solver or linear system fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{Condition, Dims, Experiment, ExperimentConfig, SolverKind};
use crate::error::{BenchError, BenchResult};
use crate::experiments::{run as run_experiment, RunOutput};

#[derive(Debug, Parser)]
#[command(
    name = "idiff-bench",
    version,
    about = "Desk-scale implicit differentiation experiments writing CSV tables",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Jacobian error of implicit differentiation and unrolling along gradient descent on ridge regression.
    RidgePrecision(RunArgs),
    /// Regularization tuning of a dual multiclass SVM with hypergradient checks.
    SvmHpo(RunArgs),
    /// Dataset distillation with a multinomial logistic inner model.
    Distill(RunArgs),
    /// Lasso solution-path derivatives against finite differences.
    Lasso(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Seed of all random streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; auxiliary files are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dimensions as m,p or m,p,k (samples, features, classes).
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    inner_iters: Option<usize>,
    /// Outer steps, or grid points for the lasso sweep.
    #[arg(long)]
    outer_iters: Option<usize>,
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    #[arg(long, value_enum)]
    condition: Option<Condition>,
    /// Also write run metadata and wall times as JSON.
    #[arg(long)]
    json_meta: bool,
}

impl RunArgs {
    fn config(&self, experiment: Experiment) -> BenchResult<(ExperimentConfig, bool)> {
        let mut cfg = ExperimentConfig::defaults(experiment);
        cfg.seed = self.seed;
        if let Some(d) = &self.dims {
            cfg.dims = Dims::parse(d)?;
        }
        if let Some(n) = self.inner_iters {
            cfg.inner_iters = n;
        }
        if let Some(n) = self.outer_iters {
            cfg.outer_iters = n;
        }
        if let Some(s) = self.solver {
            cfg.solver = s;
        }
        if let Some(c) = self.condition {
            cfg.condition = c;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.validate()?;
        Ok((cfg, self.json_meta))
    }
}

/// `dir/stem.csv` → `dir/stem.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_outputs(cfg: &ExperimentConfig, out: &RunOutput, json_meta: bool) -> BenchResult<()> {
    out.table.write_path(&cfg.out)?;
    for (suffix, table) in &out.extra_tables {
        table.write_path(&sibling(&cfg.out, &format!("{suffix}.csv")))?;
    }
    if json_meta {
        let path = sibling(&cfg.out, "meta.json");
        let text = serde_json::to_string_pretty(&out.metadata(cfg)).expect("serializable metadata");
        std::fs::write(&path, text + "\n")
            .map_err(|e| BenchError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the experiment and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let (experiment, args) = match &cli.command {
        Command::RidgePrecision(a) => (Experiment::RidgePrecision, a),
        Command::SvmHpo(a) => (Experiment::SvmHpo, a),
        Command::Distill(a) => (Experiment::Distill, a),
        Command::Lasso(a) => (Experiment::Lasso, a),
    };
    let result = args.config(experiment).and_then(|(cfg, json_meta)| {
        let out = run_experiment(&cfg)?;
        write_outputs(&cfg, &out, json_meta)?;
        eprintln!("{}: wrote {} rows to {}", experiment, out.table.len(), cfg.out.display());
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
