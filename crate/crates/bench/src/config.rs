//! Experiment configuration and its validation.

use std::fmt;
use std::path::PathBuf;

use crate::error::{BenchError, BenchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    RidgePrecision,
    SvmHpo,
    Distill,
    Lasso,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::RidgePrecision => "ridge-precision",
            Experiment::SvmHpo => "svm-hpo",
            Experiment::Distill => "distill",
            Experiment::Lasso => "lasso",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverKind {
    Gd,
    Pg,
    Md,
    Bcd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Condition {
    Stationary,
    Kkt,
    PgFp,
    ProjFp,
    MdFp,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Gd => "gd",
            SolverKind::Pg => "pg",
            SolverKind::Md => "md",
            SolverKind::Bcd => "bcd",
        }
    }
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Stationary => "stationary",
            Condition::Kkt => "kkt",
            Condition::PgFp => "pg-fp",
            Condition::ProjFp => "proj-fp",
            Condition::MdFp => "md-fp",
        }
    }
}

/// `m` samples, `p` features, `k` classes. Experiments without classes
/// ignore `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub m: usize,
    pub p: usize,
    pub k: usize,
}

impl Dims {
    /// Parses `m,p` or `m,p,k`.
    pub fn parse(s: &str) -> BenchResult<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(BenchError::Config(format!("expected dims as m,p[,k], got {s:?}")));
        }
        let num = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| BenchError::Config(format!("invalid dimension {t:?} in {s:?}")))
        };
        Ok(Self {
            m: num(parts[0])?,
            p: num(parts[1])?,
            k: if parts.len() == 3 { num(parts[2])? } else { 1 },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub dims: Dims,
    pub inner_iters: usize,
    /// Outer steps; for the lasso sweep, the number of grid points.
    pub outer_iters: usize,
    pub solver: SolverKind,
    pub condition: Condition,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (dims, inner, outer, solver, condition) = match experiment {
            Experiment::RidgePrecision => (
                Dims { m: 50, p: 50, k: 1 },
                200,
                0,
                SolverKind::Gd,
                Condition::Stationary,
            ),
            Experiment::SvmHpo => (
                Dims { m: 30, p: 50, k: 3 },
                1000,
                20,
                SolverKind::Pg,
                Condition::ProjFp,
            ),
            Experiment::Distill => (
                Dims { m: 150, p: 16, k: 3 },
                500,
                100,
                SolverKind::Gd,
                Condition::Stationary,
            ),
            Experiment::Lasso => (
                Dims { m: 100, p: 20, k: 1 },
                2000,
                40,
                SolverKind::Pg,
                Condition::PgFp,
            ),
        };
        Self {
            experiment,
            seed: 0,
            dims,
            inner_iters: inner,
            outer_iters: outer,
            solver,
            condition,
            out: PathBuf::from(format!("{}.csv", experiment.name())),
        }
    }

    pub fn validate(&self) -> BenchResult<()> {
        let Dims { m, p, k } = self.dims;
        let fail = |msg: String| Err(BenchError::Config(format!("{}: {msg}", self.experiment)));
        if m == 0 || p == 0 || k == 0 {
            return fail(format!("dimensions must be positive, got {m},{p},{k}"));
        }
        if self.inner_iters == 0 {
            return fail("inner iteration budget must be positive".into());
        }
        let (solvers, conditions): (&[SolverKind], &[Condition]) = match self.experiment {
            Experiment::RidgePrecision => (&[SolverKind::Gd], &[Condition::Stationary, Condition::PgFp]),
            Experiment::SvmHpo => (
                &[SolverKind::Pg, SolverKind::Md, SolverKind::Bcd],
                &[Condition::PgFp, Condition::ProjFp, Condition::MdFp],
            ),
            Experiment::Distill => (&[SolverKind::Gd], &[Condition::Stationary]),
            Experiment::Lasso => (&[SolverKind::Pg], &[Condition::PgFp]),
        };
        if !solvers.contains(&self.solver) {
            return fail(format!("solver {} is not available", self.solver.name()));
        }
        if !conditions.contains(&self.condition) {
            return fail(format!("condition {} is not available", self.condition.name()));
        }
        match self.experiment {
            Experiment::SvmHpo => {
                if m > 200 || p > 50 || k > 5 || k < 2 {
                    return fail(format!("dims must satisfy m ≤ 200, p ≤ 50, 2 ≤ k ≤ 5, got {m},{p},{k}"));
                }
            }
            Experiment::Distill => {
                if p > 16 || k > 3 || k < 2 || m < k {
                    return fail(format!("dims must satisfy p ≤ 16, 2 ≤ k ≤ 3, m ≥ k, got {m},{p},{k}"));
                }
            }
            Experiment::Lasso | Experiment::RidgePrecision => {
                if k != 1 {
                    return fail(format!("takes dims m,p without classes, got k = {k}"));
                }
            }
        }
        if self.experiment != Experiment::RidgePrecision && self.outer_iters == 0 {
            return fail("outer iteration budget must be positive".into());
        }
        Ok(())
    }
}
