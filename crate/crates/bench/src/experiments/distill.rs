//! Dataset distillation: learn one prototype per class such that a
//! multinomial logistic model trained on the prototypes alone fits the full
//! training set.
//!
//! Inner: `x*(θ) = argmin_x (1/k) Σ_c ℓ(c, θ_c x) + ε‖x‖²`, with prototypes
//! `θ ∈ R^{k×p}` and weights `x ∈ R^{p×k}`, both row-major.
//! Outer: `min_θ (1/m) Σ_i ℓ(y_i, X_i x*(θ))`, with `ℓ` the softmax
//! cross-entropy.

use idiff::autodiff::{ops, Scalar, ScalarFn2};
use idiff::conditions::{stationary_condition, StationaryMap};
use idiff::implicit::RootProblem;
use idiff::linalg::{DenseMatrix, DenseVector};
use idiff::solvers::{gradient_descent, outer_descent, BilevelProblem, OuterConfig, StepRule};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use super::{Phases, RunOutput};
use crate::config::ExperimentConfig;
use crate::data::{gen_classification, Classification};
use crate::error::BenchResult;
use crate::rng::{stream, stream_rng};
use crate::table::CsvTable;

pub const COLUMNS: [&str; 2] = ["outer_step", "outer_loss"];
pub const EPSILON: f64 = 1e-3;
pub const INFORMATIVE_FRAC: f64 = 1.0;
pub const OUTER_STEP: f64 = 1.0;
pub const OUTER_MOMENTUM: f64 = 0.9;

/// Inner objective; `θ` holds the prototypes, class `c` in row `c`.
#[derive(Debug, Clone, Copy)]
pub struct DistillInner {
    pub p: usize,
    pub k: usize,
    pub epsilon: f64,
}

impl DistillInner {
    fn logits<S: Scalar>(&self, x: &[S], row: &[S]) -> Vec<S> {
        (0..self.k)
            .map(|l| {
                let mut acc = S::zero();
                for j in 0..self.p {
                    acc += row[j] * x[j * self.k + l];
                }
                acc
            })
            .collect()
    }
}

impl ScalarFn2 for DistillInner {
    fn dim_x(&self) -> usize {
        self.p * self.k
    }
    fn dim_theta(&self) -> usize {
        self.k * self.p
    }
    fn value<S: Scalar>(&self, x: &[S], theta: &[S]) -> S {
        let mut loss = S::zero();
        for c in 0..self.k {
            let z = self.logits(x, &theta[c * self.p..(c + 1) * self.p]);
            loss += ops::logsumexp(&z) - z[c];
        }
        loss / self.k as f64 + ops::sq_norm(x) * self.epsilon
    }
    fn gradient<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let mut g: Vec<S> = x.iter().map(|&v| v * (2.0 * self.epsilon)).collect();
        let w = 1.0 / self.k as f64;
        for c in 0..self.k {
            let row = &theta[c * self.p..(c + 1) * self.p];
            let mut s = ops::softmax(&self.logits(x, row));
            s[c] -= S::one();
            for j in 0..self.p {
                for l in 0..self.k {
                    g[j * self.k + l] += row[j] * s[l] * w;
                }
            }
        }
        g
    }
}

/// Mean softmax cross-entropy of `x` on the training set.
#[derive(Debug, Clone)]
pub struct DistillOuter {
    pub data: Classification,
}

impl DistillOuter {
    /// `(L, ∂ₓL)`.
    pub fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (m, p, k) = (self.data.samples(), self.data.features(), self.data.classes);
        let mut loss = 0.0;
        let mut g = vec![0.0; p * k];
        for i in 0..m {
            let z: Vec<f64> = (0..k)
                .map(|l| (0..p).map(|j| self.data.x[(i, j)] * x[j * k + l]).sum())
                .collect();
            let y = self.data.labels[i];
            loss += ops::logsumexp(&z) - z[y];
            let mut s = ops::softmax(&z);
            s[y] -= 1.0;
            for j in 0..p {
                for l in 0..k {
                    g[j * k + l] += self.data.x[(i, j)] * s[l];
                }
            }
        }
        let inv = 1.0 / m as f64;
        (loss * inv, g.into_iter().map(|v| v * inv).collect())
    }
}

pub struct DistillBilevel {
    pub inner: DistillInner,
    pub outer: DistillOuter,
    pub condition: RootProblem<StationaryMap<DistillInner>>,
    pub inner_iters: usize,
}

impl BilevelProblem for DistillBilevel {
    type Map = StationaryMap<DistillInner>;

    fn condition(&self) -> &RootProblem<Self::Map> {
        &self.condition
    }

    fn solve_inner(&self, theta: &[f64], warm_start: Option<&[f64]>) -> idiff::Result<DenseVector> {
        let zeros = vec![0.0; self.inner.dim_x()];
        let x0 = warm_start.unwrap_or(&zeros);
        gradient_descent(&self.inner, theta, x0, self.inner_iters, StepRule::Backtracking).map(|(x, _)| x)
    }

    fn outer(&self, x: &[f64], theta: &[f64]) -> (f64, DenseVector, DenseVector) {
        let (loss, g) = self.outer.evaluate(x);
        (loss, DenseVector::from_vec(g), DenseVector::zeros(theta.len()))
    }
}

/// Blobs and `N(0, 1)` starting prototypes.
pub fn distill_problem(cfg: &ExperimentConfig) -> BenchResult<(DistillBilevel, Vec<f64>)> {
    let (m, p, k) = (cfg.dims.m, cfg.dims.p, cfg.dims.k);
    let data = gen_classification(cfg.seed, m, p, k, INFORMATIVE_FRAC)?;
    let inner = DistillInner { p, k, epsilon: EPSILON };
    let mut init = stream_rng(cfg.seed, stream::INIT);
    let theta0: Vec<f64> = (0..k * p).map(|_| init.sample(StandardNormal)).collect();
    let problem = DistillBilevel {
        inner,
        outer: DistillOuter { data },
        condition: stationary_condition(inner)?,
        inner_iters: cfg.inner_iters,
    };
    Ok((problem, theta0))
}

pub fn exp_distill(cfg: &ExperimentConfig) -> BenchResult<RunOutput> {
    let mut phases = Phases::default();
    let (problem, theta0) = distill_problem(cfg)?;
    let ocfg = OuterConfig::new(OUTER_STEP, cfg.outer_iters).with_momentum(OUTER_MOMENTUM);
    let trace = phases.time("outer_descent", || outer_descent(&problem, &theta0, &ocfg))?;
    let mut table = CsvTable::new(COLUMNS);
    for (s, loss) in trace.losses.iter().enumerate() {
        table.push(vec![s as f64, *loss])?;
    }
    let (p, k) = (cfg.dims.p, cfg.dims.k);
    let protos = DenseMatrix::from_fn(k, p, |c, j| trace.final_theta()[c * p + j]);
    let mut proto_table = CsvTable::new((0..p).map(|j| format!("x{j}")));
    for c in 0..k {
        proto_table.push(protos.row(c).into_vec())?;
    }
    let mut out = RunOutput::new(table, phases);
    out.extra_tables.push(("prototypes".into(), proto_table));
    out.meta.insert("epsilon".into(), json!(EPSILON));
    out.meta.insert("outer_step".into(), json!(OUTER_STEP));
    out.meta.insert("outer_momentum".into(), json!(OUTER_MOMENTUM));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;
    use idiff::linalg::distance;

    #[test]
    fn inner_gradient_matches_forward_mode() {
        let f = DistillInner { p: 3, k: 2, epsilon: EPSILON };
        let x = [0.1, -0.2, 0.3, 0.0, 0.5, -0.4];
        let t = [1.0, 0.5, -1.0, 0.2, -0.3, 0.8];
        let a = f.gradient(&x, &t);
        let b = idiff::autodiff::forward_gradient(&f, &x, &t);
        assert!(distance(&a, &b) < 1e-12);
    }

    #[test]
    fn outer_gradient_matches_finite_differences() {
        let cfg = ExperimentConfig { dims: crate::config::Dims { m: 12, p: 3, k: 2 }, ..ExperimentConfig::defaults(Experiment::Distill) };
        let (problem, _) = distill_problem(&cfg).unwrap();
        let x = [0.1, -0.2, 0.3, 0.0, 0.5, -0.4];
        let (_, g) = problem.outer.evaluate(&x);
        let fd = idiff::autodiff::finite_diff_jacobian(
            |v| DenseVector::from_vec(vec![problem.outer.evaluate(v).0]),
            &x,
            1e-6,
        );
        assert!(distance(&g, fd.row(0).as_slice()) < 1e-8);
    }

    #[test]
    fn default_run_halves_the_loss() {
        let cfg = ExperimentConfig::defaults(Experiment::Distill);
        let out = exp_distill(&cfg).unwrap();
        let losses = out.table.column("outer_loss").unwrap();
        assert_eq!(losses.len(), cfg.outer_iters + 1);
        assert!(losses[cfg.outer_iters] <= 0.5 * losses[0], "{} -> {}", losses[0], losses[cfg.outer_iters]);
        assert_eq!(out.meta["epsilon"], json!(1e-3));
        assert_eq!(out.extra_tables[0].1.len(), cfg.dims.k);
    }

    #[test]
    fn first_row_is_the_loss_at_the_start() {
        let cfg = ExperimentConfig { outer_iters: 2, ..ExperimentConfig::defaults(Experiment::Distill) };
        let (problem, theta0) = distill_problem(&cfg).unwrap();
        let x0 = problem.solve_inner(&theta0, None).unwrap();
        let out = exp_distill(&cfg).unwrap();
        assert_eq!(out.table.rows()[0][1], problem.outer.evaluate(&x0).0);
    }
}
