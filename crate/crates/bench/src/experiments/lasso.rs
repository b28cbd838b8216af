//! Derivative of the lasso solution path `θ ↦ x*(θ)` with penalty
//! `e^θ‖x‖₁`, through the proximal-gradient fixed point, against central
//! differences of re-solved solutions.
//!
//! Grid points whose support differs at `θ ± KINK_RADIUS` are skipped. The
//! derivative columns hold Euclidean norms of the derivative vectors and
//! `relerr` is the norm of their difference relative to the finite-difference
//! norm.

use idiff::autodiff::{ops, Scalar, ScalarFn2};
use idiff::conditions::proximal_gradient_fp;
use idiff::implicit::jacobian_estimate_dense;
use idiff::linalg::{distance, norm, sym_max_eigenvalue, DenseMatrix, DenseVector};
use idiff::operators::Lasso;
use idiff::solvers::proximal_gradient;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use super::{Phases, RunOutput};
use crate::config::ExperimentConfig;
use crate::error::BenchResult;
use crate::rng::{stream, stream_rng};
use crate::table::CsvTable;

pub const COLUMNS: [&str; 5] = ["theta", "support_size", "dx_dtheta_implicit", "dx_dtheta_fd", "relerr"];
pub const KINK_RADIUS: f64 = 1e-4;
pub const FD_STEP: f64 = 1e-6;
/// Grid in `θ − ln λ_max`, where `λ_max = ‖Φᵀy‖_∞` zeroes the solution.
pub const GRID: (f64, f64) = (-4.0, 0.5);

/// `½‖Φx − y‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub phi: DenseMatrix,
    pub y: DenseVector,
}

impl ScalarFn2 for LeastSquares {
    fn dim_x(&self) -> usize {
        self.phi.cols()
    }
    fn dim_theta(&self) -> usize {
        0
    }
    fn value<S: Scalar>(&self, x: &[S], _theta: &[S]) -> S {
        let r = ops::sub(&ops::matvec(&self.phi, x), &ops::lift(&self.y));
        ops::sq_norm(&r) * 0.5
    }
    fn gradient<S: Scalar>(&self, x: &[S], _theta: &[S]) -> Vec<S> {
        let r = ops::sub(&ops::matvec(&self.phi, x), &ops::lift(&self.y));
        ops::matvec_t(&self.phi, &r)
    }
}

/// `Φ` with `N(0, 1/m)` entries; `y = Φx₀ + 0.1·N(0, I)` with `x₀` holding
/// `±1` on its first `⌈p/4⌉` coordinates.
pub fn lasso_instance(seed: u64, m: usize, p: usize) -> LeastSquares {
    let mut design = stream_rng(seed, stream::DESIGN);
    let scale = 1.0 / (m as f64).sqrt();
    let phi = DenseMatrix::from_fn(m, p, |_, _| scale * design.sample::<f64, _>(StandardNormal));
    let mut init = stream_rng(seed, stream::INIT);
    let active = p.div_ceil(4);
    let x0: Vec<f64> = (0..p)
        .map(|j| if j < active { if init.random::<bool>() { 1.0 } else { -1.0 } } else { 0.0 })
        .collect();
    let mut targets = stream_rng(seed, stream::TARGETS);
    let y = phi
        .matvec(&x0)
        .iter()
        .map(|v| v + 0.1 * targets.sample::<f64, _>(StandardNormal))
        .collect();
    LeastSquares { phi, y }
}

/// FISTA solves and derivatives along a grid of penalty exponents.
pub struct LassoSweep {
    pub f: LeastSquares,
    pub eta: f64,
    pub iters: usize,
}

impl LassoSweep {
    pub fn new(f: LeastSquares, iters: usize) -> BenchResult<Self> {
        let gram = f.phi.transpose().matmul(&f.phi)?;
        let l = sym_max_eigenvalue(&gram, 1e-12, 100 * gram.rows().max(10))?;
        Ok(Self { eta: 1.0 / l, f, iters })
    }

    pub fn lambda_max(&self) -> f64 {
        self.f.phi.matvec_t(&self.f.y).iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn solve(&self, theta: f64, x0: &[f64]) -> idiff::Result<DenseVector> {
        proximal_gradient(&self.f, &Lasso::exp(), &[theta], x0, self.iters, self.eta, true).map(|(x, _)| x)
    }

    pub fn implicit_derivative(&self, theta: f64, x: &[f64]) -> idiff::Result<DenseVector> {
        let rp = proximal_gradient_fp(self.f.clone(), Lasso::exp(), self.eta)?.to_root();
        let j = jacobian_estimate_dense(&rp, x, &[theta])?;
        Ok(DenseVector::from_vec(j.col(0).to_vec()))
    }

    /// Rows for every kink-free grid point.
    pub fn run(&self, thetas: &[f64]) -> BenchResult<CsvTable> {
        let mut table = CsvTable::new(COLUMNS);
        let mut warm = vec![0.0; self.f.dim_x()];
        for &theta in thetas {
            let x = self.solve(theta, &warm)?;
            let lo = self.solve(theta - KINK_RADIUS, &x)?;
            let hi = self.solve(theta + KINK_RADIUS, &x)?;
            let s = support(&x);
            if support(&lo) != s || support(&hi) != s {
                warm = x.into_vec();
                continue;
            }
            let implicit = self.implicit_derivative(theta, &x)?;
            let plus = self.solve(theta + FD_STEP, &x)?;
            let minus = self.solve(theta - FD_STEP, &x)?;
            let fd: Vec<f64> = plus.iter().zip(minus.iter()).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect();
            let fd_norm = norm(&fd);
            let relerr = distance(&implicit, &fd) / fd_norm.max(1e-12);
            table.push(vec![
                theta,
                s.iter().filter(|&&b| b).count() as f64,
                implicit.norm(),
                fd_norm,
                relerr,
            ])?;
            warm = x.into_vec();
        }
        Ok(table)
    }
}

fn support(x: &[f64]) -> Vec<bool> {
    x.iter().map(|v| *v != 0.0).collect()
}

/// `n` evenly spaced points of `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn exp_lasso(cfg: &ExperimentConfig) -> BenchResult<RunOutput> {
    let mut phases = Phases::default();
    let sweep = LassoSweep::new(lasso_instance(cfg.seed, cfg.dims.m, cfg.dims.p), cfg.inner_iters)?;
    let base = sweep.lambda_max().ln();
    let grid: Vec<f64> = linspace(GRID.0, GRID.1, cfg.outer_iters).iter().map(|g| base + g).collect();
    let table = phases.time("sweep", || sweep.run(&grid))?;
    let skipped = grid.len() - table.len();
    let mut out = RunOutput::new(table, phases);
    out.meta.insert("grid_points".into(), json!(grid.len()));
    out.meta.insert("skipped_near_kinks".into(), json!(skipped));
    out.meta.insert("kink_radius".into(), json!(KINK_RADIUS));
    out.meta.insert("fd_step".into(), json!(FD_STEP));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    fn identity_sweep(b: Vec<f64>) -> LassoSweep {
        let n = b.len();
        LassoSweep::new(
            LeastSquares { phi: DenseMatrix::identity(n), y: DenseVector::from_vec(b) },
            200,
        )
        .unwrap()
    }

    #[test]
    fn identity_design_matches_soft_thresholding() {
        let b = vec![2.0, -1.5, 0.3, -0.05];
        let sweep = identity_sweep(b.clone());
        let theta = 0.0f64;
        let x = sweep.solve(theta, &[0.0; 4]).unwrap();
        let d = sweep.implicit_derivative(theta, &x).unwrap();
        for i in 0..4 {
            let expected = if b[i].abs() > 1.0 { -theta.exp() * b[i].signum() } else { 0.0 };
            assert!((d[i] - expected).abs() < 1e-12, "{i}: {} vs {expected}", d[i]);
        }
    }

    #[test]
    fn identity_support_shrinks_with_theta() {
        let sweep = identity_sweep(vec![2.0, -1.5, 0.3, -0.05, 0.9]);
        let table = sweep.run(&linspace(-4.0, 1.0, 30)).unwrap();
        let sizes = table.column("support_size").unwrap();
        assert!(sizes.windows(2).all(|w| w[1] <= w[0]), "{sizes:?}");
        assert!(table.column("relerr").unwrap().iter().all(|&r| r <= 1e-6));
    }

    #[test]
    fn default_run_is_accurate_off_kinks() {
        let cfg = ExperimentConfig::defaults(Experiment::Lasso);
        let out = exp_lasso(&cfg).unwrap();
        assert!(out.table.len() >= cfg.outer_iters / 2);
        let rel = out.table.column("relerr").unwrap();
        assert!(rel.iter().all(|&r| r <= 1e-3), "{rel:?}");
    }
}
