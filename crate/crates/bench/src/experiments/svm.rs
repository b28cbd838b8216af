//! Regularization tuning for a multiclass SVM trained in the dual.
//!
//! Inner problem, with `θ = e^λ`, `x ∈ R^{m×k}` (row-major, each row on the
//! simplex) and the dual-primal map `W(x, θ) = X_trᵀ(Y_tr − x)/θ`:
//!
//! ```text
//! f(x, λ) = θ/2 ‖W(x, θ)‖² + ⟨x, Y_tr⟩
//! ```
//!
//! Outer problem: `L(λ) = ½‖X_val W(x*(λ), θ) − Y_val‖²`, minimized over `λ`.
//!
//! The inner problem is strongly convex when `m ≤ p` (full-rank Gram matrix),
//! which the default dimensions satisfy.

use idiff::autodiff::{Scalar, ScalarFn2};
use idiff::conditions::{mirror_descent_fp, projected_gradient_fp, ProxBlock};
use idiff::implicit::{ImplicitConfig, RootProblem};
use idiff::linalg::{sym_max_eigenvalue, DenseMatrix, DenseVector};
use idiff::operators::{KlProductSimplex, MirrorMap, ProductSimplex, ProjOperator, ProjectionProx, Simplex};
use idiff::solvers::{
    block_coordinate_descent, mirror_descent, outer_descent, proximal_gradient, total_hypergradient,
    BilevelProblem, OuterConfig, StepSchedule,
};
use idiff::autodiff::DiffFn2;
use serde_json::json;

use super::{relative_error, Phases, RunOutput};
use crate::config::{Condition, ExperimentConfig, SolverKind};
use crate::data::{gen_classification, Classification};
use crate::error::{BenchError, BenchResult};
use crate::table::CsvTable;

pub const COLUMNS: [&str; 4] = ["outer_step", "theta", "validation_loss", "hypergrad_fd_relerr"];

pub const INFORMATIVE_FRAC: f64 = 0.1;
pub const LAMBDA0: f64 = 0.0;
pub const OUTER_STEP: f64 = 0.05;
pub const OUTER_MOMENTUM: f64 = 0.5;
/// Central-difference half width in `λ`.
pub const FD_STEP: f64 = 1e-4;
/// Hypergradients below `FD_FLOOR · max(1, L)` in magnitude count as zero
/// when forming relative errors.
pub const FD_FLOOR: f64 = 1e-6;
/// Mass moved to the uniform distribution to make a dual point strictly
/// positive before evaluating the KL mirror map.
pub const INTERIOR_SHIFT: f64 = 1e-12;

/// `f(x, λ) = e^λ/2 ‖W‖² + ⟨x, Y⟩` with `W = X_trᵀ(Y − x)e^{−λ}`.
#[derive(Debug, Clone)]
pub struct SvmDual {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub k: usize,
}

impl SvmDual {
    pub fn new(data: &Classification) -> Self {
        Self {
            x: data.x.clone(),
            y: data.one_hot(),
            k: data.classes,
        }
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    /// Row-major `p × k` primal weights `W(x, θ)`.
    pub fn primal<S: Scalar>(&self, x: &[S], lambda: S) -> Vec<S> {
        let (m, p, k) = (self.x.rows(), self.x.cols(), self.k);
        let mut w = vec![S::zero(); p * k];
        for i in 0..m {
            for c in 0..k {
                let r = -x[i * k + c] + self.y[i * k + c];
                for j in 0..p {
                    w[j * k + c] += r * self.x[(i, j)];
                }
            }
        }
        let inv = (-lambda).exp();
        w.into_iter().map(|v| v * inv).collect()
    }

    /// `max_i` eigenvalue of `X_tr X_trᵀ`; the gradient is `e^{−λ}` times
    /// this Lipschitz.
    pub fn gram_max_eigenvalue(&self) -> BenchResult<f64> {
        let gram = self.x.matmul(&self.x.transpose())?;
        Ok(sym_max_eigenvalue(&gram, 1e-12, 100 * gram.rows().max(10))?)
    }

    fn gram_diagonal(&self) -> Vec<f64> {
        (0..self.x.rows())
            .map(|i| (0..self.x.cols()).map(|j| self.x[(i, j)].powi(2)).sum())
            .collect()
    }
}

impl ScalarFn2 for SvmDual {
    fn dim_x(&self) -> usize {
        self.x.rows() * self.k
    }
    fn dim_theta(&self) -> usize {
        1
    }
    fn value<S: Scalar>(&self, x: &[S], theta: &[S]) -> S {
        let w = self.primal(x, theta[0]);
        let mut acc = S::zero();
        for v in &w {
            acc += *v * *v;
        }
        let mut lin = S::zero();
        for (xi, yi) in x.iter().zip(&self.y) {
            lin += *xi * *yi;
        }
        acc * theta[0].exp() * 0.5 + lin
    }
    fn gradient<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let (m, p, k) = (self.x.rows(), self.x.cols(), self.k);
        let w = self.primal(x, theta[0]);
        let mut g: Vec<S> = self.y.iter().map(|&v| S::cst(v)).collect();
        for i in 0..m {
            for j in 0..p {
                let xij = self.x[(i, j)];
                for c in 0..k {
                    g[i * k + c] -= w[j * k + c] * xij;
                }
            }
        }
        g
    }
}

/// `L(x, λ) = ½‖X_val W(x, λ) − Y_val‖²` with closed-form partials.
#[derive(Debug, Clone)]
pub struct SvmOuter {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
}

impl SvmOuter {
    pub fn new(data: &Classification) -> Self {
        Self {
            x: data.x.clone(),
            y: data.one_hot(),
        }
    }

    /// `(L, ∂ₓL, ∂_λL)`.
    pub fn evaluate(&self, f: &SvmDual, x: &[f64], lambda: f64) -> (f64, Vec<f64>, f64) {
        let (m, p, k) = (f.x.rows(), f.x.cols(), f.k);
        let w = f.primal(x, lambda);
        let mv = self.x.rows();
        let mut r = vec![0.0; mv * k];
        for i in 0..mv {
            for c in 0..k {
                let pred: f64 = (0..p).map(|j| self.x[(i, j)] * w[j * k + c]).sum();
                r[i * k + c] = pred - self.y[i * k + c];
            }
        }
        let loss = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
        // G = X_valᵀ R, the gradient with respect to W.
        let mut gw = vec![0.0; p * k];
        for i in 0..mv {
            for j in 0..p {
                for c in 0..k {
                    gw[j * k + c] += self.x[(i, j)] * r[i * k + c];
                }
            }
        }
        let inv = (-lambda).exp();
        let mut gx = vec![0.0; m * k];
        for i in 0..m {
            for c in 0..k {
                let s: f64 = (0..p).map(|j| f.x[(i, j)] * gw[j * k + c]).sum();
                gx[i * k + c] = -inv * s;
            }
        }
        let glambda = -gw.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        (loss, gx, glambda)
    }
}

/// Shifts `x` towards the uniform point on each simplex row so that every
/// coordinate is positive.
pub fn interior(x: &[f64], k: usize) -> Vec<f64> {
    let u = 1.0 / k as f64;
    x.iter()
        .map(|&v| (1.0 - INTERIOR_SHIFT) * v + INTERIOR_SHIFT * u)
        .collect()
}

/// Inner solvers for the dual problem with step sizes derived from the
/// Gram matrix.
#[derive(Debug, Clone)]
pub struct SvmSolvers {
    pub f: SvmDual,
    gram_max: f64,
    gram_diag: Vec<f64>,
}

impl SvmSolvers {
    pub fn new(f: SvmDual) -> BenchResult<Self> {
        let gram_max = f.gram_max_eigenvalue()?;
        let gram_diag = f.gram_diagonal();
        if gram_diag.iter().any(|&d| !(d > 0.0)) {
            return Err(BenchError::numerical("a training sample has zero features"));
        }
        Ok(Self { f, gram_max, gram_diag })
    }

    /// `1/L` for the gradient of `f(·, λ)`.
    pub fn step(&self, lambda: f64) -> f64 {
        lambda.exp() / self.gram_max
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.f.k as f64; self.f.dim_x()]
    }

    pub fn solve(&self, kind: SolverKind, lambda: f64, x0: &[f64], iters: usize) -> idiff::Result<DenseVector> {
        let k = self.f.k;
        let theta = [lambda];
        let eta = self.step(lambda);
        match kind {
            SolverKind::Md => mirror_descent(
                &self.f,
                MirrorMap::Kl,
                &KlProductSimplex { block_len: k },
                &theta,
                &interior(x0, k),
                iters,
                StepSchedule::Constant(eta),
            ),
            SolverKind::Bcd => {
                let blocks: Vec<ProxBlock<ProjectionProx<Simplex>>> = (0..self.f.samples())
                    .map(|i| ProxBlock {
                        range: i * k..(i + 1) * k,
                        prox: ProjectionProx { proj: Simplex },
                        eta: lambda.exp() / self.gram_diag[i],
                    })
                    .collect();
                block_coordinate_descent(&self.f, &blocks, &theta, x0, iters)
            }
            SolverKind::Pg | SolverKind::Gd => proximal_gradient(
                &self.f,
                &ProjectionProx { proj: ProductSimplex { block_len: k } },
                &theta,
                x0,
                iters,
                eta,
                true,
            ),
        }
        .map(|(x, _)| x)
    }

    /// Accelerated projected gradient restarted every 500 steps until the
    /// fixed-point residual falls below `1e-13`.
    pub fn solve_tight(&self, lambda: f64, x0: &[f64]) -> idiff::Result<DenseVector> {
        const CHUNK: usize = 500;
        const MAX_CHUNKS: usize = 400;
        let proj = ProductSimplex { block_len: self.f.k };
        let eta = self.step(lambda);
        let mut x = x0.to_vec();
        for _ in 0..MAX_CHUNKS {
            x = self.solve(SolverKind::Pg, lambda, &x, CHUNK)?.into_vec();
            let g = self.f.gradient(&x, &[lambda]);
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
            let t = proj.project(&y, &[]);
            let res = x.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if res <= 1e-13 {
                return Ok(DenseVector::from_vec(x));
            }
        }
        Err(idiff::Error::NotConverged {
            what: "reference dual SVM solve",
            iterations: CHUNK * MAX_CHUNKS,
        })
    }
}

/// The bi-level problem with a chosen differentiation condition.
pub struct SvmBilevel<M> {
    pub solvers: SvmSolvers,
    pub outer: SvmOuter,
    pub condition: RootProblem<M>,
    pub solver: SolverKind,
    pub inner_iters: usize,
    /// Whether the condition needs strictly positive dual points.
    pub needs_interior: bool,
}

impl<M: DiffFn2> BilevelProblem for SvmBilevel<M> {
    type Map = M;

    fn condition(&self) -> &RootProblem<M> {
        &self.condition
    }

    fn solve_inner(&self, theta: &[f64], warm_start: Option<&[f64]>) -> idiff::Result<DenseVector> {
        let uniform = self.solvers.uniform();
        let x0 = warm_start.unwrap_or(&uniform);
        let x = self.solvers.solve(self.solver, theta[0], x0, self.inner_iters)?;
        Ok(if self.needs_interior {
            DenseVector::from_vec(interior(&x, self.solvers.f.k))
        } else {
            x
        })
    }

    fn outer(&self, x: &[f64], theta: &[f64]) -> (f64, DenseVector, DenseVector) {
        let (loss, gx, gl) = self.outer.evaluate(&self.solvers.f, x, theta[0]);
        (loss, DenseVector::from_vec(gx), DenseVector::from_vec(vec![gl]))
    }
}

fn implicit_config(dim: usize) -> ImplicitConfig {
    ImplicitConfig {
        tol: 1e-12,
        max_iter: Some(20 * dim),
        restart: Some(dim.min(100)),
        ..ImplicitConfig::default()
    }
}

pub struct SvmInstance {
    pub train: Classification,
    pub validation: Classification,
}

/// `m` training and `m` validation samples from one generator call, with
/// features scaled by `1/√p`.
pub fn svm_instance(seed: u64, m: usize, p: usize, k: usize) -> BenchResult<SvmInstance> {
    let mut all = gen_classification(seed, 2 * m, p, k, INFORMATIVE_FRAC)?;
    all.x = all.x.scaled(1.0 / (p as f64).sqrt());
    Ok(SvmInstance {
        train: all.slice(0..m),
        validation: all.slice(m..2 * m),
    })
}

/// Total hypergradient `dL/dλ` at `x` using the projected-gradient and the
/// mirror-descent fixed points, in that order.
pub fn hypergradients(
    solvers: &SvmSolvers,
    outer: &SvmOuter,
    x: &[f64],
    lambda: f64,
    eta: f64,
) -> BenchResult<(f64, f64)> {
    let f = &solvers.f;
    let cfg = implicit_config(f.dim_x());
    let pg = projected_gradient_fp(f.clone(), ProductSimplex { block_len: f.k }, eta)?.to_root();
    let md = mirror_descent_fp(f.clone(), MirrorMap::Kl, KlProductSimplex { block_len: f.k }, eta)?.to_root();
    let (_, g_pg) = total_hypergradient(&bilevel(solvers, outer, pg, SolverKind::Pg, 0, false), x, &[lambda], &cfg)?;
    let xi = interior(x, f.k);
    let (_, g_md) = total_hypergradient(&bilevel(solvers, outer, md, SolverKind::Md, 0, true), &xi, &[lambda], &cfg)?;
    Ok((g_pg[0], g_md[0]))
}

pub fn exp_svm_hpo(cfg: &ExperimentConfig) -> BenchResult<RunOutput> {
    let mut phases = Phases::default();
    let inst = svm_instance(cfg.seed, cfg.dims.m, cfg.dims.p, cfg.dims.k)?;
    let solvers = SvmSolvers::new(SvmDual::new(&inst.train))?;
    let outer = SvmOuter::new(&inst.validation);
    let eta = solvers.step(LAMBDA0);
    let dim = solvers.f.dim_x();
    let mut ocfg = OuterConfig::new(OUTER_STEP, cfg.outer_iters - 1).with_momentum(OUTER_MOMENTUM);
    ocfg.implicit = implicit_config(dim);
    let trace = phases.time("outer_descent", || -> BenchResult<_> {
        let f = solvers.f.clone();
        let k = f.k;
        Ok(match cfg.condition {
            Condition::MdFp => {
                let cond = mirror_descent_fp(f, MirrorMap::Kl, KlProductSimplex { block_len: k }, eta)?.to_root();
                outer_descent(&bilevel(&solvers, &outer, cond, cfg.solver, cfg.inner_iters, true), &[LAMBDA0], &ocfg)?
            }
            _ => {
                let cond = projected_gradient_fp(f, ProductSimplex { block_len: k }, eta)?.to_root();
                outer_descent(&bilevel(&solvers, &outer, cond, cfg.solver, cfg.inner_iters, false), &[LAMBDA0], &ocfg)?
            }
        })
    })?;

    let mut table = CsvTable::new(COLUMNS);
    let mut max_disagreement = 0.0f64;
    let mut fd_values = Vec::new();
    phases.time("diagnostics", || -> BenchResult<()> {
        for (s, theta) in trace.thetas.iter().enumerate() {
            let lambda = theta[0];
            let x = &trace.inner_solutions[s];
            let loss = trace.losses[s];
            let used = trace.hypergradients[s][0];
            let (g_pg, g_md) = hypergradients(&solvers, &outer, x, lambda, eta)?;
            let floor = FD_FLOOR * loss.abs().max(1.0);
            max_disagreement = max_disagreement.max(relative_error(g_md, g_pg, floor));
            let side = |l: f64| -> BenchResult<f64> {
                let xs = solvers.solve_tight(l, x)?;
                Ok(outer.evaluate(&solvers.f, &xs, l).0)
            };
            let fd = (side(lambda + FD_STEP)? - side(lambda - FD_STEP)?) / (2.0 * FD_STEP);
            fd_values.push(fd);
            table.push(vec![s as f64, lambda.exp(), loss, relative_error(used, fd, floor)])?;
        }
        Ok(())
    })?;
    let mut out = RunOutput::new(table, phases);
    out.meta.insert("outer_variable".into(), json!("lambda = ln(theta)"));
    out.meta.insert("max_md_pg_relative_disagreement".into(), json!(max_disagreement));
    out.meta.insert("fd_step".into(), json!(FD_STEP));
    out.meta.insert("fd_hypergradients".into(), json!(fd_values));
    out.meta.insert(
        "implicit_hypergradients".into(),
        json!(trace.hypergradients.iter().map(|g| g[0]).collect::<Vec<_>>()),
    );
    Ok(out)
}

fn bilevel<M>(
    solvers: &SvmSolvers,
    outer: &SvmOuter,
    condition: RootProblem<M>,
    solver: SolverKind,
    inner_iters: usize,
    needs_interior: bool,
) -> SvmBilevel<M> {
    SvmBilevel {
        solvers: solvers.clone(),
        outer: outer.clone(),
        condition,
        solver,
        inner_iters,
        needs_interior,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;
    use idiff::autodiff::grad_x;
    use idiff::autodiff::ScalarFn2;
    use idiff::linalg::{distance, norm};

    fn tiny() -> (SvmSolvers, SvmOuter) {
        let inst = svm_instance(4, 8, 12, 3).unwrap();
        (SvmSolvers::new(SvmDual::new(&inst.train)).unwrap(), SvmOuter::new(&inst.validation))
    }

    #[test]
    fn gradient_matches_forward_mode() {
        let (s, _) = tiny();
        let x = s.uniform();
        let analytic = s.f.gradient(&x, &[0.3]);
        let forward = idiff::autodiff::forward_gradient(&s.f, &x, &[0.3]);
        assert!(distance(&analytic, &forward) < 1e-10);
        let _ = grad_x(&s.f, &x, &[0.3]).unwrap();
    }

    #[test]
    fn outer_partials_match_finite_differences() {
        let (s, o) = tiny();
        let x: Vec<f64> = (0..s.f.dim_x()).map(|i| 0.2 + 0.05 * (i % 4) as f64).collect();
        let lambda = 0.4;
        let (_, gx, gl) = o.evaluate(&s.f, &x, lambda);
        let h = 1e-6;
        let fd_l = (o.evaluate(&s.f, &x, lambda + h).0 - o.evaluate(&s.f, &x, lambda - h).0) / (2.0 * h);
        assert!((fd_l - gl).abs() <= 1e-6 * gl.abs().max(1.0));
        for i in [0, 5, 11] {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (o.evaluate(&s.f, &xp, lambda).0 - o.evaluate(&s.f, &xm, lambda).0) / (2.0 * h);
            assert!((fd - gx[i]).abs() <= 1e-6 * gx[i].abs().max(1.0));
        }
    }

    /// The dual minimizer need not be unique; the objective value and the
    /// primal weights are.
    #[test]
    fn solvers_agree_on_the_dual_solution() {
        let (s, _) = tiny();
        let reference = s.solve_tight(0.0, &s.uniform()).unwrap();
        let w_ref = s.f.primal(&reference, 0.0);
        let f_ref = s.f.value(&reference, &[0.0]);
        let primal_gap = |x: &[f64]| distance(&s.f.primal(x, 0.0), &w_ref) / norm(&w_ref);
        let pg = s.solve(SolverKind::Pg, 0.0, &s.uniform(), 3000).unwrap();
        let bcd = s.solve(SolverKind::Bcd, 0.0, &s.uniform(), 3000).unwrap();
        assert!(primal_gap(&pg) < 1e-8, "{}", primal_gap(&pg));
        assert!(primal_gap(&bcd) < 1e-8, "{}", primal_gap(&bcd));
        let md = s.solve(SolverKind::Md, 0.0, &s.uniform(), 20000).unwrap();
        assert!(s.f.value(&md, &[0.0]) - f_ref < 1e-8 * f_ref.abs().max(1.0));
        assert!(primal_gap(&md) < 1e-3, "{}", primal_gap(&md));
    }

    #[test]
    fn default_run_meets_its_checks() {
        let cfg = ExperimentConfig::defaults(Experiment::SvmHpo);
        let out = exp_svm_hpo(&cfg).unwrap();
        assert_eq!(out.table.len(), cfg.outer_iters);
        let rel = out.table.column("hypergrad_fd_relerr").unwrap();
        assert!(rel.iter().all(|&r| r <= 1e-3), "{rel:?}");
        let losses = out.table.column("validation_loss").unwrap();
        assert!(losses.last().unwrap() <= &losses[0], "{losses:?}");
        let dis = out.meta["max_md_pg_relative_disagreement"].as_f64().unwrap();
        assert!(dis <= 1e-4, "{dis}");
    }
}
