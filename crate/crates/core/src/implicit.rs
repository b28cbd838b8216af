//! Jacobian products of a root `x*(θ)` of `F(x, θ) = 0`.
//!
//! With `A = −∂₁F` and `B = ∂₂F` evaluated at an approximate root `x̂`, the
//! Jacobian estimate `J` solves `A J = B`. JVPs solve `A (Jw) = Bw`; VJPs solve
//! `Aᵀu = v` once and return `Bᵀu`.

use std::time::Instant;

use rayon::prelude::*;

use crate::autodiff::{self, DiffFn2, Scalar};
use crate::error::{check_len, Error, Result};
use crate::linalg::{
    bicgstab_solve, cg_solve, gmres_solve, normal_cg_solve, DenseMatrix, DenseVector, LinearMap,
    LuFactorization, SolveReport,
};

/// Query points closer than this to a kink of the mapping are flagged.
pub const KINK_FLAG_DISTANCE: f64 = 1e-9;

/// Root formulation `F(x, θ) = 0` with `F: R^d × R^n → R^d`.
#[derive(Debug, Clone)]
pub struct RootProblem<F> {
    f_map: F,
    symmetric: bool,
}

impl<F: DiffFn2> RootProblem<F> {
    pub fn new(f_map: F) -> Result<Self> {
        check_len("root mapping output (must equal dim_x)", f_map.dim_x(), f_map.dim_out())?;
        Ok(Self {
            f_map,
            symmetric: false,
        })
    }

    /// Declares `∂₁F` symmetric, which enables CG and makes `Aᵀ = A`.
    pub fn with_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    pub fn f_map(&self) -> &F {
        &self.f_map
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn dim_x(&self) -> usize {
        self.f_map.dim_x()
    }

    pub fn dim_theta(&self) -> usize {
        self.f_map.dim_theta()
    }

    /// `F(x, θ)` with dimension, domain and finiteness checks.
    pub fn residual(&self, x: &[f64], theta: &[f64]) -> Result<DenseVector> {
        autodiff::eval(&self.f_map, x, theta)
    }
}

/// Fixed-point formulation `x = T(x, θ)`.
#[derive(Debug, Clone)]
pub struct FixedPointProblem<T> {
    t_map: T,
    symmetric: bool,
}

impl<T: DiffFn2> FixedPointProblem<T> {
    pub fn new(t_map: T) -> Result<Self> {
        check_len("fixed-point mapping output (must equal dim_x)", t_map.dim_x(), t_map.dim_out())?;
        Ok(Self {
            t_map,
            symmetric: false,
        })
    }

    /// Declares `∂₁T` symmetric.
    pub fn with_symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    pub fn t_map(&self) -> &T {
        &self.t_map
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `T(x, θ)` with checks.
    pub fn apply(&self, x: &[f64], theta: &[f64]) -> Result<DenseVector> {
        autodiff::eval(&self.t_map, x, theta)
    }

    /// The residual `F(x, θ) = T(x, θ) − x`.
    pub fn to_root(self) -> RootProblem<Residual<T>> {
        RootProblem {
            symmetric: self.symmetric,
            f_map: Residual(self.t_map),
        }
    }
}

/// `F(x, θ) = T(x, θ) − x`, so `∂₁F = ∂₁T − I` and `∂₂F = ∂₂T`.
#[derive(Debug, Clone)]
pub struct Residual<T>(pub T);

impl<T: DiffFn2> DiffFn2 for Residual<T> {
    fn dim_x(&self) -> usize {
        self.0.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.0.dim_theta()
    }
    fn dim_out(&self) -> usize {
        self.0.dim_out()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let mut t = self.0.eval(x, theta);
        for (ti, &xi) in t.iter_mut().zip(x) {
            *ti -= xi;
        }
        t
    }
    fn user_jvp_x(&self, x: &[f64], theta: &[f64], v: &[f64]) -> Option<DenseVector> {
        self.0.user_jvp_x(x, theta, v).map(|tv| tv.sub(v))
    }
    fn user_vjp_x(&self, x: &[f64], theta: &[f64], w: &[f64]) -> Option<DenseVector> {
        self.0.user_vjp_x(x, theta, w).map(|tw| tw.sub(w))
    }
    fn user_jvp_theta(&self, x: &[f64], theta: &[f64], w: &[f64]) -> Option<DenseVector> {
        self.0.user_jvp_theta(x, theta, w)
    }
    fn user_vjp_theta(&self, x: &[f64], theta: &[f64], v: &[f64]) -> Option<DenseVector> {
        self.0.user_vjp_theta(x, theta, v)
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        self.0.check_domain(x, theta)
    }
    fn kink_distance(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.0.kink_distance(x, theta)
    }
}

/// Krylov method for the implicit linear systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// CG for problems declared symmetric, BiCGSTAB otherwise.
    #[default]
    Auto,
    Cg,
    Gmres,
    BiCgStab,
    NormalCg,
}

/// Linear-solve settings. `None` budgets resolve to `10·d` iterations and a
/// GMRES restart of `min(30, d)`.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitConfig {
    pub linear_solver: LinearSolver,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub restart: Option<usize>,
    /// Re-solve through the normal equations when the primary solve fails.
    pub fallback_to_least_squares: bool,
}

impl Default for ImplicitConfig {
    fn default() -> Self {
        Self {
            linear_solver: LinearSolver::Auto,
            tol: 1e-10,
            max_iter: None,
            restart: None,
            fallback_to_least_squares: true,
        }
    }
}

impl ImplicitConfig {
    pub fn with_solver(mut self, solver: LinearSolver) -> Self {
        self.linear_solver = solver;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol > 0.0 && self.tol.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "linear-solve tolerance must be positive, got {}",
                self.tol
            )))
        }
    }
}

/// Jacobian estimate `J(x̂, θ)` with one solve report per column.
#[derive(Debug, Clone)]
pub struct JacobianEstimate {
    pub matrix: DenseMatrix,
    pub reports: Vec<SolveReport>,
}

impl JacobianEstimate {
    pub fn any_fallback(&self) -> bool {
        self.reports.iter().any(|r| r.used_least_squares_fallback)
    }

    pub fn near_kink(&self) -> bool {
        self.reports.iter().any(|r| r.near_kink)
    }
}

fn nan_vector(n: usize) -> DenseVector {
    DenseVector::filled(n, f64::NAN)
}

fn check_query<F: DiffFn2>(rp: &RootProblem<F>, x: &[f64], theta: &[f64]) -> Result<()> {
    rp.residual(x, theta).map(|_| ())
}

/// `A = −∂₁F(x, θ)` as a matrix-free operator.
pub fn a_operator<'a, F: DiffFn2>(
    rp: &'a RootProblem<F>,
    x: &'a [f64],
    theta: &'a [f64],
) -> Result<LinearMap<'a>> {
    check_query(rp, x, theta)?;
    let f = &rp.f_map;
    let d = rp.dim_x();
    let forward = move |v: &[f64]| {
        autodiff::jvp_x(f, x, theta, v)
            .map(|jv| jv.scaled(-1.0))
            .unwrap_or_else(|_| nan_vector(d))
    };
    let op = LinearMap::new(d, d, forward);
    if rp.symmetric {
        return Ok(op.with_transpose(forward));
    }
    if f.user_vjp_x(x, theta, &vec![0.0; d]).is_some() {
        return Ok(op.with_transpose(move |w: &[f64]| {
            autodiff::vjp_x(f, x, theta, w)
                .map(|jw| jw.scaled(-1.0))
                .unwrap_or_else(|_| nan_vector(d))
        }));
    }
    Ok(op)
}

/// `B = ∂₂F(x, θ)` as a matrix-free operator.
pub fn b_operator<'a, F: DiffFn2>(
    rp: &'a RootProblem<F>,
    x: &'a [f64],
    theta: &'a [f64],
) -> Result<LinearMap<'a>> {
    check_query(rp, x, theta)?;
    let f = &rp.f_map;
    let (d, n) = (rp.dim_x(), rp.dim_theta());
    let op = LinearMap::new(d, n, move |w: &[f64]| {
        autodiff::jvp_theta(f, x, theta, w).unwrap_or_else(|_| nan_vector(d))
    });
    if f.user_vjp_theta(x, theta, &vec![0.0; d]).is_some() {
        return Ok(op.with_transpose(move |v: &[f64]| {
            autodiff::vjp_theta(f, x, theta, v).unwrap_or_else(|_| nan_vector(n))
        }));
    }
    Ok(op)
}

/// Solves `op z = rhs` with the configured method and the least-squares
/// fallback.
pub fn solve_linear(
    op: &LinearMap<'_>,
    rhs: &[f64],
    cfg: &ImplicitConfig,
    symmetric: bool,
) -> Result<(DenseVector, SolveReport)> {
    cfg.validate()?;
    let n = op.dim_in();
    let max_iter = cfg.max_iter.unwrap_or(10 * n.max(1));
    let restart = cfg.restart.unwrap_or(30.min(n.max(1)));
    let method = match cfg.linear_solver {
        LinearSolver::Auto if symmetric => LinearSolver::Cg,
        LinearSolver::Auto => LinearSolver::BiCgStab,
        m => m,
    };
    let (x, report) = match method {
        LinearSolver::Cg => cg_solve(op, rhs, cfg.tol, max_iter)?,
        LinearSolver::Gmres => gmres_solve(op, rhs, cfg.tol, max_iter, restart)?,
        LinearSolver::BiCgStab => bicgstab_solve(op, rhs, cfg.tol, max_iter)?,
        LinearSolver::NormalCg | LinearSolver::Auto => normal_cg_solve(op, rhs, cfg.tol, max_iter)?,
    };
    if report.converged {
        return Ok((x, report));
    }
    if !cfg.fallback_to_least_squares || method == LinearSolver::NormalCg {
        return Err(Error::SolveFailed { report });
    }
    log::warn!(
        "{method:?} did not converge (relative residual {:e}); falling back to least squares",
        report.final_residual_norm
    );
    let (x, mut fallback) = normal_cg_solve(op, rhs, cfg.tol, max_iter.max(10 * n))?;
    fallback.iterations += report.iterations;
    fallback.wall_time += report.wall_time;
    fallback.used_least_squares_fallback = true;
    if fallback.converged {
        Ok((x, fallback))
    } else {
        Err(Error::SolveFailed { report: fallback })
    }
}

fn flag_kink<F: DiffFn2>(rp: &RootProblem<F>, x: &[f64], theta: &[f64], report: &mut SolveReport) {
    if rp.f_map.kink_distance(x, theta) < KINK_FLAG_DISTANCE {
        log::warn!("query point lies within {KINK_FLAG_DISTANCE:e} of a kink");
        report.near_kink = true;
    }
}

/// `J w` from `A (Jw) = B w`.
pub fn root_jvp<F: DiffFn2>(
    rp: &RootProblem<F>,
    x: &[f64],
    theta: &[f64],
    w: &[f64],
    cfg: &ImplicitConfig,
) -> Result<(DenseVector, SolveReport)> {
    let started = Instant::now();
    check_len("root_jvp direction", rp.dim_theta(), w.len())?;
    let a = a_operator(rp, x, theta)?;
    let bw = autodiff::jvp_theta(&rp.f_map, x, theta, w)?;
    let (jw, mut report) = solve_linear(&a, &bw, cfg, rp.symmetric)?;
    flag_kink(rp, x, theta, &mut report);
    report.wall_time = started.elapsed();
    Ok((jw, report))
}

/// Adjoint variable `u` with `Aᵀu = v`; reusable across right factors `B`.
pub fn adjoint_solve<F: DiffFn2>(
    rp: &RootProblem<F>,
    x: &[f64],
    theta: &[f64],
    v: &[f64],
    cfg: &ImplicitConfig,
) -> Result<(DenseVector, SolveReport)> {
    let started = Instant::now();
    check_len("root_vjp cotangent", rp.dim_x(), v.len())?;
    let a = a_operator(rp, x, theta)?;
    let at = a.transposed();
    let (u, mut report) = solve_linear(&at, v, cfg, rp.symmetric)?;
    flag_kink(rp, x, theta, &mut report);
    report.wall_time = started.elapsed();
    Ok((u, report))
}

/// `Bᵀu` for an adjoint variable from [`adjoint_solve`].
pub fn vjp_from_adjoint<F: DiffFn2>(
    rp: &RootProblem<F>,
    x: &[f64],
    theta: &[f64],
    u: &[f64],
) -> Result<DenseVector> {
    autodiff::vjp_theta(&rp.f_map, x, theta, u)
}

/// `Jᵀ v = Bᵀ u` with `Aᵀu = v`.
pub fn root_vjp<F: DiffFn2>(
    rp: &RootProblem<F>,
    x: &[f64],
    theta: &[f64],
    v: &[f64],
    cfg: &ImplicitConfig,
) -> Result<(DenseVector, SolveReport)> {
    let (u, mut report) = adjoint_solve(rp, x, theta, v, cfg)?;
    let started = Instant::now();
    let out = vjp_from_adjoint(rp, x, theta, &u)?;
    report.wall_time += started.elapsed();
    Ok((out, report))
}

/// Full `J(x̂, θ)`, one independent solve per column of `B`, evaluated in
/// parallel.
pub fn jacobian_estimate<F: DiffFn2>(
    rp: &RootProblem<F>,
    x: &[f64],
    theta: &[f64],
    cfg: &ImplicitConfig,
) -> Result<JacobianEstimate> {
    let a = a_operator(rp, x, theta)?;
    let n = rp.dim_theta();
    let kink = rp.f_map.kink_distance(x, theta) < KINK_FLAG_DISTANCE;
    let columns: Vec<(DenseVector, SolveReport)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let started = Instant::now();
            let e = DenseVector::basis(n, j);
            let bj = autodiff::jvp_theta(&rp.f_map, x, theta, &e)?;
            let (col, mut report) = solve_linear(&a, &bj, cfg, rp.symmetric)?;
            report.near_kink = kink;
            report.wall_time = started.elapsed();
            Ok((col, report))
        })
        .collect::<Result<_>>()?;
    let (cols, reports): (Vec<_>, Vec<_>) = columns.into_iter().unzip();
    let matrix = if cols.is_empty() {
        DenseMatrix::zeros(rp.dim_x(), 0)
    } else {
        DenseMatrix::from_columns(&cols)?
    };
    Ok(JacobianEstimate { matrix, reports })
}

/// `J(x̂, θ)` by materializing `∂₁F` and `∂₂F` and one dense LU solve;
/// preferable to [`jacobian_estimate`] when `d` is small.
pub fn jacobian_estimate_dense<F: DiffFn2>(
    rp: &RootProblem<F>,
    x: &[f64],
    theta: &[f64],
) -> Result<DenseMatrix> {
    check_query(rp, x, theta)?;
    let a = autodiff::jacobian_x(&rp.f_map, x, theta)?.scaled(-1.0);
    let b = autodiff::jacobian_theta(&rp.f_map, x, theta)?;
    LuFactorization::new(&a)?.solve(&b)
}

/// Gradient of `θ ↦ L(x*(θ))` given `outer_grad = ∇L(x̂)`: one adjoint solve.
pub fn hypergradient<F: DiffFn2>(
    rp: &RootProblem<F>,
    x: &[f64],
    theta: &[f64],
    outer_grad: &[f64],
    cfg: &ImplicitConfig,
) -> Result<DenseVector> {
    check_len("outer gradient", rp.dim_x(), outer_grad.len())?;
    if outer_grad.iter().all(|&g| g == 0.0) {
        check_query(rp, x, theta)?;
        return Ok(DenseVector::zeros(rp.dim_theta()));
    }
    root_vjp(rp, x, theta, outer_grad, cfg).map(|(g, _)| g)
}
