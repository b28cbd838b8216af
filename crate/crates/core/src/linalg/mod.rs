//! Dense storage, matrix-free operators and the linear solvers used by the
//! implicit-differentiation layer.

mod dense;
mod factor;
mod krylov;
mod linear_map;

use std::time::Duration;

pub use dense::{axpy, distance, dot, norm, DenseMatrix, DenseVector};
pub use factor::{
    cholesky, dense_solve, sym_max_eigenvalue, sym_min_eigenvalue, LuFactorization,
    SINGULAR_PIVOT_RTOL,
};
pub use krylov::{bicgstab_solve, cg_solve, gmres_solve, normal_cg_solve};
pub use linear_map::LinearMap;

/// Outcome of an iterative linear solve.
///
/// `final_residual_norm` is relative: `‖A x - b‖ / max(1, ‖b‖)`, or the
/// normal-equation analogue for least-squares solves.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    pub used_least_squares_fallback: bool,
    /// Set when the evaluation point lies within `1e-9` of a
    /// non-differentiability of the optimality mapping.
    pub near_kink: bool,
    pub wall_time: Duration,
}
