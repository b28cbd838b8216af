//! Projections, proximity operators and mirror maps.
//!
//! Every operator is written generically over [`Scalar`] so that the same code
//! evaluates the operator and, on dual numbers, its JVPs with respect to both
//! the input and the parameters. Operator parameters live in a `θ` slice whose
//! layout is documented on each type; [`Fixed`] binds them to constants.

mod mirror;
mod oracle;
mod projections;
mod prox;

pub use mirror::{BregmanProjOperator, EuclideanBregman, KlProductSimplex, KlSimplex, MirrorMap};
pub use oracle::{proj_oracle, SetDescriptor};
pub use projections::{
    kl_proj_simplex, proj_affine, proj_box, proj_box_section, proj_halfspace, proj_hyperplane,
    proj_l1_ball, proj_l2_ball, proj_linf_ball, proj_nonneg, proj_simplex, proj_simplex_jvp,
    AffineSet, BoxProj, BoxSection, Halfspace, Hyperplane, L1Ball, L2Ball, LinfBall, Nonneg,
    ProductSimplex, Simplex, WholeSpace, SUPPORT_TOL,
};
pub use prox::{
    prox_elastic_net, prox_group_lasso, prox_lasso, ElasticNet, GroupLasso, IdentityProx, Lasso,
    LassoScale, ProjectionProx,
};

use crate::autodiff::{ops, Scalar};
use crate::error::Result;

/// Euclidean projection `y ↦ argmin_{x ∈ C(θ)} ‖x − y‖`.
pub trait ProjOperator: Send + Sync {
    fn dim_theta(&self) -> usize;

    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S>;

    /// Validates `θ` (and the input dimension) before evaluation.
    fn check(&self, _dim: usize, _theta: &[f64]) -> Result<()> {
        Ok(())
    }

    /// Distance from `y` to the nearest point where the projection is not
    /// differentiable.
    fn kink_distance(&self, _y: &[f64], _theta: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Proximity operator `y ↦ argmin_x ½‖x − y‖² + η g(x, θ)`.
pub trait ProxOperator: Send + Sync {
    fn dim_theta(&self) -> usize;

    fn prox<S: Scalar>(&self, y: &[S], theta: &[S], eta: f64) -> Vec<S>;

    /// `g(x, θ)`; indicators return 0 (feasibility is the caller's concern).
    fn penalty(&self, x: &[f64], theta: &[f64]) -> f64;

    fn check(&self, _dim: usize, _theta: &[f64]) -> Result<()> {
        Ok(())
    }

    fn kink_distance(&self, _y: &[f64], _theta: &[f64], _eta: f64) -> f64 {
        f64::INFINITY
    }
}

/// An operator with its parameters bound to constants (`dim_theta = 0`).
#[derive(Debug, Clone)]
pub struct Fixed<T> {
    pub inner: T,
    pub theta: Vec<f64>,
}

impl<T> Fixed<T> {
    pub fn new(inner: T, theta: Vec<f64>) -> Self {
        Self { inner, theta }
    }
}

impl<P: ProjOperator> ProjOperator for Fixed<P> {
    fn dim_theta(&self) -> usize {
        0
    }

    fn project<S: Scalar>(&self, y: &[S], _theta: &[S]) -> Vec<S> {
        self.inner.project(y, &ops::lift::<S>(&self.theta))
    }

    fn check(&self, dim: usize, _theta: &[f64]) -> Result<()> {
        crate::error::check_len("bound parameters", self.inner.dim_theta(), self.theta.len())?;
        self.inner.check(dim, &self.theta)
    }

    fn kink_distance(&self, y: &[f64], _theta: &[f64]) -> f64 {
        self.inner.kink_distance(y, &self.theta)
    }
}

impl<P: ProxOperator> ProxOperator for Fixed<P> {
    fn dim_theta(&self) -> usize {
        0
    }

    fn prox<S: Scalar>(&self, y: &[S], _theta: &[S], eta: f64) -> Vec<S> {
        self.inner.prox(y, &ops::lift::<S>(&self.theta), eta)
    }

    fn penalty(&self, x: &[f64], _theta: &[f64]) -> f64 {
        self.inner.penalty(x, &self.theta)
    }

    fn check(&self, dim: usize, _theta: &[f64]) -> Result<()> {
        crate::error::check_len("bound parameters", self.inner.dim_theta(), self.theta.len())?;
        self.inner.check(dim, &self.theta)
    }

    fn kink_distance(&self, y: &[f64], _theta: &[f64], eta: f64) -> f64 {
        self.inner.kink_distance(y, &self.theta, eta)
    }
}

/// `clip(v, lo, hi)` with scalar bounds; the derivative follows whichever
/// branch is active and the bound at ties.
pub(crate) fn clamp_s<S: Scalar>(v: S, lo: S, hi: S) -> S {
    if v.value() <= lo.value() {
        lo
    } else if v.value() >= hi.value() {
        hi
    } else {
        v
    }
}
