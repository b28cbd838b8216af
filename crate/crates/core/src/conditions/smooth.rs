use crate::autodiff::{self, ops, DiffFn2, Dual, ScalarFn2, Scalar};
use crate::error::{Error, Result};
use crate::implicit::{FixedPointProblem, RootProblem};
use crate::linalg::LuFactorization;

pub(crate) fn positive_step(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be positive, got {eta}")))
    }
}

/// `F(x, θ) = ∇₁f(x, θ)`.
#[derive(Debug, Clone)]
pub struct StationaryMap<F>(pub F);

impl<F: ScalarFn2> DiffFn2 for StationaryMap<F> {
    fn dim_x(&self) -> usize {
        self.0.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.0.dim_theta()
    }
    fn dim_out(&self) -> usize {
        self.0.dim_x()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        self.0.gradient(x, theta)
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        self.0.check_domain(x, theta)
    }
}

/// Stationarity `∇₁f(x, θ) = 0`; `∂₁F` is the Hessian, declared symmetric.
pub fn stationary_condition<F: ScalarFn2>(f: F) -> Result<RootProblem<StationaryMap<F>>> {
    Ok(RootProblem::new(StationaryMap(f))?.with_symmetric(true))
}

/// `T(x, θ) = x − η∇₁f(x, θ)`.
#[derive(Debug, Clone)]
pub struct GradientStepMap<F> {
    pub f: F,
    pub eta: f64,
}

impl<F: ScalarFn2> DiffFn2 for GradientStepMap<F> {
    fn dim_x(&self) -> usize {
        self.f.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.f.dim_theta()
    }
    fn dim_out(&self) -> usize {
        self.f.dim_x()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        ops::step(x, self.eta, &self.f.gradient(x, theta))
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        self.f.check_domain(x, theta)
    }
}

/// Gradient-descent fixed point; `η` cancels in the implicit system.
pub fn gradient_descent_fp<F: ScalarFn2>(
    f: F,
    eta: f64,
) -> Result<FixedPointProblem<GradientStepMap<F>>> {
    positive_step(eta)?;
    Ok(FixedPointProblem::new(GradientStepMap { f, eta })?.with_symmetric(true))
}

/// `T(x, θ) = x − η [∂₁G(x, θ)]⁻¹ G(x, θ)`.
///
/// `∂₁G` is materialized densely inside every evaluation (one nested-dual
/// pass per column) and LU-factored.
#[derive(Debug, Clone)]
pub struct NewtonMap<G> {
    pub g: G,
    pub eta: f64,
}

impl<G: DiffFn2> DiffFn2 for NewtonMap<G> {
    fn dim_x(&self) -> usize {
        self.g.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.g.dim_theta()
    }
    fn dim_out(&self) -> usize {
        self.g.dim_x()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let d = x.len();
        let ts: Vec<Dual<S>> = theta.iter().map(|&t| Dual::constant(t)).collect();
        let mut xs: Vec<Dual<S>> = x.iter().map(|&v| Dual::constant(v)).collect();
        let mut rows = vec![vec![S::zero(); d]; d];
        let mut gx = Vec::new();
        for j in 0..d {
            xs[j].eps = S::one();
            let out = self.g.eval(&xs, &ts);
            xs[j].eps = S::zero();
            for (row, o) in rows.iter_mut().zip(&out) {
                row[j] = o.eps;
            }
            if j == 0 {
                gx = out.iter().map(|o| o.re).collect();
            }
        }
        match ops::lu_solve(rows, gx) {
            Ok(delta) => ops::step(x, self.eta, &delta),
            Err(_) => vec![S::cst(f64::NAN); d],
        }
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        self.g.check_domain(x, theta)?;
        LuFactorization::new(&autodiff::jacobian_x(&self.g, x, theta)?).map(|_| ())
    }
}

/// Newton fixed point of a root mapping `G`; at a root the implicit system
/// is `A = ηI`, `B = −η[∂₁G]⁻¹∂₂G`.
pub fn newton_fp<G: DiffFn2>(g_root: G, eta: f64) -> Result<FixedPointProblem<NewtonMap<G>>> {
    positive_step(eta)?;
    crate::error::check_len("newton root mapping output", g_root.dim_x(), g_root.dim_out())?;
    Ok(FixedPointProblem::new(NewtonMap { g: g_root, eta })?.with_symmetric(true))
}
