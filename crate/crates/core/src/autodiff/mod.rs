//! Forward-mode differentiation of two-argument mappings `F(x, θ)`.
//!
//! Mappings implement [`DiffFn2`] (vector valued) or [`ScalarFn2`] (scalar
//! valued) once, generically over [`Scalar`]. JVPs evaluate the mapping on
//! [`Dual`] numbers; second-order products nest duals. There is no reverse
//! tape: a VJP uses the mapping's own closure when it provides one and
//! otherwise materializes the Jacobian column by column.

mod dual;
pub mod ops;

pub use dual::{Dual, Scalar};

use crate::error::{check_len, Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

/// Vector-valued differentiable mapping `R^dim_x × R^dim_theta → R^dim_out`.
pub trait DiffFn2: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_theta(&self) -> usize;
    fn dim_out(&self) -> usize;

    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S>;

    /// Hand-written `∂₁F v`; must agree with the dual-number JVP.
    fn user_jvp_x(&self, _x: &[f64], _theta: &[f64], _v: &[f64]) -> Option<DenseVector> {
        None
    }

    /// Hand-written `∂₁Fᵀ w`.
    fn user_vjp_x(&self, _x: &[f64], _theta: &[f64], _w: &[f64]) -> Option<DenseVector> {
        None
    }

    /// Hand-written `∂₂F w`.
    fn user_jvp_theta(&self, _x: &[f64], _theta: &[f64], _w: &[f64]) -> Option<DenseVector> {
        None
    }

    /// Hand-written `∂₂Fᵀ v`.
    fn user_vjp_theta(&self, _x: &[f64], _theta: &[f64], _v: &[f64]) -> Option<DenseVector> {
        None
    }

    /// Rejects query points outside the mapping's domain.
    fn check_domain(&self, _x: &[f64], _theta: &[f64]) -> Result<()> {
        Ok(())
    }

    /// Distance from `(x, θ)` to the nearest non-differentiability of the
    /// mapping, `INFINITY` for smooth mappings.
    fn kink_distance(&self, _x: &[f64], _theta: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Scalar-valued differentiable function `f(x, θ)`.
///
/// `gradient` defaults to forward-mode (one dual evaluation per coordinate of
/// `x`); implementors with a cheap closed-form gradient override it, keeping
/// it generic so Hessian products remain available.
pub trait ScalarFn2: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_theta(&self) -> usize;

    fn value<S: Scalar>(&self, x: &[S], theta: &[S]) -> S;

    /// `∇₁f(x, θ)`.
    fn gradient<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        forward_gradient(self, x, theta)
    }

    fn check_domain(&self, _x: &[f64], _theta: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// `∇₁f` by forward mode, `dim_x` evaluations.
pub fn forward_gradient<F, S>(f: &F, x: &[S], theta: &[S]) -> Vec<S>
where
    F: ScalarFn2 + ?Sized,
    S: Scalar,
{
    let ts: Vec<Dual<S>> = theta.iter().map(|&t| Dual::constant(t)).collect();
    let mut xs: Vec<Dual<S>> = x.iter().map(|&v| Dual::constant(v)).collect();
    (0..x.len())
        .map(|i| {
            xs[i].eps = S::one();
            let g = f.value(&xs, &ts).eps;
            xs[i].eps = S::zero();
            g
        })
        .collect()
}

/// Primal/tangent pair of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    pub primal: DenseVector,
    pub tangent: DenseVector,
}

impl DualVector {
    pub fn new(primal: DenseVector, tangent: DenseVector) -> Result<Self> {
        check_len("dual vector tangent", primal.len(), tangent.len())?;
        Ok(Self { primal, tangent })
    }

    pub fn from_duals(v: &[Dual<f64>]) -> Self {
        Self {
            primal: v.iter().map(|d| d.re).collect(),
            tangent: v.iter().map(|d| d.eps).collect(),
        }
    }

    pub fn to_duals(&self) -> Vec<Dual<f64>> {
        self.primal
            .iter()
            .zip(self.tangent.iter())
            .map(|(&re, &eps)| Dual::new(re, eps))
            .collect()
    }
}

fn check_point<F: DiffFn2 + ?Sized>(f: &F, x: &[f64], theta: &[f64]) -> Result<()> {
    check_len("x", f.dim_x(), x.len())?;
    check_len("theta", f.dim_theta(), theta.len())
}

fn finite_or(v: DenseVector, what: &'static str) -> Result<DenseVector> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Plain evaluation with dimension, domain and finiteness checks.
pub fn eval<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64]) -> Result<DenseVector> {
    check_point(f, x, theta)?;
    f.check_domain(x, theta)?;
    let out = f.eval(x, theta);
    check_len("mapping output", f.dim_out(), out.len())?;
    finite_or(DenseVector::from_vec(out), "mapping evaluation")
}

fn dual_jvp_x<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64], v: &[f64]) -> DenseVector {
    let seeded = DualVector {
        primal: DenseVector::from_vec(x.to_vec()),
        tangent: DenseVector::from_vec(v.to_vec()),
    };
    let out = f.eval(&seeded.to_duals(), &ops::lift::<Dual<f64>>(theta));
    DualVector::from_duals(&out).tangent
}

fn dual_jvp_theta<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64], w: &[f64]) -> DenseVector {
    let seeded = DualVector {
        primal: DenseVector::from_vec(theta.to_vec()),
        tangent: DenseVector::from_vec(w.to_vec()),
    };
    let out = f.eval(&ops::lift::<Dual<f64>>(x), &seeded.to_duals());
    DualVector::from_duals(&out).tangent
}

/// `∂₁F(x, θ) v`.
pub fn jvp_x<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64], v: &[f64]) -> Result<DenseVector> {
    check_point(f, x, theta)?;
    check_len("jvp_x direction", f.dim_x(), v.len())?;
    let out = f
        .user_jvp_x(x, theta, v)
        .unwrap_or_else(|| dual_jvp_x(f, x, theta, v));
    check_len("jvp_x output", f.dim_out(), out.len())?;
    finite_or(out, "jvp_x")
}

/// `∂₂F(x, θ) w`.
pub fn jvp_theta<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64], w: &[f64]) -> Result<DenseVector> {
    check_point(f, x, theta)?;
    check_len("jvp_theta direction", f.dim_theta(), w.len())?;
    let out = f
        .user_jvp_theta(x, theta, w)
        .unwrap_or_else(|| dual_jvp_theta(f, x, theta, w));
    check_len("jvp_theta output", f.dim_out(), out.len())?;
    finite_or(out, "jvp_theta")
}

/// Dense `∂₁F(x, θ)` from `dim_x` dual JVPs.
pub fn jacobian_x<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64]) -> Result<DenseMatrix> {
    check_point(f, x, theta)?;
    let cols: Vec<DenseVector> = (0..f.dim_x())
        .map(|j| dual_jvp_x(f, x, theta, &DenseVector::basis(f.dim_x(), j)))
        .collect();
    materialized(cols, f.dim_out(), "jacobian_x")
}

/// Dense `∂₂F(x, θ)` from `dim_theta` dual JVPs.
pub fn jacobian_theta<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64]) -> Result<DenseMatrix> {
    check_point(f, x, theta)?;
    let cols: Vec<DenseVector> = (0..f.dim_theta())
        .map(|j| dual_jvp_theta(f, x, theta, &DenseVector::basis(f.dim_theta(), j)))
        .collect();
    materialized(cols, f.dim_out(), "jacobian_theta")
}

fn materialized(cols: Vec<DenseVector>, rows: usize, what: &'static str) -> Result<DenseMatrix> {
    let m = if cols.is_empty() {
        DenseMatrix::zeros(rows, 0)
    } else {
        DenseMatrix::from_columns(&cols)?
    };
    if m.data().iter().all(|v| v.is_finite()) {
        Ok(m)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `∂₁F(x, θ)ᵀ w`.
pub fn vjp_x<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64], w: &[f64]) -> Result<DenseVector> {
    check_point(f, x, theta)?;
    check_len("vjp_x cotangent", f.dim_out(), w.len())?;
    if let Some(out) = f.user_vjp_x(x, theta, w) {
        check_len("vjp_x output", f.dim_x(), out.len())?;
        return finite_or(out, "vjp_x");
    }
    Ok(jacobian_x(f, x, theta)?.matvec_t(w))
}

/// `∂₂F(x, θ)ᵀ v`.
pub fn vjp_theta<F: DiffFn2>(f: &F, x: &[f64], theta: &[f64], v: &[f64]) -> Result<DenseVector> {
    check_point(f, x, theta)?;
    check_len("vjp_theta cotangent", f.dim_out(), v.len())?;
    if let Some(out) = f.user_vjp_theta(x, theta, v) {
        check_len("vjp_theta output", f.dim_theta(), out.len())?;
        return finite_or(out, "vjp_theta");
    }
    Ok(jacobian_theta(f, x, theta)?.matvec_t(v))
}

fn check_scalar_point<F: ScalarFn2>(f: &F, x: &[f64], theta: &[f64]) -> Result<()> {
    check_len("x", f.dim_x(), x.len())?;
    check_len("theta", f.dim_theta(), theta.len())
}

/// `∇₁f(x, θ)`.
pub fn grad_x<F: ScalarFn2>(f: &F, x: &[f64], theta: &[f64]) -> Result<DenseVector> {
    check_scalar_point(f, x, theta)?;
    finite_or(DenseVector::from_vec(f.gradient(x, theta)), "gradient")
}

/// `∇₁²f(x, θ) v` by differentiating the gradient along `v`.
pub fn hvp_x<F: ScalarFn2>(f: &F, x: &[f64], theta: &[f64], v: &[f64]) -> Result<DenseVector> {
    check_scalar_point(f, x, theta)?;
    check_len("hvp direction", f.dim_x(), v.len())?;
    let xs: Vec<Dual<f64>> = x.iter().zip(v).map(|(&a, &b)| Dual::new(a, b)).collect();
    let g = f.gradient(&xs, &ops::lift::<Dual<f64>>(theta));
    finite_or(g.iter().map(|d| d.eps).collect(), "hvp")
}

/// `∂₂∇₁f(x, θ) w`.
pub fn cross_jvp<F: ScalarFn2>(f: &F, x: &[f64], theta: &[f64], w: &[f64]) -> Result<DenseVector> {
    check_scalar_point(f, x, theta)?;
    check_len("cross_jvp direction", f.dim_theta(), w.len())?;
    let ts: Vec<Dual<f64>> = theta.iter().zip(w).map(|(&a, &b)| Dual::new(a, b)).collect();
    let g = f.gradient(&ops::lift::<Dual<f64>>(x), &ts);
    finite_or(g.iter().map(|d| d.eps).collect(), "cross_jvp")
}

/// Central-difference Jacobian; column `j` is
/// `(fun(at + h eⱼ) − fun(at − h eⱼ)) / 2h`.
pub fn finite_diff_jacobian(
    fun: impl Fn(&[f64]) -> DenseVector,
    at: &[f64],
    h: f64,
) -> DenseMatrix {
    assert!(h > 0.0, "finite_diff_jacobian: step must be positive");
    let mut point = at.to_vec();
    let cols: Vec<DenseVector> = (0..at.len())
        .map(|j| {
            point[j] = at[j] + h;
            let plus = fun(&point);
            point[j] = at[j] - h;
            let minus = fun(&point);
            point[j] = at[j];
            plus.iter().zip(minus.iter()).map(|(p, m)| (p - m) / (2.0 * h)).collect()
        })
        .collect();
    if cols.is_empty() {
        return DenseMatrix::zeros(fun(at).len(), 0);
    }
    DenseMatrix::from_columns(&cols).expect("finite_diff_jacobian: inconsistent output length")
}

/// Checks every user-supplied derivative closure of `f` against dual-number
/// derivatives on all basis directions, with relative tolerance `tol`.
pub fn validate_user_derivatives<F: DiffFn2>(
    f: &F,
    x: &[f64],
    theta: &[f64],
    tol: f64,
) -> Result<()> {
    check_point(f, x, theta)?;
    let jx = jacobian_x(f, x, theta)?;
    let jt = jacobian_theta(f, x, theta)?;
    let mismatch = |what: &str, got: &[f64], want: &[f64]| -> Result<()> {
        let scale = crate::linalg::norm(want).max(1.0);
        let err = crate::linalg::distance(got, want);
        if got.len() == want.len() && err <= tol * scale {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "user-supplied {what} disagrees with forward mode (error {err:e})"
            )))
        }
    };
    for j in 0..f.dim_x() {
        let e = DenseVector::basis(f.dim_x(), j);
        if let Some(got) = f.user_jvp_x(x, theta, &e) {
            mismatch("jvp_x", &got, jx.col(j))?;
        }
    }
    for j in 0..f.dim_theta() {
        let e = DenseVector::basis(f.dim_theta(), j);
        if let Some(got) = f.user_jvp_theta(x, theta, &e) {
            mismatch("jvp_theta", &got, jt.col(j))?;
        }
    }
    for i in 0..f.dim_out() {
        let e = DenseVector::basis(f.dim_out(), i);
        if let Some(got) = f.user_vjp_x(x, theta, &e) {
            mismatch("vjp_x", &got, &jx.row(i))?;
        }
        if let Some(got) = f.user_vjp_theta(x, theta, &e) {
            mismatch("vjp_theta", &got, &jt.row(i))?;
        }
    }
    Ok(())
}
