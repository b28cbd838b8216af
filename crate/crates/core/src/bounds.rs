//! Error bounds for Jacobian estimates at approximate solutions.
//!
//! If `A = −∂₁F` satisfies `‖Av‖ ≥ α‖v‖`, `A` is `γ`-Lipschitz in `x`, and
//! `B = ∂₂F` is `β`-Lipschitz with `‖B(x*, θ)‖ ≤ R`, then for every `x̂` within
//! `ε` of `x*`
//!
//! ```text
//! ‖J(x̂, θ) − ∂x*(θ)‖ ≤ (β/α + γR/α²) ‖x̂ − x*‖.
//! ```
//!
//! For the proximal-gradient fixed point the constants combine with the
//! strong convexity `μ` of the penalty and the Lipschitz constant `κ_η` of
//! the prox Jacobian. Norms on matrices are Frobenius norms.

use crate::autodiff::{ops, ScalarFn2, Scalar};
use crate::error::{check_len, Error, Result};
use crate::linalg::{sym_min_eigenvalue, DenseMatrix, DenseVector, LuFactorization};

/// Constants entering the bounds; all nonnegative and `α > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub r: f64,
    /// Radius around `x*` within which the bound holds.
    pub epsilon: f64,
    pub mu: f64,
    pub kappa_eta: f64,
}

impl BoundConstants {
    /// Constants with `μ = κ_η = 0` and an unlimited validity radius.
    pub fn new(alpha: f64, beta: f64, gamma: f64, r: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            r,
            epsilon: f64::INFINITY,
            mu: 0.0,
            kappa_eta: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "conditioning constant α must be positive, got {}",
                self.alpha
            )));
        }
        let named = [
            ("β", self.beta),
            ("γ", self.gamma),
            ("R", self.r),
            ("ε", self.epsilon),
            ("μ", self.mu),
            ("κ_η", self.kappa_eta),
        ];
        for (name, v) in named {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "bound constant {name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// A bound together with whether the iterate error lies within `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub valid: bool,
}

fn evaluate(k: &BoundConstants, slope: f64, iterate_error: f64) -> Result<BoundValue> {
    if !(iterate_error >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "iterate error must be nonnegative, got {iterate_error}"
        )));
    }
    Ok(BoundValue {
        value: slope * iterate_error,
        valid: iterate_error <= k.epsilon,
    })
}

/// `(β/α + γR/α²) · iterate_error`.
pub fn theorem1_bound(k: &BoundConstants, iterate_error: f64) -> Result<BoundValue> {
    k.validate()?;
    let slope = k.beta / k.alpha + k.gamma * k.r / (k.alpha * k.alpha);
    evaluate(k, slope, iterate_error)
}

/// `((β + κ_η)/(α + μ) + γR/(α + μ)²) · iterate_error`.
pub fn corollary2_bound(k: &BoundConstants, iterate_error: f64) -> Result<BoundValue> {
    k.validate()?;
    let a = k.alpha + k.mu;
    let slope = (k.beta + k.kappa_eta) / a + k.gamma * k.r / (a * a);
    evaluate(k, slope, iterate_error)
}

/// `min_x ‖Φx − y‖² + Σᵢ θᵢxᵢ²` with `θ > 0`.
#[derive(Debug, Clone)]
pub struct RidgeProblemData {
    pub phi: DenseMatrix,
    pub y: DenseVector,
    pub theta: DenseVector,
}

impl RidgeProblemData {
    pub fn new(phi: DenseMatrix, y: DenseVector, theta: DenseVector) -> Result<Self> {
        check_len("ridge targets", phi.rows(), y.len())?;
        check_len("ridge regularization", phi.cols(), theta.len())?;
        if let Some(t) = theta.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "ridge regularization must be positive, got {t}"
            )));
        }
        Ok(Self { phi, y, theta })
    }

    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    /// `H = ΦᵀΦ + diag θ`; the Hessian is `2H`.
    pub fn half_hessian(&self) -> DenseMatrix {
        let g = self.phi.transpose().matmul(&self.phi).expect("conforming");
        g.add(&DenseMatrix::diag(&self.theta)).expect("conforming")
    }

    pub fn objective(&self) -> RidgeObjective {
        RidgeObjective {
            phi: self.phi.clone(),
            y: self.y.clone(),
        }
    }
}

/// `f(x, θ) = ‖Φx − y‖² + Σᵢ θᵢxᵢ²` with a closed-form gradient.
#[derive(Debug, Clone)]
pub struct RidgeObjective {
    pub phi: DenseMatrix,
    pub y: DenseVector,
}

impl ScalarFn2 for RidgeObjective {
    fn dim_x(&self) -> usize {
        self.phi.cols()
    }
    fn dim_theta(&self) -> usize {
        self.phi.cols()
    }
    fn value<S: Scalar>(&self, x: &[S], theta: &[S]) -> S {
        let r = ops::matvec(&self.phi, x);
        let mut acc = S::zero();
        for (ri, yi) in r.iter().zip(self.y.iter()) {
            let e = *ri - *yi;
            acc += e * e;
        }
        for (t, xi) in theta.iter().zip(x) {
            acc += *t * *xi * *xi;
        }
        acc
    }
    fn gradient<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let mut r = ops::matvec(&self.phi, x);
        for (ri, yi) in r.iter_mut().zip(self.y.iter()) {
            *ri = *ri - *yi;
        }
        let g = ops::matvec_t(&self.phi, &r);
        g.iter()
            .zip(theta.iter().zip(x))
            .map(|(gi, (t, xi))| (*gi + *t * *xi) * 2.0)
            .collect()
    }
}

/// Solution `x* = H⁻¹Φᵀy` and its Jacobian, column `j` equal to
/// `−H⁻¹ eⱼ x*ⱼ`.
pub fn ridge_closed_form(p: &RidgeProblemData) -> Result<(DenseVector, DenseMatrix)> {
    let lu = LuFactorization::new(&p.half_hessian())?;
    let x = lu.solve_vec(&p.phi.matvec_t(&p.y))?;
    let rhs = DenseMatrix::diag(&x).scaled(-1.0);
    let jac = lu.solve(&rhs)?;
    Ok((x, jac))
}

/// Minimum inverse power iteration budget.
const MIN_EIGEN_ITERS: usize = 1000;

/// Constants for the stationarity condition of the ridge objective:
/// `α = 2λ_min(H)`, `β = 2`, `γ = 0`, `R = 2‖x*‖`, `ε = ∞`.
pub fn ridge_constants(p: &RidgeProblemData) -> Result<BoundConstants> {
    let d = p.dim();
    let lambda_min = sym_min_eigenvalue(&p.half_hessian(), 1e-10, (10 * d).max(MIN_EIGEN_ITERS))?;
    let (x, _) = ridge_closed_form(p)?;
    Ok(BoundConstants::new(2.0 * lambda_min, 2.0, 0.0, 2.0 * x.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(alpha: f64, beta: f64, gamma: f64, r: f64) -> BoundConstants {
        BoundConstants::new(alpha, beta, gamma, r)
    }

    #[test]
    fn bound_arithmetic() {
        let b = theorem1_bound(&k(1.0, 1.0, 0.0, 5.0), 0.1).unwrap();
        assert!((b.value - 0.1).abs() < 1e-15 && b.valid);
        assert!((theorem1_bound(&k(2.0, 1.0, 1.0, 4.0), 0.1).unwrap().value - 0.15).abs() < 1e-15);
        assert_eq!(theorem1_bound(&k(2.0, 1.0, 1.0, 4.0), 0.0).unwrap().value, 0.0);
        assert!(theorem1_bound(&k(0.0, 1.0, 1.0, 4.0), 0.1).is_err());
        let narrow = BoundConstants { epsilon: 0.05, ..k(1.0, 1.0, 0.0, 1.0) };
        assert!(!theorem1_bound(&narrow, 0.1).unwrap().valid);
    }

    #[test]
    fn corollary_arithmetic() {
        let base = k(2.0, 1.0, 1.0, 4.0);
        assert_eq!(
            corollary2_bound(&base, 0.3).unwrap(),
            theorem1_bound(&base, 0.3).unwrap()
        );
        let prox = BoundConstants { mu: 1.0, kappa_eta: 1.0, ..k(1.0, 1.0, 0.0, 0.0) };
        assert!((corollary2_bound(&prox, 0.2).unwrap().value - 0.2).abs() < 1e-15);
        assert_eq!(corollary2_bound(&prox, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn ridge_constants_examples() {
        let p = RidgeProblemData::new(
            DenseMatrix::identity(2),
            DenseVector::zeros(2),
            DenseVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap();
        let c = ridge_constants(&p).unwrap();
        assert!((c.alpha - 4.0).abs() < 1e-12);
        assert_eq!((c.beta, c.gamma, c.r), (2.0, 0.0, 0.0));
        assert!((theorem1_bound(&c, 1.0).unwrap().value - 0.5).abs() < 1e-12);
        let q = RidgeProblemData::new(
            DenseMatrix::zeros(1, 1),
            DenseVector::zeros(1),
            DenseVector::from_vec(vec![2.0]),
        )
        .unwrap();
        assert!((ridge_constants(&q).unwrap().alpha - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_closed_form_scalar() {
        let p = RidgeProblemData::new(
            DenseMatrix::identity(1),
            DenseVector::from_vec(vec![2.0]),
            DenseVector::from_vec(vec![1.0]),
        )
        .unwrap();
        let (x, j) = ridge_closed_form(&p).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((j[(0, 0)] + 0.5).abs() < 1e-15);
        assert!(RidgeProblemData::new(
            DenseMatrix::identity(1),
            DenseVector::zeros(1),
            DenseVector::from_vec(vec![0.0])
        )
        .is_err());
    }
}
