use std::ops::Range;

use super::{ProjOperator, ProxOperator};
use crate::autodiff::{ops, Scalar};
use crate::error::{check_len, Error, Result};

fn nonnegative(what: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be nonnegative, got {v}")))
    }
}

/// `sign(y)·max(|y| − t, 0)`.
pub(crate) fn soft_threshold<S: Scalar>(y: &[S], t: S) -> Vec<S> {
    y.iter()
        .map(|&v| (v.abs() - t).max_c(0.0) * v.signum_c())
        .collect()
}

fn soft_threshold_kink(y: &[f64], t: f64) -> f64 {
    y.iter()
        .map(|v| (v.abs() - t).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Soft thresholding, the prox of `scale·‖x‖₁`.
pub fn prox_lasso<S: Scalar>(y: &[S], scale: S) -> Result<Vec<S>> {
    nonnegative("lasso scale", scale.value())?;
    Ok(soft_threshold(y, scale))
}

/// Prox of `l1‖x‖₁ + ½ l2‖x‖²`: `ST(y, l1) / (1 + l2)`.
pub fn prox_elastic_net<S: Scalar>(y: &[S], l1: S, l2: S) -> Result<Vec<S>> {
    nonnegative("elastic net l1", l1.value())?;
    nonnegative("elastic net l2", l2.value())?;
    let denom = l2 + 1.0;
    Ok(soft_threshold(y, l1).into_iter().map(|v| v / denom).collect())
}

fn check_partition(dim: usize, blocks: &[Range<usize>]) -> Result<()> {
    let mut covered = vec![false; dim];
    for b in blocks {
        if b.end > dim || b.start >= b.end {
            return Err(Error::InvalidParameter(format!(
                "block {b:?} is empty or exceeds dimension {dim}"
            )));
        }
        for i in b.clone() {
            if std::mem::replace(&mut covered[i], true) {
                return Err(Error::InvalidParameter(format!("coordinate {i} is in two blocks")));
            }
        }
    }
    match covered.iter().position(|c| !c) {
        Some(i) => Err(Error::InvalidParameter(format!("coordinate {i} is in no block"))),
        None => Ok(()),
    }
}

fn group_kernel<S: Scalar>(y: &[S], t: S, blocks: &[Range<usize>]) -> Vec<S> {
    let mut out = y.to_vec();
    for b in blocks {
        let n = ops::sq_norm(&y[b.clone()]).sqrt();
        if n.value() == 0.0 {
            continue;
        }
        let factor = (S::one() - t / n).max_c(0.0);
        for v in &mut out[b.clone()] {
            *v *= factor;
        }
    }
    out
}

/// Block soft thresholding, the prox of `scale·Σ_b ‖x_b‖`.
pub fn prox_group_lasso<S: Scalar>(y: &[S], scale: S, blocks: &[Range<usize>]) -> Result<Vec<S>> {
    nonnegative("group lasso scale", scale.value())?;
    check_partition(y.len(), blocks)?;
    Ok(group_kernel(y, scale, blocks))
}

/// `g ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityProx;

impl ProxOperator for IdentityProx {
    fn dim_theta(&self) -> usize {
        0
    }
    fn prox<S: Scalar>(&self, y: &[S], _theta: &[S], _eta: f64) -> Vec<S> {
        y.to_vec()
    }
    fn penalty(&self, _x: &[f64], _theta: &[f64]) -> f64 {
        0.0
    }
}

/// How the lasso regularization strength is read from `θ = [t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LassoScale {
    /// strength `t` (must be nonnegative)
    Linear,
    /// strength `eᵗ` (positive for every `t`)
    Exp,
}

/// `g(x, θ) = s(θ)‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct Lasso {
    pub scale: LassoScale,
}

impl Lasso {
    pub fn linear() -> Self {
        Self {
            scale: LassoScale::Linear,
        }
    }

    pub fn exp() -> Self {
        Self {
            scale: LassoScale::Exp,
        }
    }

    fn strength<S: Scalar>(&self, t: S) -> S {
        match self.scale {
            LassoScale::Linear => t,
            LassoScale::Exp => t.exp(),
        }
    }
}

impl ProxOperator for Lasso {
    fn dim_theta(&self) -> usize {
        1
    }
    fn prox<S: Scalar>(&self, y: &[S], theta: &[S], eta: f64) -> Vec<S> {
        soft_threshold(y, self.strength(theta[0]) * eta)
    }
    fn penalty(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.strength(theta[0]) * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn check(&self, _dim: usize, theta: &[f64]) -> Result<()> {
        check_len("lasso parameters", 1, theta.len())?;
        nonnegative("lasso scale", self.strength(theta[0]))
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64], eta: f64) -> f64 {
        soft_threshold_kink(y, eta * self.strength(theta[0]))
    }
}

/// `g(x, θ) = l1‖x‖₁ + ½ l2‖x‖²`, `θ = [l1, l2]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ElasticNet;

impl ProxOperator for ElasticNet {
    fn dim_theta(&self) -> usize {
        2
    }
    fn prox<S: Scalar>(&self, y: &[S], theta: &[S], eta: f64) -> Vec<S> {
        let denom = theta[1] * eta + 1.0;
        soft_threshold(y, theta[0] * eta)
            .into_iter()
            .map(|v| v / denom)
            .collect()
    }
    fn penalty(&self, x: &[f64], theta: &[f64]) -> f64 {
        theta[0] * x.iter().map(|v| v.abs()).sum::<f64>()
            + 0.5 * theta[1] * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn check(&self, _dim: usize, theta: &[f64]) -> Result<()> {
        check_len("elastic net parameters", 2, theta.len())?;
        nonnegative("elastic net l1", theta[0])?;
        nonnegative("elastic net l2", theta[1])
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64], eta: f64) -> f64 {
        soft_threshold_kink(y, eta * theta[0])
    }
}

/// `g(x, θ) = θ₀ Σ_b ‖x_b‖` over a partition into blocks.
#[derive(Debug, Clone)]
pub struct GroupLasso {
    pub blocks: Vec<Range<usize>>,
}

impl ProxOperator for GroupLasso {
    fn dim_theta(&self) -> usize {
        1
    }
    fn prox<S: Scalar>(&self, y: &[S], theta: &[S], eta: f64) -> Vec<S> {
        group_kernel(y, theta[0] * eta, &self.blocks)
    }
    fn penalty(&self, x: &[f64], theta: &[f64]) -> f64 {
        theta[0]
            * self
                .blocks
                .iter()
                .map(|b| crate::linalg::norm(&x[b.clone()]))
                .sum::<f64>()
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        check_len("group lasso parameters", 1, theta.len())?;
        nonnegative("group lasso scale", theta[0])?;
        check_partition(dim, &self.blocks)
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64], eta: f64) -> f64 {
        self.blocks
            .iter()
            .map(|b| (crate::linalg::norm(&y[b.clone()]) - eta * theta[0]).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Prox of the indicator of a set: its Euclidean projection.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProjectionProx<P> {
    pub proj: P,
}

impl<P: ProjOperator> ProxOperator for ProjectionProx<P> {
    fn dim_theta(&self) -> usize {
        self.proj.dim_theta()
    }
    fn prox<S: Scalar>(&self, y: &[S], theta: &[S], _eta: f64) -> Vec<S> {
        self.proj.project(y, theta)
    }
    fn penalty(&self, _x: &[f64], _theta: &[f64]) -> f64 {
        0.0
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        self.proj.check(dim, theta)
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64], _eta: f64) -> f64 {
        self.proj.kink_distance(y, theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_thresholding() {
        assert_eq!(prox_lasso(&[3.0, -0.5, 1.0], 1.0).unwrap(), vec![2.0, 0.0, 0.0]);
        assert_eq!(prox_lasso(&[3.0, -0.5], 0.0).unwrap(), vec![3.0, -0.5]);
        assert!(prox_lasso(&[1.0], -0.1).is_err());
    }

    #[test]
    fn elastic_net_shrinks_then_scales() {
        let p = prox_elastic_net(&[3.0, -0.5], 1.0, 1.0).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn group_lasso_single_block() {
        let p = prox_group_lasso(&[3.0, 4.0], 1.0, &[0..2]).unwrap();
        assert!((p[0] - 2.4).abs() < 1e-15 && (p[1] - 3.2).abs() < 1e-15);
        assert!(prox_group_lasso(&[3.0, 4.0], 1.0, &[0..1]).is_err());
        assert!(prox_group_lasso(&[3.0, 4.0], 1.0, &[0..2, 1..2]).is_err());
    }

    #[test]
    fn exp_scaled_lasso_uses_exponential() {
        let p = Lasso::exp().prox(&[3.0], &[0.0], 1.0);
        assert_eq!(p, vec![2.0]);
        assert_eq!(Lasso::exp().penalty(&[-2.0], &[0.0]), 2.0);
    }
}
