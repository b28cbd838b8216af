use super::ProjOperator;
use crate::autodiff::{ops, Scalar};
use crate::error::{Error, Result};

/// Mirror map `∇φ` with inverse `∇φ*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorMap {
    /// `φ(x) = Σ xᵢ log xᵢ − xᵢ` on the positive orthant: `∇φ = log`,
    /// `∇φ* = exp`.
    Kl,
    /// `φ(x) = ½‖x‖²`: both maps are the identity.
    Euclidean,
}

impl MirrorMap {
    pub fn grad<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self {
            MirrorMap::Kl => x.iter().map(|&v| v.ln()).collect(),
            MirrorMap::Euclidean => x.to_vec(),
        }
    }

    pub fn grad_conj<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        match self {
            MirrorMap::Kl => y.iter().map(|&v| v.exp()).collect(),
            MirrorMap::Euclidean => y.to_vec(),
        }
    }

    /// Requires `x` strictly inside `dom φ`.
    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        match self {
            MirrorMap::Kl => match x.iter().position(|&v| !(v > 0.0)) {
                Some(i) => Err(Error::Domain(format!(
                    "KL mirror map needs positive coordinates, x[{i}] = {}",
                    x[i]
                ))),
                None => Ok(()),
            },
            MirrorMap::Euclidean => Ok(()),
        }
    }
}

/// Bregman projection `proj^φ_C(ŷ, θ)` taking a point `ŷ` of the dual
/// (mirror) space.
pub trait BregmanProjOperator: Send + Sync {
    fn dim_theta(&self) -> usize;

    fn project<S: Scalar>(&self, y_dual: &[S], theta: &[S]) -> Vec<S>;

    fn check(&self, _dim: usize, _theta: &[f64]) -> Result<()> {
        Ok(())
    }

    fn kink_distance(&self, _y_dual: &[f64], _theta: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// KL projection onto the simplex (softmax).
#[derive(Debug, Clone, Copy, Default)]
pub struct KlSimplex;

impl BregmanProjOperator for KlSimplex {
    fn dim_theta(&self) -> usize {
        0
    }
    fn project<S: Scalar>(&self, y_dual: &[S], _theta: &[S]) -> Vec<S> {
        ops::softmax(y_dual)
    }
}

/// Block-wise softmax over consecutive blocks of `block_len` coordinates.
#[derive(Debug, Clone, Copy)]
pub struct KlProductSimplex {
    pub block_len: usize,
}

impl BregmanProjOperator for KlProductSimplex {
    fn dim_theta(&self) -> usize {
        0
    }
    fn project<S: Scalar>(&self, y_dual: &[S], _theta: &[S]) -> Vec<S> {
        y_dual.chunks(self.block_len).flat_map(ops::softmax).collect()
    }
    fn check(&self, dim: usize, _theta: &[f64]) -> Result<()> {
        if self.block_len == 0 || dim % self.block_len != 0 {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} is not a multiple of the block length {}",
                self.block_len
            )));
        }
        Ok(())
    }
}

/// A Euclidean projection used as the Bregman projection of
/// [`MirrorMap::Euclidean`].
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanBregman<P> {
    pub proj: P,
}

impl<P: ProjOperator> BregmanProjOperator for EuclideanBregman<P> {
    fn dim_theta(&self) -> usize {
        self.proj.dim_theta()
    }
    fn project<S: Scalar>(&self, y_dual: &[S], theta: &[S]) -> Vec<S> {
        self.proj.project(y_dual, theta)
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        self.proj.check(dim, theta)
    }
    fn kink_distance(&self, y_dual: &[f64], theta: &[f64]) -> f64 {
        self.proj.kink_distance(y_dual, theta)
    }
}
