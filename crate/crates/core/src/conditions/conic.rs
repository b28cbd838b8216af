use crate::autodiff::{ops, DiffFn2, Scalar};
use crate::error::{Error, Result};
use crate::implicit::RootProblem;

const SKEW_TOL: f64 = 1e-9;

/// One block of the product cone `Π` projects onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `{0}`
    Zero(usize),
    /// `R₊^len`
    NonnegOrthant(usize),
    /// `R^len`
    Free(usize),
}

impl Cone {
    pub fn len(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::NonnegOrthant(n) | Cone::Free(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered product of cone blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSpec {
    pub blocks: Vec<Cone>,
}

impl ConeSpec {
    pub fn new(blocks: Vec<Cone>) -> Self {
        Self { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Cone::len).sum()
    }

    /// Blockwise projection `Π(x)`.
    pub fn project<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let mut out = Vec::with_capacity(x.len());
        let mut offset = 0;
        for cone in &self.blocks {
            let part = &x[offset..offset + cone.len()];
            match cone {
                Cone::Zero(n) => out.extend(std::iter::repeat(S::zero()).take(*n)),
                Cone::NonnegOrthant(_) => out.extend(part.iter().map(|v| v.max_c(0.0))),
                Cone::Free(_) => out.extend_from_slice(part),
            }
            offset += cone.len();
        }
        out
    }
}

/// `F(x, θ) = ((Θ − I)Π + I)x` with `θ = vec(Θ)` column-major, `Θ` skew.
#[derive(Debug, Clone)]
pub struct ConicMap {
    pub cones: ConeSpec,
}

impl DiffFn2 for ConicMap {
    fn dim_x(&self) -> usize {
        self.cones.dim()
    }
    fn dim_theta(&self) -> usize {
        self.cones.dim().pow(2)
    }
    fn dim_out(&self) -> usize {
        self.cones.dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let n = x.len();
        let px = self.cones.project(x);
        let tpx = ops::matvec_flat(theta, n, n, &px);
        (0..n).map(|i| tpx[i] - px[i] + x[i]).collect()
    }
    fn check_domain(&self, _x: &[f64], theta: &[f64]) -> Result<()> {
        let n = self.cones.dim();
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                asym += (theta[i + j * n] + theta[j + i * n]).powi(2);
            }
        }
        if asym.sqrt() > SKEW_TOL {
            return Err(Error::InvalidParameter(format!(
                "conic embedding matrix must be skew-symmetric, ‖Θ + Θᵀ‖ = {:e}",
                asym.sqrt()
            )));
        }
        Ok(())
    }
    fn kink_distance(&self, x: &[f64], _theta: &[f64]) -> f64 {
        let mut offset = 0;
        let mut dist = f64::INFINITY;
        for cone in &self.cones.blocks {
            if let Cone::NonnegOrthant(n) = cone {
                for v in &x[offset..offset + n] {
                    dist = dist.min(v.abs());
                }
            }
            offset += cone.len();
        }
        dist
    }
}

/// Residual map of the homogeneous self-dual embedding.
pub fn conic_residual(cones: ConeSpec) -> Result<RootProblem<ConicMap>> {
    RootProblem::new(ConicMap { cones })
}
