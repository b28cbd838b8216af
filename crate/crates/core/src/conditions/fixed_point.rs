use std::ops::Range;

use super::smooth::positive_step;
use crate::autodiff::{ops, DiffFn2, ScalarFn2, Scalar};
use crate::error::{Error, Result};
use crate::implicit::FixedPointProblem;
use crate::operators::{BregmanProjOperator, MirrorMap, ProjOperator, ProjectionProx, ProxOperator};

fn split_theta<S>(theta: &[S], dim_f: usize) -> (&[S], &[S]) {
    theta.split_at(dim_f)
}

/// `T(x, θ) = prox_{ηg}(x − η∇₁f(x, θ_f), θ_g)` with `θ = [θ_f, θ_g]`.
#[derive(Debug, Clone)]
pub struct ProxGradMap<F, P> {
    pub f: F,
    pub prox: P,
    pub eta: f64,
}

impl<F: ScalarFn2, P: ProxOperator> ProxGradMap<F, P> {
    fn forward_point(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let (tf, _) = split_theta(theta, self.f.dim_theta());
        ops::step(x, self.eta, &self.f.gradient(x, tf))
    }
}

impl<F: ScalarFn2, P: ProxOperator> DiffFn2 for ProxGradMap<F, P> {
    fn dim_x(&self) -> usize {
        self.f.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.f.dim_theta() + self.prox.dim_theta()
    }
    fn dim_out(&self) -> usize {
        self.f.dim_x()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let (tf, tg) = split_theta(theta, self.f.dim_theta());
        let y = ops::step(x, self.eta, &self.f.gradient(x, tf));
        self.prox.prox(&y, tg, self.eta)
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        let (tf, tg) = split_theta(theta, self.f.dim_theta());
        self.f.check_domain(x, tf)?;
        self.prox.check(x.len(), tg)
    }
    fn kink_distance(&self, x: &[f64], theta: &[f64]) -> f64 {
        let (_, tg) = split_theta(theta, self.f.dim_theta());
        self.prox.kink_distance(&self.forward_point(x, theta), tg, self.eta)
    }
}

/// Proximal-gradient fixed point; `θ = [θ_f, θ_g]`.
pub fn proximal_gradient_fp<F: ScalarFn2, P: ProxOperator>(
    f: F,
    prox: P,
    eta: f64,
) -> Result<FixedPointProblem<ProxGradMap<F, P>>> {
    positive_step(eta)?;
    FixedPointProblem::new(ProxGradMap { f, prox, eta })
}

/// Projected-gradient fixed point; `θ = [θ_f, θ_C]`.
pub fn projected_gradient_fp<F: ScalarFn2, P: ProjOperator>(
    f: F,
    proj: P,
    eta: f64,
) -> Result<FixedPointProblem<ProxGradMap<F, ProjectionProx<P>>>> {
    proximal_gradient_fp(f, ProjectionProx { proj }, eta)
}

/// `T(x, θ) = proj^φ_C(∇φ(x) − η∇₁f(x, θ_f), θ_C)`.
#[derive(Debug, Clone)]
pub struct MirrorDescentMap<F, B> {
    pub f: F,
    pub mirror: MirrorMap,
    pub bproj: B,
    pub eta: f64,
}

impl<F: ScalarFn2, B: BregmanProjOperator> DiffFn2 for MirrorDescentMap<F, B> {
    fn dim_x(&self) -> usize {
        self.f.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.f.dim_theta() + self.bproj.dim_theta()
    }
    fn dim_out(&self) -> usize {
        self.f.dim_x()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let (tf, tc) = split_theta(theta, self.f.dim_theta());
        let y = ops::step(&self.mirror.grad(x), self.eta, &self.f.gradient(x, tf));
        self.bproj.project(&y, tc)
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        let (tf, tc) = split_theta(theta, self.f.dim_theta());
        self.mirror.check_domain(x)?;
        self.f.check_domain(x, tf)?;
        self.bproj.check(x.len(), tc)
    }
    fn kink_distance(&self, x: &[f64], theta: &[f64]) -> f64 {
        let (tf, tc) = split_theta(theta, self.f.dim_theta());
        let y = ops::step(&self.mirror.grad(x), self.eta, &self.f.gradient(x, tf));
        self.bproj.kink_distance(&y, tc)
    }
}

/// Mirror-descent fixed point; `θ = [θ_f, θ_C]`.
pub fn mirror_descent_fp<F: ScalarFn2, B: BregmanProjOperator>(
    f: F,
    mirror: MirrorMap,
    bproj: B,
    eta: f64,
) -> Result<FixedPointProblem<MirrorDescentMap<F, B>>> {
    positive_step(eta)?;
    FixedPointProblem::new(MirrorDescentMap { f, mirror, bproj, eta })
}

/// One block of a block-separable prox: coordinates, operator and step.
#[derive(Debug, Clone)]
pub struct ProxBlock<P> {
    pub range: Range<usize>,
    pub prox: P,
    pub eta: f64,
}

/// `[T(x, θ)]ᵢ = prox_{ηᵢgᵢ}(xᵢ − ηᵢ[∇₁f(x, θ_f)]ᵢ, θ_g)` per block `i`; all
/// blocks share `θ_g`.
#[derive(Debug, Clone)]
pub struct BlockProxMap<F, P> {
    pub f: F,
    pub blocks: Vec<ProxBlock<P>>,
}

impl<F: ScalarFn2, P: ProxOperator> BlockProxMap<F, P> {
    fn dim_g(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.prox.dim_theta())
    }

    fn gradient_points(&self, x: &[f64], theta: &[f64]) -> Vec<Vec<f64>> {
        let (tf, _) = split_theta(theta, self.f.dim_theta());
        let grad = self.f.gradient(x, tf);
        self.blocks
            .iter()
            .map(|b| ops::step(&x[b.range.clone()], b.eta, &grad[b.range.clone()]))
            .collect()
    }
}

impl<F: ScalarFn2, P: ProxOperator> DiffFn2 for BlockProxMap<F, P> {
    fn dim_x(&self) -> usize {
        self.f.dim_x()
    }
    fn dim_theta(&self) -> usize {
        self.f.dim_theta() + self.dim_g()
    }
    fn dim_out(&self) -> usize {
        self.f.dim_x()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let (tf, tg) = split_theta(theta, self.f.dim_theta());
        let grad = self.f.gradient(x, tf);
        let mut out = vec![S::zero(); x.len()];
        for b in &self.blocks {
            let r = b.range.clone();
            let y = ops::step(&x[r.clone()], b.eta, &grad[r.clone()]);
            out[r].copy_from_slice(&b.prox.prox(&y, tg, b.eta));
        }
        out
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        let (tf, tg) = split_theta(theta, self.f.dim_theta());
        self.f.check_domain(x, tf)?;
        for b in &self.blocks {
            b.prox.check(b.range.len(), tg)?;
        }
        Ok(())
    }
    fn kink_distance(&self, x: &[f64], theta: &[f64]) -> f64 {
        let (_, tg) = split_theta(theta, self.f.dim_theta());
        self.gradient_points(x, theta)
            .iter()
            .zip(&self.blocks)
            .map(|(y, b)| b.prox.kink_distance(y, tg, b.eta))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks that consecutive ranges tile `[0, dim)`.
pub(crate) fn check_partition<'r>(
    ranges: impl IntoIterator<Item = &'r Range<usize>>,
    dim: usize,
) -> Result<()> {
    let mut sorted: Vec<&Range<usize>> = ranges.into_iter().collect();
    sorted.sort_by_key(|r| r.start);
    let mut next = 0;
    for r in sorted {
        if r.start != next || r.end <= r.start {
            return Err(Error::InvalidParameter(format!(
                "blocks must partition 0..{dim}: gap, overlap or empty block at {r:?}"
            )));
        }
        next = r.end;
    }
    if next != dim {
        return Err(Error::InvalidParameter(format!(
            "blocks cover 0..{next}, expected 0..{dim}"
        )));
    }
    Ok(())
}

/// Block proximal-gradient fixed point; `θ = [θ_f, θ_g]`.
pub fn block_prox_fp<F: ScalarFn2, P: ProxOperator>(
    f: F,
    blocks: Vec<ProxBlock<P>>,
) -> Result<FixedPointProblem<BlockProxMap<F, P>>> {
    check_partition(blocks.iter().map(|b| &b.range), f.dim_x())?;
    for b in &blocks {
        positive_step(b.eta)?;
    }
    if let Some(first) = blocks.first() {
        if blocks.iter().any(|b| b.prox.dim_theta() != first.prox.dim_theta()) {
            return Err(Error::InvalidParameter(
                "all blocks must share one prox parameter layout".into(),
            ));
        }
    }
    FixedPointProblem::new(BlockProxMap { f, blocks })
}
