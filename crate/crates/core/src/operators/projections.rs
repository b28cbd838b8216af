use super::{clamp_s, ProjOperator};
use crate::autodiff::{ops, Scalar};
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseVector;

/// Output coordinates above this value count as the simplex support.
pub const SUPPORT_TOL: f64 = 1e-12;

const BOX_SECTION_TOL: f64 = 1e-12;

fn positive(what: &str, r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive, got {r}")))
    }
}

pub fn proj_nonneg<S: Scalar>(y: &[S]) -> Vec<S> {
    y.iter().map(|&v| v.max_c(0.0)).collect()
}

fn box_kernel<S: Scalar>(y: &[S], lo: &[S], hi: &[S]) -> Vec<S> {
    y.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| clamp_s(v, l, h))
        .collect()
}

fn check_bounds(lo: &[f64], hi: &[f64]) -> Result<()> {
    match lo.iter().zip(hi).find(|(l, h)| !(l <= h)) {
        Some((l, h)) => Err(Error::InvalidParameter(format!(
            "box bounds must satisfy lo <= hi, got lo = {l}, hi = {h}"
        ))),
        None => Ok(()),
    }
}

/// Per-coordinate clip to `[lo, hi]`.
pub fn proj_box<S: Scalar>(y: &[S], lo: &[S], hi: &[S]) -> Result<Vec<S>> {
    check_len("box lower bounds", y.len(), lo.len())?;
    check_len("box upper bounds", y.len(), hi.len())?;
    check_bounds(&ops::values(lo), &ops::values(hi))?;
    Ok(box_kernel(y, lo, hi))
}

/// Sort-based projection onto `{x ≥ 0, Σx = r}`; `τ` is formed in `S` so
/// tangents follow `diag(s) − ssᵀ/|s|`.
pub(crate) fn simplex_kernel<S: Scalar>(y: &[S], r: S) -> Vec<S> {
    simplex_with_threshold(y, r).0
}

fn simplex_with_threshold<S: Scalar>(y: &[S], r: S) -> (Vec<S>, S) {
    if y.is_empty() {
        return (Vec::new(), S::zero());
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[b].value().total_cmp(&y[a].value()));
    let mut cum = S::zero();
    let mut rho = 1;
    let mut cum_rho = y[order[0]];
    for (k, &i) in order.iter().enumerate() {
        cum += y[i];
        let t = (cum - r) / (k + 1) as f64;
        if y[i].value() > t.value() {
            rho = k + 1;
            cum_rho = cum;
        }
    }
    let tau = (cum_rho - r) / rho as f64;
    (y.iter().map(|&v| (v - tau).max_c(0.0)).collect(), tau)
}

fn simplex_kink(y: &[f64], r: f64) -> f64 {
    let (_, tau) = simplex_with_threshold(y, r);
    y.iter().map(|v| (v - tau).abs()).fold(f64::INFINITY, f64::min)
}

/// Projection onto the probability simplex.
pub fn proj_simplex<S: Scalar>(y: &[S]) -> Vec<S> {
    simplex_kernel(y, S::one())
}

/// `∂ proj_simplex(y) · v = s⊙v − s (sᵀv)/‖s‖₁`, `s` the support indicator.
pub fn proj_simplex_jvp(y: &[f64], v: &[f64]) -> Result<DenseVector> {
    check_len("simplex jvp direction", y.len(), v.len())?;
    let x = proj_simplex(y);
    let support: Vec<bool> = x.iter().map(|&xi| xi > SUPPORT_TOL).collect();
    let count = support.iter().filter(|&&s| s).count().max(1) as f64;
    let mean = support
        .iter()
        .zip(v)
        .filter(|(s, _)| **s)
        .map(|(_, vi)| vi)
        .sum::<f64>()
        / count;
    Ok(support
        .iter()
        .zip(v)
        .map(|(&s, vi)| if s { vi - mean } else { 0.0 })
        .collect())
}

fn l1_kernel<S: Scalar>(y: &[S], r: S) -> Vec<S> {
    let l1: f64 = y.iter().map(|v| v.value().abs()).sum();
    if l1 <= r.value() {
        return y.to_vec();
    }
    let mags: Vec<S> = y.iter().map(|v| v.abs()).collect();
    simplex_kernel(&mags, r)
        .into_iter()
        .zip(y)
        .map(|(p, v)| p * v.signum_c())
        .collect()
}

fn l2_kernel<S: Scalar>(y: &[S], r: S) -> Vec<S> {
    let n = ops::sq_norm(y).sqrt();
    if n.value() <= r.value() {
        y.to_vec()
    } else {
        ops::scale(y, r / n)
    }
}

fn linf_kernel<S: Scalar>(y: &[S], r: S) -> Vec<S> {
    y.iter().map(|&v| clamp_s(v, -r, r)).collect()
}

/// Projection onto `{‖x‖₁ ≤ r}` by reduction to the simplex of radius `r`;
/// `y` is returned unchanged when `‖y‖₁ ≤ r`.
pub fn proj_l1_ball<S: Scalar>(y: &[S], r: S) -> Result<Vec<S>> {
    positive("l1 ball radius", r.value())?;
    Ok(l1_kernel(y, r))
}

pub fn proj_l2_ball<S: Scalar>(y: &[S], r: S) -> Result<Vec<S>> {
    positive("l2 ball radius", r.value())?;
    Ok(l2_kernel(y, r))
}

pub fn proj_linf_ball<S: Scalar>(y: &[S], r: S) -> Result<Vec<S>> {
    positive("linf ball radius", r.value())?;
    Ok(linf_kernel(y, r))
}

/// `y − Aᵀ(AAᵀ)⁻¹(Ay − b)` for `A` given column-major with `rows` rows.
pub fn proj_affine<S: Scalar>(y: &[S], a: &[S], rows: usize, b: &[S]) -> Result<Vec<S>> {
    check_len("affine matrix", rows * y.len(), a.len())?;
    check_len("affine offset", rows, b.len())?;
    let cols = y.len();
    let residual = ops::sub(&ops::matvec_flat(a, rows, cols, y), b);
    let gram: Vec<Vec<S>> = (0..rows)
        .map(|i| {
            (0..rows)
                .map(|k| {
                    (0..cols).fold(S::zero(), |acc, j| acc + a[j * rows + i] * a[j * rows + k])
                })
                .collect()
        })
        .collect();
    let mu = ops::lu_solve(gram, residual)?;
    Ok(ops::sub(y, &ops::matvec_flat_t(a, rows, cols, &mu)))
}

fn nonzero_normal<S: Scalar>(a: &[S]) -> Result<S> {
    let n2 = ops::sq_norm(a);
    if n2.value() > 0.0 {
        Ok(n2)
    } else {
        Err(Error::InvalidParameter("hyperplane normal must be nonzero".into()))
    }
}

/// Projection onto `{aᵀx = b}`.
pub fn proj_hyperplane<S: Scalar>(y: &[S], a: &[S], b: S) -> Result<Vec<S>> {
    check_len("hyperplane normal", y.len(), a.len())?;
    let n2 = nonzero_normal(a)?;
    let coef = (ops::dot(a, y) - b) / n2;
    Ok(y.iter().zip(a).map(|(&v, &ai)| v - coef * ai).collect())
}

/// Projection onto `{aᵀx ≤ b}`.
pub fn proj_halfspace<S: Scalar>(y: &[S], a: &[S], b: S) -> Result<Vec<S>> {
    check_len("halfspace normal", y.len(), a.len())?;
    let n2 = nonzero_normal(a)?;
    let coef = (ops::dot(a, y) - b).max_c(0.0) / n2;
    Ok(y.iter().zip(a).map(|(&v, &ai)| v - coef * ai).collect())
}

/// Projection onto `{α ≤ x ≤ β, wᵀx = c}`.
///
/// The dual scalar `τ` with `xᵢ(τ) = clip(yᵢ + wᵢτ, αᵢ, βᵢ)` is located by
/// bisection on primal values. One Newton step evaluated in `S` then carries
/// the implicit derivative `dτ = −dg / g'(τ)` into the output.
pub fn proj_box_section<S: Scalar>(
    y: &[S],
    alpha: &[S],
    beta: &[S],
    w: &[S],
    c: S,
) -> Result<Vec<S>> {
    let d = y.len();
    check_len("box section lower bounds", d, alpha.len())?;
    check_len("box section upper bounds", d, beta.len())?;
    check_len("box section weights", d, w.len())?;
    check_bounds(&ops::values(alpha), &ops::values(beta))?;
    let tau0 = box_section_dual(
        &ops::values(y),
        &ops::values(alpha),
        &ops::values(beta),
        &ops::values(w),
        c.value(),
    )?;
    let primal = |tau: S| -> Vec<S> {
        (0..d)
            .map(|i| clamp_s(y[i] + w[i] * tau, alpha[i], beta[i]))
            .collect()
    };
    let slope: f64 = (0..d)
        .filter(|&i| {
            let v = y[i].value() + w[i].value() * tau0;
            w[i].value() != 0.0 && alpha[i].value() < v && v < beta[i].value()
        })
        .map(|i| w[i].value() * w[i].value())
        .sum();
    let tau = if slope > 0.0 {
        let g = ops::dot(w, &primal(S::cst(tau0))) - c;
        S::cst(tau0) - g / slope
    } else {
        S::cst(tau0)
    };
    Ok(primal(tau))
}

fn box_section_dual(y: &[f64], alpha: &[f64], beta: &[f64], w: &[f64], c: f64) -> Result<f64> {
    let g = |tau: f64| -> f64 {
        (0..y.len())
            .map(|i| w[i] * (y[i] + w[i] * tau).clamp(alpha[i], beta[i]))
            .sum::<f64>()
            - c
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..y.len() {
        if w[i] != 0.0 {
            for bound in [alpha[i], beta[i]] {
                let t = (bound - y[i]) / w[i];
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
    }
    let scale = c.abs().max(1.0) * 1e-9;
    if lo > hi {
        // All weights vanish: the constraint does not involve x.
        return if g(0.0).abs() <= scale {
            Ok(0.0)
        } else {
            Err(Error::Domain("box section is empty".into()))
        };
    }
    let (glo, ghi) = (g(lo), g(hi));
    if glo > scale || ghi < -scale {
        return Err(Error::Domain(format!(
            "box section is empty: wᵀx ranges over [{:e}, {:e}] but c = {c:e}",
            glo + c,
            ghi + c
        )));
    }
    if glo >= 0.0 {
        return Ok(lo);
    }
    if ghi <= 0.0 {
        return Ok(hi);
    }
    crate::solvers::bisection_root(g, lo, hi, BOX_SECTION_TOL)
}

/// KL projection onto the simplex: softmax with max-shift.
pub fn kl_proj_simplex<S: Scalar>(y: &[S]) -> Vec<S> {
    ops::softmax(y)
}

/// The whole space (identity projection).
#[derive(Debug, Clone, Copy, Default)]
pub struct WholeSpace;

impl ProjOperator for WholeSpace {
    fn dim_theta(&self) -> usize {
        0
    }
    fn project<S: Scalar>(&self, y: &[S], _theta: &[S]) -> Vec<S> {
        y.to_vec()
    }
}

/// Nonnegative orthant.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nonneg;

impl ProjOperator for Nonneg {
    fn dim_theta(&self) -> usize {
        0
    }
    fn project<S: Scalar>(&self, y: &[S], _theta: &[S]) -> Vec<S> {
        proj_nonneg(y)
    }
    fn kink_distance(&self, y: &[f64], _theta: &[f64]) -> f64 {
        y.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Box. `θ = [lo, hi]` when uniform, `θ = [lo₁..lo_d, hi₁..hi_d]` per
/// coordinate.
#[derive(Debug, Clone, Copy)]
pub struct BoxProj {
    per_coordinate: Option<usize>,
}

impl BoxProj {
    pub fn uniform() -> Self {
        Self {
            per_coordinate: None,
        }
    }

    pub fn per_coordinate(dim: usize) -> Self {
        Self {
            per_coordinate: Some(dim),
        }
    }

    fn bounds<S: Scalar>(&self, d: usize, theta: &[S]) -> (Vec<S>, Vec<S>) {
        match self.per_coordinate {
            None => (vec![theta[0]; d], vec![theta[1]; d]),
            Some(k) => (theta[..k].to_vec(), theta[k..2 * k].to_vec()),
        }
    }
}

impl ProjOperator for BoxProj {
    fn dim_theta(&self) -> usize {
        self.per_coordinate.map_or(2, |d| 2 * d)
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        let (lo, hi) = self.bounds(y.len(), theta);
        box_kernel(y, &lo, &hi)
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        check_len("box parameters", self.dim_theta(), theta.len())?;
        if let Some(k) = self.per_coordinate {
            check_len("box dimension", k, dim)?;
        }
        let (lo, hi) = self.bounds(dim, theta);
        check_bounds(&lo, &hi)
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64]) -> f64 {
        let (lo, hi) = self.bounds(y.len(), theta);
        (0..y.len())
            .map(|i| (y[i] - lo[i]).abs().min((y[i] - hi[i]).abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Probability simplex.
#[derive(Debug, Clone, Copy, Default)]
pub struct Simplex;

impl ProjOperator for Simplex {
    fn dim_theta(&self) -> usize {
        0
    }
    fn project<S: Scalar>(&self, y: &[S], _theta: &[S]) -> Vec<S> {
        proj_simplex(y)
    }
    fn kink_distance(&self, y: &[f64], _theta: &[f64]) -> f64 {
        simplex_kink(y, 1.0)
    }
}

/// Cartesian product of probability simplices over consecutive blocks of
/// `block_len` coordinates.
#[derive(Debug, Clone, Copy)]
pub struct ProductSimplex {
    pub block_len: usize,
}

impl ProjOperator for ProductSimplex {
    fn dim_theta(&self) -> usize {
        0
    }
    fn project<S: Scalar>(&self, y: &[S], _theta: &[S]) -> Vec<S> {
        y.chunks(self.block_len).flat_map(proj_simplex).collect()
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
    fn kink_distance(&self, y: &[f64], _theta: &[f64]) -> f64 {
        y.chunks(self.block_len)
            .map(|b| simplex_kink(b, 1.0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `ℓ₁` ball, `θ = [r]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct L1Ball;

impl ProjOperator for L1Ball {
    fn dim_theta(&self) -> usize {
        1
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        l1_kernel(y, theta[0])
    }
    fn check(&self, _dim: usize, theta: &[f64]) -> Result<()> {
        check_len("l1 ball parameters", 1, theta.len())?;
        positive("l1 ball radius", theta[0])
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64]) -> f64 {
        let l1: f64 = y.iter().map(|v| v.abs()).sum();
        let boundary = (l1 - theta[0]).abs();
        if l1 <= theta[0] {
            return boundary;
        }
        let mags: Vec<f64> = y.iter().map(|v| v.abs()).collect();
        let zero = y.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        boundary.min(simplex_kink(&mags, theta[0])).min(zero)
    }
}

/// `ℓ₂` ball, `θ = [r]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct L2Ball;

impl ProjOperator for L2Ball {
    fn dim_theta(&self) -> usize {
        1
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        l2_kernel(y, theta[0])
    }
    fn check(&self, _dim: usize, theta: &[f64]) -> Result<()> {
        check_len("l2 ball parameters", 1, theta.len())?;
        positive("l2 ball radius", theta[0])
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64]) -> f64 {
        (crate::linalg::norm(y) - theta[0]).abs()
    }
}

/// `ℓ∞` ball, `θ = [r]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinfBall;

impl ProjOperator for LinfBall {
    fn dim_theta(&self) -> usize {
        1
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        linf_kernel(y, theta[0])
    }
    fn check(&self, _dim: usize, theta: &[f64]) -> Result<()> {
        check_len("linf ball parameters", 1, theta.len())?;
        positive("linf ball radius", theta[0])
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64]) -> f64 {
        y.iter()
            .map(|v| (v.abs() - theta[0]).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Affine set `{Ax = b}` with `A ∈ R^{rows×cols}`; `θ = [vec(A), b]`,
/// `A` column-major.
#[derive(Debug, Clone, Copy)]
pub struct AffineSet {
    pub rows: usize,
    pub cols: usize,
}

impl ProjOperator for AffineSet {
    fn dim_theta(&self) -> usize {
        self.rows * self.cols + self.rows
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        let (a, b) = theta.split_at(self.rows * self.cols);
        proj_affine(y, a, self.rows, b).unwrap_or_else(|_| vec![S::cst(f64::NAN); y.len()])
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        check_len("affine set dimension", self.cols, dim)?;
        check_len("affine set parameters", self.dim_theta(), theta.len())?;
        let (a, b) = theta.split_at(self.rows * self.cols);
        proj_affine(&vec![0.0; dim], a, self.rows, b).map(|_| ())
    }
}

/// Hyperplane `{aᵀx = b}`, `θ = [a, b]`.
#[derive(Debug, Clone, Copy)]
pub struct Hyperplane {
    pub dim: usize,
}

impl ProjOperator for Hyperplane {
    fn dim_theta(&self) -> usize {
        self.dim + 1
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        proj_hyperplane(y, &theta[..self.dim], theta[self.dim])
            .unwrap_or_else(|_| vec![S::cst(f64::NAN); y.len()])
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        check_len("hyperplane dimension", self.dim, dim)?;
        check_len("hyperplane parameters", self.dim + 1, theta.len())?;
        nonzero_normal(&theta[..self.dim]).map(|_| ())
    }
}

/// Half-space `{aᵀx ≤ b}`, `θ = [a, b]`.
#[derive(Debug, Clone, Copy)]
pub struct Halfspace {
    pub dim: usize,
}

impl ProjOperator for Halfspace {
    fn dim_theta(&self) -> usize {
        self.dim + 1
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        proj_halfspace(y, &theta[..self.dim], theta[self.dim])
            .unwrap_or_else(|_| vec![S::cst(f64::NAN); y.len()])
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        check_len("halfspace dimension", self.dim, dim)?;
        check_len("halfspace parameters", self.dim + 1, theta.len())?;
        nonzero_normal(&theta[..self.dim]).map(|_| ())
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64]) -> f64 {
        let a = &theta[..self.dim];
        (crate::linalg::dot(a, y) - theta[self.dim]).abs() / crate::linalg::norm(a)
    }
}

/// Box section `{α ≤ x ≤ β, wᵀx = c}`, `θ = [α, β, w, c]`.
#[derive(Debug, Clone, Copy)]
pub struct BoxSection {
    pub dim: usize,
}

impl BoxSection {
    fn split<'t, S>(&self, theta: &'t [S]) -> (&'t [S], &'t [S], &'t [S], &'t S) {
        let d = self.dim;
        (&theta[..d], &theta[d..2 * d], &theta[2 * d..3 * d], &theta[3 * d])
    }
}

impl ProjOperator for BoxSection {
    fn dim_theta(&self) -> usize {
        3 * self.dim + 1
    }
    fn project<S: Scalar>(&self, y: &[S], theta: &[S]) -> Vec<S> {
        let (a, b, w, c) = self.split(theta);
        proj_box_section(y, a, b, w, *c).unwrap_or_else(|_| vec![S::cst(f64::NAN); y.len()])
    }
    fn check(&self, dim: usize, theta: &[f64]) -> Result<()> {
        check_len("box section dimension", self.dim, dim)?;
        check_len("box section parameters", self.dim_theta(), theta.len())?;
        let (a, b, w, c) = self.split(theta);
        check_bounds(a, b)?;
        // Feasibility: the dual bracket exists for some input.
        box_section_dual(a, a, b, w, *c).map(|_| ())
    }
    fn kink_distance(&self, y: &[f64], theta: &[f64]) -> f64 {
        let (a, b, w, c) = self.split(theta);
        match box_section_dual(y, a, b, w, *c) {
            Ok(tau) => (0..y.len())
                .map(|i| {
                    let v = y[i] + w[i] * tau;
                    (v - a[i]).abs().min((v - b[i]).abs())
                })
                .fold(f64::INFINITY, f64::min),
            Err(_) => 0.0,
        }
    }
}
