//! Brute-force reference projections for tests.
//!
//! Polyhedral sets are written as `{Ex = e, Gx ≤ h}`. Every subset of the
//! inequalities is tried as the active set; the equality-constrained
//! projection for that subset is kept if feasible, and the closest feasible
//! candidate is the projection.

use crate::linalg::{distance, DenseMatrix, DenseVector, LuFactorization};

const FEAS_TOL: f64 = 1e-9;
const MAX_FACETS: usize = 16;

/// Explicit description of a convex set.
#[derive(Debug, Clone)]
pub enum SetDescriptor {
    Nonneg,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Simplex,
    L1Ball { radius: f64 },
    L2Ball { radius: f64 },
    LinfBall { radius: f64 },
    Affine { a: DenseMatrix, b: Vec<f64> },
    Hyperplane { a: Vec<f64>, b: f64 },
    Halfspace { a: Vec<f64>, b: f64 },
    BoxSection { alpha: Vec<f64>, beta: Vec<f64>, w: Vec<f64>, c: f64 },
}

struct Polyhedron {
    eq: Vec<(Vec<f64>, f64)>,
    ineq: Vec<(Vec<f64>, f64)>,
}

fn unit(d: usize, i: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = s;
    v
}

fn box_rows(lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let d = lo.len();
    (0..d)
        .map(|i| (unit(d, i, 1.0), hi[i]))
        .chain((0..d).map(|i| (unit(d, i, -1.0), -lo[i])))
        .collect()
}

impl SetDescriptor {
    fn polyhedron(&self, y: &[f64]) -> Option<Polyhedron> {
        let d = y.len();
        let nonneg = || (0..d).map(|i| (unit(d, i, -1.0), 0.0)).collect::<Vec<_>>();
        let p = match self {
            SetDescriptor::Nonneg => Polyhedron {
                eq: vec![],
                ineq: nonneg(),
            },
            SetDescriptor::Box { lo, hi } => Polyhedron {
                eq: vec![],
                ineq: box_rows(lo, hi),
            },
            SetDescriptor::LinfBall { radius } => Polyhedron {
                eq: vec![],
                ineq: box_rows(&vec![-radius; d], &vec![*radius; d]),
            },
            SetDescriptor::Simplex => Polyhedron {
                eq: vec![(vec![1.0; d], 1.0)],
                ineq: nonneg(),
            },
            SetDescriptor::L1Ball { radius } => {
                // The projection shares the sign pattern of y.
                let s: Vec<f64> = y.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
                let mut ineq: Vec<_> = (0..d).map(|i| (unit(d, i, -s[i]), 0.0)).collect();
                ineq.push((s, *radius));
                Polyhedron { eq: vec![], ineq }
            }
            SetDescriptor::L2Ball { .. } => return None,
            SetDescriptor::Affine { a, b } => Polyhedron {
                eq: (0..a.rows()).map(|i| (a.row(i).into_vec(), b[i])).collect(),
                ineq: vec![],
            },
            SetDescriptor::Hyperplane { a, b } => Polyhedron {
                eq: vec![(a.clone(), *b)],
                ineq: vec![],
            },
            SetDescriptor::Halfspace { a, b } => Polyhedron {
                eq: vec![],
                ineq: vec![(a.clone(), *b)],
            },
            SetDescriptor::BoxSection { alpha, beta, w, c } => Polyhedron {
                eq: vec![(w.clone(), *c)],
                ineq: box_rows(alpha, beta),
            },
        };
        Some(p)
    }
}

/// Projection of `y` onto `{Cx = c}`, or `None` when `CCᵀ` is singular.
fn equality_projection(y: &[f64], rows: &[&(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    if rows.is_empty() {
        return Some(y.to_vec());
    }
    let k = rows.len();
    let gram = DenseMatrix::from_fn(k, k, |i, j| crate::linalg::dot(&rows[i].0, &rows[j].0));
    let resid: Vec<f64> = rows
        .iter()
        .map(|(a, b)| crate::linalg::dot(a, y) - b)
        .collect();
    let mu = LuFactorization::new(&gram).ok()?.solve_vec(&resid).ok()?;
    let mut x = y.to_vec();
    for (m, (a, _)) in mu.iter().zip(rows) {
        crate::linalg::axpy(-m, a, &mut x);
    }
    Some(x)
}

fn feasible(p: &Polyhedron, x: &[f64]) -> bool {
    p.eq
        .iter()
        .all(|(a, b)| (crate::linalg::dot(a, x) - b).abs() <= FEAS_TOL * b.abs().max(1.0))
        && p
            .ineq
            .iter()
            .all(|(a, b)| crate::linalg::dot(a, x) - b <= FEAS_TOL * b.abs().max(1.0))
}

fn l2_ball_oracle(y: &[f64], r: f64) -> Vec<f64> {
    let n = crate::linalg::norm(y);
    if n <= r {
        return y.to_vec();
    }
    // x = y / (1 + μ) with the multiplier μ ≥ 0 fixed by ‖x‖ = r.
    let mu = crate::solvers::bisection_root(|m| n / (1.0 + m) - r, 0.0, n / r, 1e-15)
        .expect("bracket [0, ‖y‖/r] always contains the multiplier");
    y.iter().map(|v| v / (1.0 + mu)).collect()
}

/// Reference projection by exhaustive active-set enumeration (at most 16
/// inequalities) or, for the `ℓ₂` ball, by bisection on the multiplier.
pub fn proj_oracle(set: &SetDescriptor, y: &[f64]) -> DenseVector {
    if let SetDescriptor::L2Ball { radius } = set {
        return DenseVector::from_vec(l2_ball_oracle(y, *radius));
    }
    let p = set.polyhedron(y).expect("polyhedral set");
    let k = p.ineq.len();
    assert!(k <= MAX_FACETS, "proj_oracle: {k} inequalities exceed the enumeration limit");
    let d = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let active = mask.count_ones() as usize;
        if active + p.eq.len() > d {
            continue;
        }
        let rows: Vec<&(Vec<f64>, f64)> = p
            .eq
            .iter()
            .chain((0..k).filter(|i| mask & (1 << i) != 0).map(|i| &p.ineq[i]))
            .collect();
        let Some(x) = equality_projection(y, &rows) else {
            continue;
        };
        if !feasible(&p, &x) {
            continue;
        }
        let dist = distance(&x, y);
        if best.as_ref().map_or(true, |(bd, _)| dist < *bd) {
            best = Some((dist, x));
        }
    }
    DenseVector::from_vec(best.expect("proj_oracle: empty set").1)
}
