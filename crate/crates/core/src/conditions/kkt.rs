use crate::autodiff::{ops, DiffFn2, Dual, ScalarFn2, Scalar};
use crate::error::{check_len, Error, Result};
use crate::implicit::RootProblem;
use crate::linalg::{cholesky, DenseMatrix, DenseVector, LuFactorization};

/// Primal and dual variables packed as `(z, ν, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub z: DenseVector,
    /// equality multipliers
    pub nu: DenseVector,
    /// inequality multipliers
    pub lambda: DenseVector,
}

impl KktPoint {
    pub fn pack(&self) -> DenseVector {
        self.z
            .iter()
            .chain(self.nu.iter())
            .chain(self.lambda.iter())
            .copied()
            .collect()
    }

    pub fn unpack(x: &[f64], p: usize, q: usize, r: usize) -> Result<Self> {
        check_len("packed KKT point", p + q + r, x.len())?;
        Ok(Self {
            z: DenseVector::from_vec(x[..p].to_vec()),
            nu: DenseVector::from_vec(x[p..p + q].to_vec()),
            lambda: DenseVector::from_vec(x[p + q..].to_vec()),
        })
    }
}

/// Inequality constraints `G(z, θ) ≤ 0` and equalities `H(z, θ) = 0`.
#[derive(Debug, Clone)]
pub struct ConstraintFns<G, H> {
    pub ineq: G,
    pub eq: H,
}

/// Mapping with no outputs, for problems lacking one constraint family.
#[derive(Debug, Clone, Copy)]
pub struct NoConstraints {
    pub dim_z: usize,
    pub dim_theta: usize,
}

impl DiffFn2 for NoConstraints {
    fn dim_x(&self) -> usize {
        self.dim_z
    }
    fn dim_theta(&self) -> usize {
        self.dim_theta
    }
    fn dim_out(&self) -> usize {
        0
    }
    fn eval<S: Scalar>(&self, _x: &[S], _theta: &[S]) -> Vec<S> {
        Vec::new()
    }
}

/// KKT residual over `(z, ν, λ)`:
/// `[∇₁f + ∂₁Gᵀλ + ∂₁Hᵀν ; H ; λ∘G]`.
#[derive(Debug, Clone)]
pub struct KktMap<F, G, H> {
    pub f: F,
    pub cons: ConstraintFns<G, H>,
}

impl<F: ScalarFn2, G: DiffFn2, H: DiffFn2> KktMap<F, G, H> {
    fn dims(&self) -> (usize, usize, usize) {
        (self.f.dim_x(), self.cons.eq.dim_out(), self.cons.ineq.dim_out())
    }
}

impl<F: ScalarFn2, G: DiffFn2, H: DiffFn2> DiffFn2 for KktMap<F, G, H> {
    fn dim_x(&self) -> usize {
        let (p, q, r) = self.dims();
        p + q + r
    }
    fn dim_theta(&self) -> usize {
        self.f.dim_theta()
    }
    fn dim_out(&self) -> usize {
        self.dim_x()
    }
    fn eval<S: Scalar>(&self, x: &[S], theta: &[S]) -> Vec<S> {
        let (p, q, r) = self.dims();
        let (z, rest) = x.split_at(p);
        let (nu, lambda) = rest.split_at(q);
        let mut stat = self.f.gradient(z, theta);
        if q + r > 0 {
            // ∂Gᵀλ + ∂Hᵀν, one tangent direction per primal coordinate.
            let ts: Vec<Dual<S>> = theta.iter().map(|&t| Dual::constant(t)).collect();
            let mut zs: Vec<Dual<S>> = z.iter().map(|&v| Dual::constant(v)).collect();
            for (i, s) in stat.iter_mut().enumerate() {
                zs[i].eps = S::one();
                let gi = self.cons.ineq.eval(&zs, &ts);
                let hi = self.cons.eq.eval(&zs, &ts);
                zs[i].eps = S::zero();
                for (l, g) in lambda.iter().zip(&gi) {
                    *s += *l * g.eps;
                }
                for (n, h) in nu.iter().zip(&hi) {
                    *s += *n * h.eps;
                }
            }
        }
        let h = self.cons.eq.eval(z, theta);
        let g = self.cons.ineq.eval(z, theta);
        stat.extend(h);
        stat.extend(lambda.iter().zip(&g).map(|(&l, &gi)| l * gi));
        stat
    }
    fn check_domain(&self, x: &[f64], theta: &[f64]) -> Result<()> {
        let z = &x[..self.f.dim_x()];
        self.f.check_domain(z, theta)?;
        self.cons.ineq.check_domain(z, theta)?;
        self.cons.eq.check_domain(z, theta)
    }
}

/// KKT conditions of `min f(z, θ)` s.t. `G(z, θ) ≤ 0`, `H(z, θ) = 0`.
pub fn kkt_condition<F, G, H>(
    f: F,
    cons: ConstraintFns<G, H>,
) -> Result<RootProblem<KktMap<F, G, H>>>
where
    F: ScalarFn2,
    G: DiffFn2,
    H: DiffFn2,
{
    check_len("inequality constraint input", f.dim_x(), cons.ineq.dim_x())?;
    check_len("equality constraint input", f.dim_x(), cons.eq.dim_x())?;
    check_len("inequality constraint parameters", f.dim_theta(), cons.ineq.dim_theta())?;
    check_len("equality constraint parameters", f.dim_theta(), cons.eq.dim_theta())?;
    RootProblem::new(KktMap { f, cons })
}

/// Quadratic program `min ½zᵀQz + cᵀz` s.t. `Ez = d`, `Mz ≤ h`.
///
/// As a parameter vector the data is flattened as
/// `θ = [vec(Q), vec(E), vec(M), c, d, h]`, matrices column-major.
#[derive(Debug, Clone)]
pub struct QpData {
    pub q: DenseMatrix,
    pub c: DenseVector,
    pub e: DenseMatrix,
    pub d: DenseVector,
    pub m: DenseMatrix,
    pub h: DenseVector,
}

/// Tolerance on the smallest eigenvalue of `Q`.
const PSD_TOL: f64 = 1e-9;
/// Constraints with `|Gᵢ| ≤ ACTIVE_TOL` count as active.
const ACTIVE_TOL: f64 = 1e-10;

impl QpData {
    pub fn new(
        q: DenseMatrix,
        c: DenseVector,
        e: DenseMatrix,
        d: DenseVector,
        m: DenseMatrix,
        h: DenseVector,
    ) -> Result<Self> {
        let p = c.len();
        check_len("Q rows", p, q.rows())?;
        check_len("Q cols", p, q.cols())?;
        check_len("E cols", p, e.cols())?;
        check_len("d", e.rows(), d.len())?;
        check_len("M cols", p, m.cols())?;
        check_len("h", m.rows(), h.len())?;
        if !q.is_symmetric() {
            return Err(Error::InvalidParameter("Q must be symmetric".into()));
        }
        let shifted = q.add(&DenseMatrix::identity(p).scaled(PSD_TOL))?;
        if p > 0 && cholesky(&shifted).is_none() {
            return Err(Error::InvalidParameter(format!(
                "Q must be positive semi-definite (smallest eigenvalue below -{PSD_TOL:e})"
            )));
        }
        Ok(Self { q, c, e, d, m, h })
    }

    /// Unconstrained QP.
    pub fn unconstrained(q: DenseMatrix, c: DenseVector) -> Result<Self> {
        let p = c.len();
        Self::new(
            q,
            c,
            DenseMatrix::zeros(0, p),
            DenseVector::zeros(0),
            DenseMatrix::zeros(0, p),
            DenseVector::zeros(0),
        )
    }

    /// `(p, q, r)`: primal, equality and inequality counts.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.c.len(), self.d.len(), self.h.len())
    }

    pub fn theta(&self) -> Vec<f64> {
        [
            self.q.data(),
            self.e.data(),
            self.m.data(),
            self.c.as_slice(),
            self.d.as_slice(),
            self.h.as_slice(),
        ]
        .concat()
    }
}

#[derive(Debug, Clone, Copy)]
struct QpLayout {
    p: usize,
    q: usize,
    r: usize,
}

impl QpLayout {
    fn len(&self) -> usize {
        let QpLayout { p, q, r } = *self;
        p * p + q * p + r * p + p + q + r
    }

    /// `(Q, E, M, c, d, h)` slices of `θ`.
    fn split<'t, S>(&self, t: &'t [S]) -> [&'t [S]; 6] {
        let QpLayout { p, q, r } = *self;
        let mut out: [&[S]; 6] = [&[]; 6];
        let mut offset = 0;
        for (slot, len) in out.iter_mut().zip([p * p, q * p, r * p, p, q, r]) {
            *slot = &t[offset..offset + len];
            offset += len;
        }
        out
    }
}

/// `½zᵀQz + cᵀz` with `(Q, c)` read from the flattened QP parameters.
#[derive(Debug, Clone, Copy)]
pub struct QpObjective {
    layout: QpLayout,
}

impl ScalarFn2 for QpObjective {
    fn dim_x(&self) -> usize {
        self.layout.p
    }
    fn dim_theta(&self) -> usize {
        self.layout.len()
    }
    fn value<S: Scalar>(&self, z: &[S], theta: &[S]) -> S {
        let [q, _, _, c, _, _] = self.layout.split(theta);
        let qz = ops::matvec_flat(q, self.layout.p, self.layout.p, z);
        ops::dot(z, &qz) * 0.5 + ops::dot(c, z)
    }
    fn gradient<S: Scalar>(&self, z: &[S], theta: &[S]) -> Vec<S> {
        let [q, _, _, c, _, _] = self.layout.split(theta);
        ops::add(&ops::matvec_flat(q, self.layout.p, self.layout.p, z), c)
    }
}

/// `Ez − d`.
#[derive(Debug, Clone, Copy)]
pub struct QpEq {
    layout: QpLayout,
}

impl DiffFn2 for QpEq {
    fn dim_x(&self) -> usize {
        self.layout.p
    }
    fn dim_theta(&self) -> usize {
        self.layout.len()
    }
    fn dim_out(&self) -> usize {
        self.layout.q
    }
    fn eval<S: Scalar>(&self, z: &[S], theta: &[S]) -> Vec<S> {
        let [_, e, _, _, d, _] = self.layout.split(theta);
        ops::sub(&ops::matvec_flat(e, self.layout.q, self.layout.p, z), d)
    }
}

/// `Mz − h`.
#[derive(Debug, Clone, Copy)]
pub struct QpIneq {
    layout: QpLayout,
}

impl DiffFn2 for QpIneq {
    fn dim_x(&self) -> usize {
        self.layout.p
    }
    fn dim_theta(&self) -> usize {
        self.layout.len()
    }
    fn dim_out(&self) -> usize {
        self.layout.r
    }
    fn eval<S: Scalar>(&self, z: &[S], theta: &[S]) -> Vec<S> {
        let [_, _, m, _, _, h] = self.layout.split(theta);
        ops::sub(&ops::matvec_flat(m, self.layout.r, self.layout.p, z), h)
    }
}

/// KKT root problem of a QP, parameterized by [`QpData::theta`].
pub fn qp_kkt(qp: &QpData) -> Result<RootProblem<KktMap<QpObjective, QpIneq, QpEq>>> {
    let (p, q, r) = qp.dims();
    let layout = QpLayout { p, q, r };
    kkt_condition(
        QpObjective { layout },
        ConstraintFns {
            ineq: QpIneq { layout },
            eq: QpEq { layout },
        },
    )
}

/// Solves `[[Q, Cᵀ], [C, 0]] [z; μ] = [−c; b]` for the stacked constraints.
fn saddle_solve(qp: &QpData, rows: &[(Vec<f64>, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = qp.c.len();
    let k = rows.len();
    let kkt = DenseMatrix::from_fn(p + k, p + k, |i, j| match (i < p, j < p) {
        (true, true) => qp.q[(i, j)],
        (true, false) => rows[j - p].0[i],
        (false, true) => rows[i - p].0[j],
        (false, false) => 0.0,
    });
    let rhs: Vec<f64> = qp
        .c
        .iter()
        .map(|v| -v)
        .chain(rows.iter().map(|r| r.1))
        .collect();
    let sol = LuFactorization::new(&kkt)?.solve_vec(&rhs)?.into_vec();
    Ok((sol[..p].to_vec(), sol[p..].to_vec()))
}

/// Dense QP solver for small instances.
///
/// Equality-only problems are solved through the saddle-point system.
/// With inequalities, an active-set loop starts from the equality-only
/// solution, adds the most violated constraint or drops the most negative
/// multiplier, and gives up after `5r` changes.
pub fn qp_solve_dense(qp: &QpData) -> Result<KktPoint> {
    let (p, q, r) = qp.dims();
    let eq_rows: Vec<(Vec<f64>, f64)> = (0..q).map(|i| (qp.e.row(i).into_vec(), qp.d[i])).collect();
    let ineq_rows: Vec<(Vec<f64>, f64)> =
        (0..r).map(|i| (qp.m.row(i).into_vec(), qp.h[i])).collect();
    let mut active: Vec<usize> = Vec::new();
    let max_changes = 5 * r;
    let mut changes = 0;
    loop {
        let rows: Vec<(Vec<f64>, f64)> = eq_rows
            .iter()
            .cloned()
            .chain(active.iter().map(|&i| ineq_rows[i].clone()))
            .collect();
        let (z, mu) = saddle_solve(qp, &rows)?;
        let slack = |i: usize| crate::linalg::dot(&ineq_rows[i].0, &z) - ineq_rows[i].1;
        let violated = (0..r)
            .filter(|i| !active.contains(i))
            .map(|i| (i, slack(i)))
            .filter(|&(_, s)| s > ACTIVE_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let negative = active
            .iter()
            .enumerate()
            .map(|(k, &i)| (k, i, mu[q + k]))
            .filter(|&(_, _, l)| l < -ACTIVE_TOL)
            .min_by(|a, b| a.2.total_cmp(&b.2));
        match (violated, negative) {
            (None, None) => {
                let mut lambda = vec![0.0; r];
                for (k, &i) in active.iter().enumerate() {
                    lambda[i] = mu[q + k].max(0.0);
                }
                debug_assert_eq!(z.len(), p);
                return Ok(KktPoint {
                    z: DenseVector::from_vec(z),
                    nu: DenseVector::from_vec(mu[..q].to_vec()),
                    lambda: DenseVector::from_vec(lambda),
                });
            }
            (Some((i, _)), _) => active.push(i),
            (None, Some((k, _, _))) => {
                active.remove(k);
            }
        }
        changes += 1;
        if changes > max_changes {
            return Err(Error::NotConverged {
                what: "QP active-set refinement",
                iterations: changes,
            });
        }
    }
}
