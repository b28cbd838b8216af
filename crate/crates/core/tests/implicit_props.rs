use idiff::autodiff::{finite_diff_jacobian, ops, DiffFn2, Scalar, ScalarFn2};
use idiff::bounds::{ridge_closed_form, RidgeProblemData};
use idiff::conditions::*;
use idiff::implicit::*;
use idiff::linalg::{distance, dot, norm, DenseMatrix, DenseVector};
use idiff::operators::{BoxProj, Fixed, KlSimplex, MirrorMap, Simplex};
use idiff::solvers::{gradient_descent, proximal_gradient, StepRule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `F(x, θ) = Mx + ε·x/(1 + x²) − Nθ − ε·θ₀x` with `M` diagonally dominant.
struct RandomMap {
    m: DenseMatrix,
    n: DenseMatrix,
    eps: f64,
}

impl RandomMap {
    fn new(rng: &mut ChaCha8Rng, d: usize, p: usize) -> Self {
        let m = DenseMatrix::from_fn(d, d, |i, j| {
            let r: f64 = rng.random_range(-1.0..1.0);
            if i == j { 2.0 * d as f64 + r } else { r }
        });
        let n = DenseMatrix::from_fn(d, p, |_, _| rng.random_range(-1.0..1.0));
        Self { m, n, eps: 0.1 }
    }
}

impl DiffFn2 for RandomMap {
    fn dim_x(&self) -> usize {
        self.m.cols()
    }
    fn dim_theta(&self) -> usize {
        self.n.cols()
    }
    fn dim_out(&self) -> usize {
        self.m.rows()
    }
    fn eval<S: Scalar>(&self, x: &[S], t: &[S]) -> Vec<S> {
        let mx = ops::matvec(&self.m, x);
        let nt = ops::matvec(&self.n, t);
        (0..x.len())
            .map(|i| mx[i] + x[i] / (x[i] * x[i] + 1.0) * self.eps - nt[i] - t[0] * x[i] * self.eps)
            .collect()
    }
}

fn rel_close(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> bool {
    a.sub(b).unwrap().frobenius_norm() <= tol * b.frobenius_norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jvp_and_vjp_are_adjoint(seed in any::<u64>(), d in 1usize..=8, p in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rp = RootProblem::new(RandomMap::new(&mut rng, d, p)).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        for solver in [LinearSolver::Auto, LinearSolver::Gmres, LinearSolver::NormalCg] {
            let cfg = ImplicitConfig::default().with_solver(solver).with_tol(1e-13);
            let (jw, _) = root_jvp(&rp, &x, &t, &w, &cfg).unwrap();
            let (jtv, _) = root_vjp(&rp, &x, &t, &v, &cfg).unwrap();
            let (a, b) = (dot(&v, &jw), dot(&jtv, &w));
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12), "{solver:?}: {a} vs {b}");
        }
    }

    #[test]
    fn gradient_step_size_cancels(seed in any::<u64>(), d in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = DenseMatrix::from_fn(d + 2, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DenseVector::from_vec((0..d + 2).map(|_| rng.random_range(-1.0..1.0)).collect());
        let theta: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
        let data = RidgeProblemData::new(phi, y, DenseVector::from_vec(theta.clone())).unwrap();
        let (x, exact) = ridge_closed_form(&data).unwrap();
        // Slightly off the root so that the estimate is not trivially exact.
        let xh: Vec<f64> = x.iter().map(|v| v + 1e-3).collect();
        let reference = jacobian_estimate(&gradient_descent_fp(data.objective(), 1.0).unwrap().to_root(), &xh, &theta, &ImplicitConfig::default()).unwrap().matrix;
        for eta in [0.1, 10.0] {
            let j = jacobian_estimate(&gradient_descent_fp(data.objective(), eta).unwrap().to_root(), &xh, &theta, &ImplicitConfig::default()).unwrap().matrix;
            prop_assert!(j.sub(&reference).unwrap().max_abs() <= 1e-9);
        }
        let at_root = jacobian_estimate(&stationary_condition(data.objective()).unwrap(), &x, &theta, &ImplicitConfig::default()).unwrap().matrix;
        prop_assert!(rel_close(&at_root, &exact, 1e-8));
        let newton = jacobian_estimate(&newton_fp(StationaryMap(data.objective()), 1.0).unwrap().to_root(), &x, &theta, &ImplicitConfig::default()).unwrap().matrix;
        prop_assert!(rel_close(&newton, &at_root, 1e-8));
    }
}

/// `½‖x − θ‖²` weighted by a fixed SPD matrix: `½(x − θ)ᵀQ(x − θ)`.
struct Weighted {
    q: DenseMatrix,
}

impl ScalarFn2 for Weighted {
    fn dim_x(&self) -> usize {
        self.q.rows()
    }
    fn dim_theta(&self) -> usize {
        self.q.rows()
    }
    fn value<S: Scalar>(&self, x: &[S], t: &[S]) -> S {
        let r = ops::sub(x, t);
        ops::dot(&r, &ops::matvec(&self.q, &r)) * 0.5
    }
}

/// Box constraints `lo ≤ z ≤ hi` as `G(z) ≤ 0`.
struct BoxIneq {
    lo: f64,
    hi: f64,
    d: usize,
}

impl DiffFn2 for BoxIneq {
    fn dim_x(&self) -> usize {
        self.d
    }
    fn dim_theta(&self) -> usize {
        self.d
    }
    fn dim_out(&self) -> usize {
        2 * self.d
    }
    fn eval<S: Scalar>(&self, z: &[S], _t: &[S]) -> Vec<S> {
        z.iter()
            .map(|&v| v - self.hi)
            .chain(z.iter().map(|&v| S::cst(self.lo) - v))
            .collect()
    }
}

fn weighted(d: usize) -> Weighted {
    let q = DenseMatrix::from_fn(d, d, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 });
    Weighted { q }
}

#[test]
fn box_constrained_catalog_agrees() {
    let d = 3;
    let (lo, hi) = (0.0, 1.0);
    // The unconstrained minimizer θ is clipped on coordinate 0, interior elsewhere.
    let theta = [1.6, 0.4, 0.3];
    let proj = Fixed::new(BoxProj::uniform(), vec![lo, hi]);
    let (z, _) = proximal_gradient(&weighted(d), &idiff::operators::ProjectionProx { proj: proj.clone() }, &theta, &[0.5; 3], 5000, 0.15, true).unwrap();

    let q = weighted(d).q;
    let qp = QpData::new(
        q.clone(),
        DenseVector::from_vec(q.matvec(&theta).iter().map(|v| -v).collect()),
        DenseMatrix::zeros(0, d),
        DenseVector::zeros(0),
        DenseMatrix::from_fn(2 * d, d, |i, j| if i == j { 1.0 } else if i == j + d { -1.0 } else { 0.0 }),
        DenseVector::from_vec(vec![hi, hi, hi, -lo, -lo, -lo]),
    )
    .unwrap();
    let sol = qp_solve_dense(&qp).unwrap();
    assert!(distance(&sol.z, &z) < 1e-9, "{:?} vs {z:?}", sol.z);

    let pg = jacobian_estimate(&projected_gradient_fp(weighted(d), proj, 0.15).unwrap().to_root(), &z, &theta, &ImplicitConfig::default()).unwrap().matrix;

    let kkt = kkt_condition(
        weighted(d),
        ConstraintFns { ineq: BoxIneq { lo, hi, d }, eq: NoConstraints { dim_z: d, dim_theta: d } },
    )
    .unwrap();
    let packed = sol.pack();
    let jk = jacobian_estimate(&kkt, &packed, &theta, &ImplicitConfig::default()).unwrap().matrix;
    let jk_z = DenseMatrix::from_fn(d, d, |i, j| jk[(i, j)]);
    assert!(rel_close(&jk_z, &pg, 1e-6));

    // qp_kkt differentiates w.r.t. the QP data; chain through c = −Qθ.
    let qrp = qp_kkt(&qp).unwrap();
    let jq = jacobian_estimate(&qrp, &packed, &qp.theta(), &ImplicitConfig::default()).unwrap().matrix;
    let c_offset = d * d + 2 * d * d;
    let jq_z = DenseMatrix::from_fn(d, d, |i, j| jq[(i, c_offset + j)]);
    let chained = jq_z.matmul(&q.scaled(-1.0)).unwrap();
    assert!(rel_close(&chained, &pg, 1e-6));
}

#[test]
fn simplex_interior_catalog_agrees() {
    let d = 3;
    let theta = [0.5, 0.3, 0.4];
    let f = weighted(d);
    let proj = Fixed::new(Simplex, vec![]);
    let (z, _) = proximal_gradient(&f, &idiff::operators::ProjectionProx { proj: proj.clone() }, &theta, &[1.0 / 3.0; 3], 5000, 0.15, true).unwrap();
    assert!(z.iter().all(|v| *v > 1e-3), "interior solution expected: {z:?}");
    let pg = jacobian_estimate(&projected_gradient_fp(weighted(d), proj, 0.15).unwrap().to_root(), &z, &theta, &ImplicitConfig::default()).unwrap().matrix;
    let md = jacobian_estimate(&mirror_descent_fp(weighted(d), MirrorMap::Kl, KlSimplex, 0.15).unwrap().to_root(), &z, &theta, &ImplicitConfig::default()).unwrap().matrix;
    assert!(rel_close(&md, &pg, 1e-6));
}

#[test]
fn stationary_jacobian_matches_resolved_finite_differences() {
    struct SoftplusRidge;
    impl ScalarFn2 for SoftplusRidge {
        fn dim_x(&self) -> usize {
            2
        }
        fn dim_theta(&self) -> usize {
            2
        }
        fn value<S: Scalar>(&self, x: &[S], t: &[S]) -> S {
            let z = x[0] * 0.7 - x[1] * 0.2 + t[0];
            (z.exp() + 1.0).ln() + ops::sq_norm(x) * t[1].exp() * 0.5 - x[1] * t[0]
        }
    }
    let solve = |t: &[f64]| -> DenseVector {
        gradient_descent(&SoftplusRidge, t, &[0.0, 0.0], 2000, StepRule::Backtracking).unwrap().0
    };
    let theta = [0.3, -0.2];
    let x = solve(&theta);
    assert!(norm(&idiff::autodiff::grad_x(&SoftplusRidge, &x, &theta).unwrap()) < 1e-10);
    let j = jacobian_estimate(&stationary_condition(SoftplusRidge).unwrap(), &x, &theta, &ImplicitConfig::default()).unwrap().matrix;
    let fd = finite_diff_jacobian(solve, &theta, 1e-5);
    assert!(rel_close(&j, &fd, 1e-4));
}

#[test]
fn ridge_hypergradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = 4;
    let phi = DenseMatrix::from_fn(6, d, |_, _| rng.random_range(-1.0..1.0));
    let y = DenseVector::from_vec((0..6).map(|_| rng.random_range(-1.0..1.0)).collect());
    let x0 = vec![0.1; d];
    let theta: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
    let outer = |t: &[f64]| {
        let data = RidgeProblemData::new(phi.clone(), y.clone(), DenseVector::from_vec(t.to_vec())).unwrap();
        let (x, _) = ridge_closed_form(&data).unwrap();
        0.5 * distance(&x, &x0).powi(2)
    };
    let data = RidgeProblemData::new(phi.clone(), y.clone(), DenseVector::from_vec(theta.clone())).unwrap();
    let (x, _) = ridge_closed_form(&data).unwrap();
    let g = x.sub(&x0);
    let hg = hypergradient(&stationary_condition(data.objective()).unwrap(), &x, &theta, &g, &ImplicitConfig::default()).unwrap();
    let fd = finite_diff_jacobian(|t| DenseVector::from_vec(vec![outer(t)]), &theta, 1e-6);
    assert!(distance(&hg, fd.row(0).as_slice()) <= 1e-5 * norm(&hg));
}
