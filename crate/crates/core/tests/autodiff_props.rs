//! Randomized checks of forward-mode derivatives on expressions drawn from a
//! small grammar.

use idiff::autodiff::*;
use idiff::linalg::{dot, DenseVector};
use proptest::prelude::*;

const DX: usize = 3;
const DT: usize = 2;

#[derive(Debug, Clone)]
enum Expr {
    X(usize),
    T(usize),
    Const(f64),
    Lin([f64; DX]),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// `exp(tanh-like squashed argument)` keeps magnitudes bounded.
    Exp(Box<Expr>),
    /// `log(1 + a²)`
    Log1pSq(Box<Expr>),
    /// `a / (1 + a²)`
    Ratio(Box<Expr>),
    /// `max(a, c)`
    Max(Box<Expr>, f64),
}

impl Expr {
    fn eval<S: Scalar>(&self, x: &[S], t: &[S]) -> S {
        match self {
            Expr::X(i) => x[*i],
            Expr::T(j) => t[*j],
            Expr::Const(c) => S::cst(*c),
            Expr::Lin(c) => ops::dot_c(x, c),
            Expr::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Expr::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Expr::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Expr::Exp(a) => {
                let v = a.eval(x, t);
                (v / (v * v + 1.0).sqrt()).exp()
            }
            Expr::Log1pSq(a) => {
                let v = a.eval(x, t);
                (v * v + 1.0).ln()
            }
            Expr::Ratio(a) => {
                let v = a.eval(x, t);
                v / (v * v + 1.0)
            }
            Expr::Max(a, c) => a.eval(x, t).max_c(*c),
        }
    }

    /// Smallest gap `|a − c|` over all `max` nodes at the point.
    fn kink_gap(&self, x: &[f64], t: &[f64]) -> f64 {
        match self {
            Expr::X(_) | Expr::T(_) | Expr::Const(_) | Expr::Lin(_) => f64::INFINITY,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.kink_gap(x, t).min(b.kink_gap(x, t))
            }
            Expr::Exp(a) | Expr::Log1pSq(a) | Expr::Ratio(a) => a.kink_gap(x, t),
            Expr::Max(a, c) => a.kink_gap(x, t).min((a.eval(x, t) - c).abs()),
        }
    }
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..DX).prop_map(Expr::X),
        (0..DT).prop_map(Expr::T),
        (-2.0..2.0f64).prop_map(Expr::Const),
        prop::array::uniform3(-1.0..1.0f64).prop_map(Expr::Lin),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Exp(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Log1pSq(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Ratio(Box::new(a))),
            (inner, -1.0..1.0f64).prop_map(|(a, c)| Expr::Max(Box::new(a), c)),
        ]
    })
}

struct ExprMap(Vec<Expr>);

impl DiffFn2 for ExprMap {
    fn dim_x(&self) -> usize {
        DX
    }
    fn dim_theta(&self) -> usize {
        DT
    }
    fn dim_out(&self) -> usize {
        self.0.len()
    }
    fn eval<S: Scalar>(&self, x: &[S], t: &[S]) -> Vec<S> {
        self.0.iter().map(|e| e.eval(x, t)).collect()
    }
}

struct ExprScalar(Expr);

impl ScalarFn2 for ExprScalar {
    fn dim_x(&self) -> usize {
        DX
    }
    fn dim_theta(&self) -> usize {
        DT
    }
    fn value<S: Scalar>(&self, x: &[S], t: &[S]) -> S {
        self.0.eval(x, t)
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    diff / scale
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jvps_match_finite_differences(
        f in prop::collection::vec(expr(), 2),
        x in point(DX), t in point(DT), v in point(DX), w in point(DT),
    ) {
        let map = ExprMap(f);
        let gap = map.0.iter().map(|e| e.kink_gap(&x, &t)).fold(f64::INFINITY, f64::min);
        prop_assume!(gap > 1e-3);
        let jv = jvp_x(&map, &x, &t, &v).unwrap();
        let fd = finite_diff_jacobian(|p| DenseVector::from_vec(map.eval(p, &t)), &x, 1e-6).matvec(&v);
        prop_assert!(rel_err(&jv, &fd) <= 1e-5, "{jv:?} vs {fd:?}");
        let jw = jvp_theta(&map, &x, &t, &w).unwrap();
        let fd = finite_diff_jacobian(|p| DenseVector::from_vec(map.eval(&x, p)), &t, 1e-6).matvec(&w);
        prop_assert!(rel_err(&jw, &fd) <= 1e-5, "{jw:?} vs {fd:?}");
    }

    #[test]
    fn jvp_vjp_adjointness(
        f in prop::collection::vec(expr(), 2),
        x in point(DX), t in point(DT), v in point(DX), u in point(2), w in point(DT),
    ) {
        let map = ExprMap(f);
        let lhs = dot(&u, &jvp_x(&map, &x, &t, &v).unwrap());
        let rhs = dot(&vjp_x(&map, &x, &t, &u).unwrap(), &v);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
        let lhs = dot(&u, &jvp_theta(&map, &x, &t, &w).unwrap());
        let rhs = dot(&vjp_theta(&map, &x, &t, &u).unwrap(), &w);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn hessian_products_are_symmetric(
        f in expr(), x in point(DX), t in point(DT), u in point(DX), v in point(DX),
    ) {
        let f = ExprScalar(f);
        let a = dot(&u, &hvp_x(&f, &x, &t, &v).unwrap());
        let b = dot(&v, &hvp_x(&f, &x, &t, &u).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0));
    }

    #[test]
    fn polynomial_derivatives_are_exact(x in -10.0..10.0f64) {
        let d = Dual::var(x);
        let p = d.powi(3) - d * d * 2.0 + 5.0;
        let exact = 3.0 * x * x - 4.0 * x;
        let ulps = (p.eps - exact).abs() / (f64::EPSILON * exact.abs().max(f64::MIN_POSITIVE));
        prop_assert!(ulps <= 4.0 || (p.eps - exact).abs() <= 4.0 * f64::EPSILON * (3.0 * x * x).max(4.0 * x.abs()),
            "{} vs {exact}", p.eps);
    }
}

#[test]
fn documented_examples() {
    struct Half;
    impl ScalarFn2 for Half {
        fn dim_x(&self) -> usize {
            2
        }
        fn dim_theta(&self) -> usize {
            1
        }
        fn value<S: Scalar>(&self, x: &[S], t: &[S]) -> S {
            ops::sq_norm(x) * t[0] * 0.5
        }
    }
    assert_eq!(grad_x(&Half, &[1.0, 2.0], &[1.0]).unwrap().as_slice(), &[1.0, 2.0]);
    assert_eq!(hvp_x(&Half, &[1.0, 2.0], &[1.0], &[0.5, -1.0]).unwrap().as_slice(), &[0.5, -1.0]);
    assert_eq!(cross_jvp(&Half, &[1.0, 2.0], &[1.0], &[1.0]).unwrap().as_slice(), &[1.0, 2.0]);
    let sq = finite_diff_jacobian(|p| DenseVector::from_vec(vec![p[0] * p[0]]), &[3.0], 1e-5);
    assert!((sq[(0, 0)] - 6.0).abs() < 1e-8);
}
