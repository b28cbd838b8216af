use idiff::linalg::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.data())
}

fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `QΛQᵀ` with orthogonal `Q` and eigenvalues drawn from `[0.1, 10]`.
fn spd(rng: &mut ChaCha8Rng, d: usize) -> DenseMatrix {
    let q = gaussian(rng, d, d).qr().q();
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| rng.random_range(0.1..10.0)));
    from_na(&(&q * lambda * q.transpose()))
}

/// Nonsymmetric, well conditioned: identity plus a scaled Gaussian.
fn well_conditioned(rng: &mut ChaCha8Rng, d: usize) -> DenseMatrix {
    let g = gaussian(rng, d, d) * (0.3 / (d as f64).sqrt());
    from_na(&(DMatrix::identity(d, d) * 2.0 + g))
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    distance(a, b) / norm(b).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cg_converges_on_spd(seed in any::<u64>(), d in 1usize..=64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = spd(&mut rng, d);
        let b = gaussian_vec(&mut rng, d);
        let op = LinearMap::from_matrix(a.clone());
        let (x, report) = cg_solve(&op, &b, 1e-10, d + 5).unwrap();
        prop_assert!(report.converged, "{report:?}");
        prop_assert!(report.iterations <= d + 5);
        prop_assert!(distance(&a.matvec(&x), &b) / norm(&b).max(1.0) <= 1e-8);
    }

    #[test]
    fn nonsymmetric_solvers_match_lu(seed in any::<u64>(), d in 1usize..=32) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = well_conditioned(&mut rng, d);
        let b = gaussian_vec(&mut rng, d);
        let reference: Vec<f64> = to_na(&a).lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap().iter().copied().collect();
        let ours = dense_solve(&a, &DenseMatrix::from_columns(&[DenseVector::from_vec(b.clone())]).unwrap()).unwrap();
        prop_assert!(rel(ours.col(0), &reference) <= 1e-10);
        let op = LinearMap::from_matrix(a);
        let (g, _) = gmres_solve(&op, &b, 1e-12, 10 * d, d.min(30)).unwrap();
        let (s, _) = bicgstab_solve(&op, &b, 1e-12, 10 * d).unwrap();
        prop_assert!(rel(&g, &reference) <= 1e-6);
        prop_assert!(rel(&s, &reference) <= 1e-6);
    }

    #[test]
    fn synthesized_transpose_is_adjoint(seed in any::<u64>(), rows in 1usize..=12, cols in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = from_na(&gaussian(&mut rng, rows, cols));
        let forward_only = LinearMap::new(rows, cols, move |v: &[f64]| m.matvec(v));
        for _ in 0..100 {
            let v = gaussian_vec(&mut rng, cols);
            let w = gaussian_vec(&mut rng, rows);
            let lhs = dot(&w, &forward_only.apply(&v));
            let rhs = dot(&forward_only.apply_transpose(&w), &v);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * norm(&v) * norm(&w));
        }
    }

    #[test]
    fn extreme_eigenvalues_match_reference(seed in any::<u64>(), d in 2usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = spd(&mut rng, d);
        let eig = to_na(&a).symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        let v = sym_min_eigenvalue(&a, 1e-12, 10_000).unwrap();
        prop_assert!((v - lo).abs() <= 1e-6 * hi);
        let v = sym_max_eigenvalue(&a, 1e-12, 10_000).unwrap();
        prop_assert!((v - hi).abs() <= 1e-6 * hi);
        prop_assert!(cholesky(&a).is_some());
    }
}

#[test]
fn small_cases() {
    let singular = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    assert!(matches!(
        dense_solve(&singular, &DenseMatrix::identity(2)),
        Err(idiff::Error::SingularMatrix { .. })
    ));
    let op = LinearMap::from_matrix(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());
    let (x, _) = normal_cg_solve(&op, &[1.0, 0.0], 1e-12, 20).unwrap();
    assert!(distance(&x, &[1.0, 0.0]) < 1e-12);
    let diag = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
    let sol = dense_solve(&diag, &DenseMatrix::from_rows(&[vec![2.0], vec![4.0]]).unwrap()).unwrap();
    assert_eq!(sol.data(), &[1.0, 1.0]);
}
