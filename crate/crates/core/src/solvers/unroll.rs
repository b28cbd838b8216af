use rayon::prelude::*;

use crate::autodiff::{DiffFn2, Dual};
use crate::error::{check_len, Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

/// `∂x_t/∂θ` for `t = 1..=steps` of the iteration `x ← T(x, θ)` started at a
/// `θ`-independent `x0`.
///
/// Each column is the tangent of one forward-mode pass seeded with a basis
/// direction of `θ`; columns run in parallel.
pub fn unrolled_jacobian_path<T: DiffFn2>(
    t_map: &T,
    theta: &[f64],
    x0: &[f64],
    steps: usize,
) -> Result<Vec<DenseMatrix>> {
    check_len("unrolled start", t_map.dim_x(), x0.len())?;
    check_len("unrolled parameters", t_map.dim_theta(), theta.len())?;
    check_len("unrolled map output", t_map.dim_x(), t_map.dim_out())?;
    let (d, n) = (x0.len(), theta.len());
    let columns: Vec<Vec<DenseVector>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let ts: Vec<Dual<f64>> = theta
                .iter()
                .enumerate()
                .map(|(i, &t)| Dual::new(t, if i == j { 1.0 } else { 0.0 }))
                .collect();
            let mut xs: Vec<Dual<f64>> = x0.iter().map(|&v| Dual::constant(v)).collect();
            let mut path = Vec::with_capacity(steps);
            for _ in 0..steps {
                xs = t_map.eval(&xs, &ts);
                if xs.iter().any(|v| !v.re.is_finite() || !v.eps.is_finite()) {
                    return Err(Error::NonFinite("unrolled iteration"));
                }
                path.push(xs.iter().map(|v| v.eps).collect::<DenseVector>());
            }
            Ok(path)
        })
        .collect::<Result<_>>()?;
    Ok((0..steps)
        .map(|t| {
            if n == 0 {
                return DenseMatrix::zeros(d, 0);
            }
            let cols: Vec<DenseVector> = columns.iter().map(|c| c[t].clone()).collect();
            DenseMatrix::from_columns(&cols).expect("equal column lengths")
        })
        .collect())
}

/// `∂x_t/∂θ` after `steps` iterations; the zero matrix when `steps = 0`.
pub fn unrolled_jacobian<T: DiffFn2>(
    t_map: &T,
    theta: &[f64],
    x0: &[f64],
    steps: usize,
) -> Result<DenseMatrix> {
    let path = unrolled_jacobian_path(t_map, theta, x0, steps)?;
    Ok(path
        .into_iter()
        .last()
        .unwrap_or_else(|| DenseMatrix::zeros(x0.len(), theta.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{ops, Scalar, ScalarFn2};
    use crate::conditions::GradientStepMap;

    struct Constant;

    impl DiffFn2 for Constant {
        fn dim_x(&self) -> usize {
            2
        }
        fn dim_theta(&self) -> usize {
            2
        }
        fn dim_out(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, _x: &[S], t: &[S]) -> Vec<S> {
            t.to_vec()
        }
    }

    /// `½xᵀdiag(θ)x − xᵀy`.
    struct DiagQuad(Vec<f64>);

    impl ScalarFn2 for DiagQuad {
        fn dim_x(&self) -> usize {
            self.0.len()
        }
        fn dim_theta(&self) -> usize {
            self.0.len()
        }
        fn value<S: Scalar>(&self, x: &[S], t: &[S]) -> S {
            let mut acc = S::zero();
            for i in 0..x.len() {
                acc += t[i] * x[i] * x[i] * 0.5;
            }
            acc - ops::dot_c(x, &self.0)
        }
    }

    #[test]
    fn trivial_maps() {
        let j = unrolled_jacobian(&Constant, &[1.0, 2.0], &[0.0, 0.0], 1).unwrap();
        assert_eq!(j, DenseMatrix::identity(2));
        let z = unrolled_jacobian(&Constant, &[1.0, 2.0], &[0.0, 0.0], 0).unwrap();
        assert_eq!(z, DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn long_unroll_converges_to_solution_derivative() {
        let y = vec![1.0, -2.0];
        let t = [2.0, 4.0];
        let map = GradientStepMap { f: DiagQuad(y.clone()), eta: 0.2 };
        let j = unrolled_jacobian(&map, &t, &[0.0, 0.0], 400).unwrap();
        for i in 0..2 {
            assert!((j[(i, i)] + y[i] / (t[i] * t[i])).abs() < 1e-12);
        }
        assert_eq!(j[(0, 1)], 0.0);
    }
}
