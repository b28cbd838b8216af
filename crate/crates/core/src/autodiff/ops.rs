//! Vector kernels over [`Scalar`], the building blocks for mappings.

use super::Scalar;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub fn lift<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&a| S::cst(a)).collect()
}

pub fn values<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(Scalar::value).collect()
}

pub fn sum<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, &a| acc + a)
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Dot product with a constant vector.
pub fn dot_c<S: Scalar>(a: &[S], c: &[f64]) -> S {
    assert_eq!(a.len(), c.len(), "dot_c: length mismatch");
    a.iter().zip(c).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn sq_norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    assert_eq!(a.len(), b.len(), "add: length mismatch");
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    assert_eq!(a.len(), b.len(), "sub: length mismatch");
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<S: Scalar>(a: &[S], s: S) -> Vec<S> {
    a.iter().map(|&x| x * s).collect()
}

/// `a - eta * b`
pub fn step<S: Scalar>(a: &[S], eta: f64, b: &[S]) -> Vec<S> {
    assert_eq!(a.len(), b.len(), "step: length mismatch");
    a.iter().zip(b).map(|(&x, &g)| x - g * eta).collect()
}

/// Constant matrix times a scalar vector.
pub fn matvec<S: Scalar>(m: &DenseMatrix, x: &[S]) -> Vec<S> {
    assert_eq!(m.cols(), x.len(), "matvec: length mismatch");
    let mut y = vec![S::zero(); m.rows()];
    for (j, &xj) in x.iter().enumerate() {
        for (yi, &mij) in y.iter_mut().zip(m.col(j)) {
            if mij != 0.0 {
                *yi += xj * mij;
            }
        }
    }
    y
}

/// Constant matrix transpose times a scalar vector.
pub fn matvec_t<S: Scalar>(m: &DenseMatrix, x: &[S]) -> Vec<S> {
    assert_eq!(m.rows(), x.len(), "matvec_t: length mismatch");
    (0..m.cols()).map(|j| dot_c(x, m.col(j))).collect()
}

/// Column-major `rows × cols` matrix stored in a scalar slice, times `x`.
pub fn matvec_flat<S: Scalar>(data: &[S], rows: usize, cols: usize, x: &[S]) -> Vec<S> {
    assert_eq!(data.len(), rows * cols, "matvec_flat: data length");
    assert_eq!(x.len(), cols, "matvec_flat: length mismatch");
    let mut y = vec![S::zero(); rows];
    for (j, &xj) in x.iter().enumerate() {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += data[j * rows + i] * xj;
        }
    }
    y
}

/// Transpose of [`matvec_flat`].
pub fn matvec_flat_t<S: Scalar>(data: &[S], rows: usize, cols: usize, x: &[S]) -> Vec<S> {
    assert_eq!(data.len(), rows * cols, "matvec_flat_t: data length");
    assert_eq!(x.len(), rows, "matvec_flat_t: length mismatch");
    (0..cols)
        .map(|j| dot(&data[j * rows..(j + 1) * rows], x))
        .collect()
}

pub fn logsumexp<S: Scalar>(v: &[S]) -> S {
    let m = v.iter().map(Scalar::value).fold(f64::NEG_INFINITY, f64::max);
    let s = v.iter().fold(S::zero(), |acc, &a| acc + (a - m).exp());
    s.ln() + m
}

/// Softmax with max-shift.
pub fn softmax<S: Scalar>(v: &[S]) -> Vec<S> {
    let m = v.iter().map(Scalar::value).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<S> = v.iter().map(|&a| (a - m).exp()).collect();
    let z = sum(&e);
    e.into_iter().map(|a| a / z).collect()
}

/// Solves `a x = b` for a dense row-major `n × n` scalar matrix by
/// partial-pivot Gaussian elimination (pivots chosen by primal value).
pub fn lu_solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    assert_eq!(a.len(), n, "lu_solve: row count");
    let scale = a
        .iter()
        .flatten()
        .map(|v| v.value() * v.value())
        .sum::<f64>()
        .sqrt();
    let threshold = crate::linalg::SINGULAR_PIVOT_RTOL * scale;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].value().abs().total_cmp(&a[j][k].value().abs()))
            .unwrap_or(k);
        let pivot = a[p][k].value().abs();
        if pivot <= threshold || pivot == 0.0 {
            return Err(Error::SingularMatrix { pivot });
        }
        a.swap(p, k);
        b.swap(p, k);
        for i in k + 1..n {
            let factor = a[i][k] / a[k][k];
            for j in k..n {
                let u = a[k][j];
                a[i][j] -= factor * u;
            }
            let bk = b[k];
            b[i] -= factor * bk;
        }
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}
