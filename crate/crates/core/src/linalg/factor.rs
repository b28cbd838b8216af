//! Direct factorizations for the small dense systems that show up at desk
//! scale: partial-pivot LU, Cholesky, and symmetric extreme eigenvalues.

use super::dense::{dot, norm, DenseMatrix, DenseVector};
use crate::error::{check_len, Error, Result};

/// Relative pivot threshold below which a matrix is reported singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "LU factorization (square matrix)",
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let threshold = SINGULAR_PIVOT_RTOL * a.frobenius_norm();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold || pivot == 0.0 {
                return Err(Error::SingularMatrix { pivot });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= factor * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<DenseVector> {
        check_len("LU right-hand side", self.n, b.len())?;
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        Ok(DenseVector::from_vec(y))
    }

    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("LU right-hand side rows", self.n, b.rows())?;
        let cols = (0..b.cols())
            .map(|j| self.solve_vec(b.col(j)))
            .collect::<Result<Vec<_>>>()?;
        if cols.is_empty() {
            return Ok(DenseMatrix::zeros(self.n, 0));
        }
        DenseMatrix::from_columns(&cols)
    }
}

/// Solves `a X = b` by partial-pivot LU.
pub fn dense_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    LuFactorization::new(a)?.solve(b)
}

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` when a
/// non-positive pivot is met.
pub fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    if !a.is_square() {
        return None;
    }
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Deterministic, non-degenerate start vector for the power iterations.
fn start_vector(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.754_877_666_246_692_7).fract())
        .collect();
    let s = norm(&v);
    v.into_iter().map(|x| x / s).collect()
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration with Rayleigh-quotient stopping.
pub fn sym_max_eigenvalue(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "eigenvalue (square matrix)",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let mut v = start_vector(a.rows());
    let mut lambda = 0.0;
    for _ in 0..max_iter.max(1) {
        let w = a.matvec(&v);
        let next = dot(&v, &w);
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        v = w.iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::NotConverged {
        what: "power iteration",
        iterations: max_iter,
    })
}

/// Smallest eigenvalue of a symmetric positive definite matrix by inverse
/// power iteration (LU-based), returning the Rayleigh quotient.
pub fn sym_min_eigenvalue(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let lu = LuFactorization::new(a)?;
    let mut v = start_vector(a.rows());
    let mut lambda = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let w = lu.solve_vec(&v)?;
        let nw = norm(&w);
        v = w.iter().map(|x| x / nw).collect();
        let rq = dot(&v, &a.matvec(&v));
        if (rq - lambda).abs() <= tol * rq.abs().max(f64::MIN_POSITIVE) {
            return Ok(rq);
        }
        lambda = rq;
    }
    Err(Error::NotConverged {
        what: "inverse power iteration",
        iterations: max_iter,
    })
}
