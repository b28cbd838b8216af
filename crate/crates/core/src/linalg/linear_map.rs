use std::fmt;
use std::sync::OnceLock;

use super::dense::{DenseMatrix, DenseVector};

type ApplyFn<'a> = Box<dyn Fn(&[f64]) -> DenseVector + Send + Sync + 'a>;

/// Matrix-free linear operator `R^dim_in -> R^dim_out`.
///
/// When no transpose closure is supplied, `apply_transpose` materializes the
/// operator once (`dim_in` forward applies) and multiplies by the transpose of
/// the cached matrix.
pub struct LinearMap<'a> {
    dim_out: usize,
    dim_in: usize,
    forward: ApplyFn<'a>,
    transpose: Option<ApplyFn<'a>>,
    materialized: OnceLock<DenseMatrix>,
}

impl<'a> LinearMap<'a> {
    pub fn new(
        dim_out: usize,
        dim_in: usize,
        forward: impl Fn(&[f64]) -> DenseVector + Send + Sync + 'a,
    ) -> Self {
        Self {
            dim_out,
            dim_in,
            forward: Box::new(forward),
            transpose: None,
            materialized: OnceLock::new(),
        }
    }

    pub fn with_transpose(
        mut self,
        transpose: impl Fn(&[f64]) -> DenseVector + Send + Sync + 'a,
    ) -> Self {
        self.transpose = Some(Box::new(transpose));
        self
    }

    pub fn from_matrix(matrix: DenseMatrix) -> LinearMap<'static> {
        let (rows, cols) = (matrix.rows(), matrix.cols());
        let fwd = matrix.clone();
        let cache = OnceLock::new();
        let _ = cache.set(matrix.clone());
        LinearMap {
            dim_out: rows,
            dim_in: cols,
            forward: Box::new(move |v| fwd.matvec(v)),
            transpose: Some(Box::new(move |w| matrix.matvec_t(w))),
            materialized: cache,
        }
    }

    pub fn identity(n: usize) -> LinearMap<'static> {
        LinearMap {
            dim_out: n,
            dim_in: n,
            forward: Box::new(|v| DenseVector::from_vec(v.to_vec())),
            transpose: Some(Box::new(|w| DenseVector::from_vec(w.to_vec()))),
            materialized: OnceLock::new(),
        }
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    pub fn has_transpose(&self) -> bool {
        self.transpose.is_some()
    }

    pub fn apply(&self, v: &[f64]) -> DenseVector {
        assert_eq!(v.len(), self.dim_in, "LinearMap::apply: input length");
        let out = (self.forward)(v);
        assert_eq!(out.len(), self.dim_out, "LinearMap::apply: output length");
        out
    }

    pub fn apply_transpose(&self, w: &[f64]) -> DenseVector {
        assert_eq!(w.len(), self.dim_out, "LinearMap::apply_transpose: input length");
        match &self.transpose {
            Some(t) => {
                let out = t(w);
                assert_eq!(out.len(), self.dim_in, "LinearMap::apply_transpose: output length");
                out
            }
            None => self.materialize().matvec_t(w),
        }
    }

    /// Dense matrix of the operator, built column by column from forward
    /// applies and cached.
    pub fn materialize(&self) -> &DenseMatrix {
        self.materialized.get_or_init(|| {
            let mut data = Vec::with_capacity(self.dim_in * self.dim_out);
            for j in 0..self.dim_in {
                data.extend_from_slice(&self.apply(&DenseVector::basis(self.dim_in, j)));
            }
            DenseMatrix::from_col_major(self.dim_out, self.dim_in, data)
        })
    }

    /// The adjoint operator as a map in its own right.
    pub fn transposed(&self) -> LinearMap<'_> {
        LinearMap {
            dim_out: self.dim_in,
            dim_in: self.dim_out,
            forward: Box::new(move |w| self.apply_transpose(w)),
            transpose: Some(Box::new(move |v| self.apply(v))),
            materialized: OnceLock::new(),
        }
    }
}

impl fmt::Debug for LinearMap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearMap")
            .field("dim_out", &self.dim_out)
            .field("dim_in", &self.dim_in)
            .field("has_transpose", &self.transpose.is_some())
            .finish()
    }
}
