//! Dense singular value decomposition backed by faer.

use nalgebra::{DMatrix, DVector};

/// Full SVD `m = U diag(s) Vᵀ` with `U` and `V` square.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let f = faer::Mat::from_fn(rows, cols, |i, j| m[(i, j)]);
        let svd = f.svd().expect("SVD of a finite matrix");
        let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
        Self {
            u: DMatrix::from_fn(rows, rows, |i, j| u[(i, j)]),
            s: DVector::from_fn(rows.min(cols), |i, _| s[i]),
            v: DMatrix::from_fn(cols, cols, |i, j| v[(i, j)]),
        }
    }

    pub fn largest(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }
}
