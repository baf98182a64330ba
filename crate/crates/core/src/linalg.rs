//! Small dense least-squares helper.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Coefficients `x` minimizing `|y - sum_k x_k cols[k]|`. Returns `None` when
/// the columns are linearly dependent.
pub fn least_squares(cols: &[Vec<Complex64>], y: &[Complex64]) -> Option<Vec<Complex64>> {
    if cols.is_empty() {
        return Some(Vec::new());
    }
    let a = DMatrix::from_fn(y.len(), cols.len(), |i, k| cols[k][i]);
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let tol = svd.singular_values.max() * 1e-10 * y.len().max(cols.len()) as f64;
    if svd.singular_values.iter().any(|&s| s <= tol) {
        return None;
    }
    svd.solve(&b, tol).ok().map(|x| x.iter().copied().collect())
}
