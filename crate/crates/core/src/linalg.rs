//! Small dense linear-algebra helpers shared by the alignment code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Smallest reciprocal condition number (1-norm) accepted when inverting.
pub const MIN_RCOND: f64 = 1e-12;

/// Largest absolute entrywise difference between two equally shaped matrices.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff on different shapes");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn norm_one(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_symmetric(a: &Matrix, tol: f64) -> bool {
    a.is_square() && max_abs_diff(a, &a.transpose()) <= tol
}

pub fn all_finite(a: &Matrix) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Inverse by LU with partial pivoting, together with the reciprocal
/// condition number `1 / (‖A‖₁·‖A⁻¹‖₁)`.
pub fn invert(a: &Matrix, layer: Option<usize>) -> Result<(Matrix, f64)> {
    if !a.is_square() {
        return Err(Error::shape(layer, format!("cannot invert {}x{} matrix", a.nrows(), a.ncols())));
    }
    if !all_finite(a) {
        return Err(Error::numerical(layer, "matrix has non-finite entries"));
    }
    let n = a.nrows();
    let lu = a.clone().lu();
    let inverse = lu
        .solve(&Matrix::identity(n, n))
        .ok_or_else(|| Error::numerical(layer, "matrix is singular"))?;
    if !all_finite(&inverse) {
        return Err(Error::numerical(layer, "matrix is singular"));
    }
    let denom = norm_one(a) * norm_one(&inverse);
    let rcond = if denom > 0.0 && denom.is_finite() { 1.0 / denom } else { 0.0 };
    Ok((inverse, rcond))
}

/// Column means of an m×n matrix.
pub fn column_means(x: &Matrix) -> Vector {
    let m = x.nrows() as f64;
    Vector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / m))
}

/// Subtract `means` from every row of `x`.
pub fn center_columns(x: &Matrix, means: &Vector) -> Matrix {
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    out
}

/// Population mean and standard deviation of each column.
pub fn column_mean_std(x: &Matrix) -> (Vector, Vector) {
    let means = column_means(x);
    let m = x.nrows() as f64;
    let stds = Vector::from_iterator(
        x.ncols(),
        x.column_iter().enumerate().map(|(j, c)| {
            let var = c.iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / m;
            var.sqrt()
        }),
    );
    (means, stds)
}

/// Permutation matrix with `p[i, mapping[i]] = 1`.
pub fn permutation_matrix(mapping: &[usize]) -> Matrix {
    let n = mapping.len();
    let mut p = Matrix::zeros(n, n);
    for (i, &j) in mapping.iter().enumerate() {
        p[(i, j)] = 1.0;
    }
    p
}
