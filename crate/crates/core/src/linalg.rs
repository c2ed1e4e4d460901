//! Minimum-norm least squares through a thin SVD.
//!
//! Designs are built as nalgebra matrices; the decomposition itself runs in
//! faer, whose SVD stays accurate on exactly rank-deficient inputs (nalgebra
//! 0.35 returns wrong factors for some of them, e.g. lag columns of a pure
//! AR(1) series).

use faer::Mat;
use nalgebra::DMatrix;

/// Singular values below `RANK_RCOND * sigma_max` are treated as zero.
pub const RANK_RCOND: f64 = 1e-10;

fn to_faer(matrix: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(matrix.nrows(), matrix.ncols(), |i, j| matrix[(i, j)])
}

/// Minimum-norm least-squares solution of `matrix * x ≈ target`.
///
/// Works for tall, square and wide matrices and for rank-deficient ones: the
/// pseudoinverse is applied with singular values under the relative cutoff
/// dropped, so the result is deterministic even when the fit is not unique.
pub fn solve_least_squares(matrix: &DMatrix<f64>, target: &[f64]) -> Vec<f64> {
    assert_eq!(
        matrix.nrows(),
        target.len(),
        "design rows and target length differ"
    );
    let ncols = matrix.ncols();
    if matrix.nrows() == 0 || ncols == 0 || matrix.iter().all(|&v| v == 0.0) {
        return vec![0.0; ncols];
    }

    let svd = to_faer(matrix)
        .thin_svd()
        .expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let sigma_max = s.iter().fold(0.0_f64, |m, &x| m.max(x));
    let cutoff = RANK_RCOND * sigma_max;

    let mut x = vec![0.0; ncols];
    for k in 0..s.nrows() {
        if s[k] <= cutoff {
            continue;
        }
        let coef = (0..u.nrows()).map(|i| u[(i, k)] * target[i]).sum::<f64>() / s[k];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += v[(j, k)] * coef;
        }
    }
    x
}

/// Number of singular values above the relative cutoff.
pub fn numerical_rank(matrix: &DMatrix<f64>) -> usize {
    if matrix.nrows() == 0 || matrix.ncols() == 0 {
        return 0;
    }
    let sv = to_faer(matrix)
        .singular_values()
        .expect("SVD of a finite matrix converges");
    let sigma_max = sv.iter().fold(0.0_f64, |m, &x| m.max(x));
    if sigma_max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RCOND * sigma_max).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_doubling() {
        let a = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 4.0, 8.0]);
        let x = solve_least_squares(&a, &[2.0, 4.0, 8.0, 16.0]);
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn identity() {
        let a = DMatrix::identity(2, 2);
        let x = solve_least_squares(&a, &[3.0, 5.0]);
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn underdetermined_gives_minimum_norm() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1).
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = solve_least_squares(&a, &[2.0]);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_column_gets_zero_coefficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let x = solve_least_squares(&a, &[2.0, 4.0, 6.0]);
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-12);
        assert_eq!(x[1], 0.0);
        assert_eq!(numerical_rank(&a), 1);
    }

    #[test]
    fn all_zero_matrix() {
        let a = DMatrix::zeros(3, 2);
        assert_eq!(solve_least_squares(&a, &[1.0, 2.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(numerical_rank(&a), 0);
    }

    #[test]
    fn duplicated_column_splits_weight() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let x = solve_least_squares(&a, &[2.0, 4.0, 6.0]);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn collinear_lag_columns_of_geometric_series() {
        // Lags 1 and 2 of x_t = 0.9 x_{t-1} are exactly proportional.
        let x: Vec<f64> = (0..16).map(|t| 36.0 * 0.9_f64.powi(t)).collect();
        let a = DMatrix::from_fn(14, 2, |r, c| x[r + 1 - c]);
        let coeffs = solve_least_squares(&a, &x[2..]);
        let fitted = &a * nalgebra::DVector::from_vec(coeffs.clone());
        for (f, y) in fitted.iter().zip(&x[2..]) {
            assert_abs_diff_eq!(*f, *y, epsilon = 1e-9);
        }
        // a + b / 0.9 = 0.9 with minimum norm: (a, b) = 0.9 (1, 1/0.9) / d.
        let d = 1.0 + 0.9_f64.powi(-2);
        assert_abs_diff_eq!(coeffs[0], 0.9 / d, epsilon = 1e-9);
        assert_abs_diff_eq!(coeffs[1], 1.0 / d, epsilon = 1e-9);
        assert_eq!(numerical_rank(&a), 1);
    }
}
