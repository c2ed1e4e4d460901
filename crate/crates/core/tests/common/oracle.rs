//! Least-squares reference solver written without any SVD or library
//! factorization: Gaussian elimination with partial pivoting on the normal
//! equations (tall), the system itself (square), or the dual system (wide).

#![allow(dead_code)]

pub type Rows = Vec<Vec<f64>>;

fn transpose(a: &Rows) -> Rows {
    let (m, n) = (a.len(), a[0].len());
    (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect()
}

fn matmul(a: &Rows, b: &Rows) -> Rows {
    let (m, k, n) = (a.len(), b.len(), b[0].len());
    (0..m)
        .map(|i| (0..n).map(|j| (0..k).map(|p| a[i][p] * b[p][j]).sum()).collect())
        .collect()
}

fn matvec(a: &Rows, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Solve a square system. Panics on a singular pivot.
pub fn gauss_solve(a: &Rows, b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Rows = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        assert!(m[pivot][col].abs() > 1e-300, "singular system");
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col].clone();
            for (dst, src) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// Least-squares / minimum-norm solution for a full-rank matrix.
pub fn least_squares(a: &Rows, b: &[f64]) -> Vec<f64> {
    let (m, n) = (a.len(), a[0].len());
    let at = transpose(a);
    if m == n {
        gauss_solve(a, b)
    } else if m > n {
        gauss_solve(&matmul(&at, a), &matvec(&at, b))
    } else {
        let z = gauss_solve(&matmul(a, &at), b);
        matvec(&at, &z)
    }
}

pub fn rel_err(x: &[f64], reference: &[f64]) -> f64 {
    let diff: f64 = x.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}
