//! Small dense linear-algebra helpers shared by the estimators.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative pivot size below which a least-squares design is treated as
/// column-rank-deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Least-squares solution of `design * coef ≈ rhs` by Householder QR.
///
/// Returns `None` when a pivot of `R` is negligible relative to the norm of
/// its column, i.e. the design is numerically rank-deficient.
pub fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let (n, k) = design.shape();
    if n < k || k == 0 {
        return None;
    }
    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let col_norm = design.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return None;
        }
    }
    let qty = qr.q().transpose() * rhs;
    r.solve_upper_triangular(&qty)
}

/// Solve a symmetric positive-definite system; `None` if Cholesky fails.
pub fn spd_solve(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    matrix.clone().cholesky().map(|c| c.solve(rhs))
}

/// Inverse of a symmetric matrix via its eigendecomposition, together with
/// its 2-norm condition number. `None` when an eigenvalue is not positive
/// relative to the largest.
pub fn spd_inverse(matrix: &DMatrix<f64>) -> (Option<DMatrix<f64>>, f64) {
    let eig = SymEigen::new(matrix);
    let max = eig.max_value();
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(min > 1e-14 * max) || max <= 0.0 {
        return (None, condition);
    }
    let inv_diag = DMatrix::from_diagonal(&eig.values.map(|v| 1.0 / v));
    let inv = &eig.vectors * inv_diag * eig.vectors.transpose();
    (Some((&inv + inv.transpose()) * 0.5), condition)
}

/// Index of the largest-magnitude entry, ties resolved to the lowest index.
pub fn argmax_abs(v: &DVector<f64>) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// True when the largest-magnitude entry is negative, meaning the vector must
/// be flipped to reach the canonical sign.
pub fn needs_flip(v: &DVector<f64>) -> bool {
    !v.is_empty() && v[argmax_abs(v)] < 0.0
}

/// Number of singular values above `tol`.
pub fn numerical_rank(matrix: &DMatrix<f64>, tol: f64) -> usize {
    if matrix.is_empty() {
        return 0;
    }
    matrix
        .clone()
        .singular_values()
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Largest absolute off-diagonal entry of `QᵀQ - I`.
pub fn orthonormality_error(columns: &DMatrix<f64>) -> f64 {
    let k = columns.ncols();
    let gram = columns.transpose() * columns;
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Orthonormalize the columns of a square matrix (QR with positive `R`
/// diagonal so the result is a deterministic function of the input).
pub fn orthonormalize(matrix: DMatrix<f64>) -> DMatrix<f64> {
    let qr = matrix.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 1.0]);
        let eig = SymEigen::new(&m);
        assert!(eig.values[0] <= eig.values[1] && eig.values[1] <= eig.values[2]);
        let rebuilt = &eig.vectors * DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
        assert!((rebuilt - m).norm() < 1e-12);
    }

    #[test]
    fn least_squares_detects_collinear_columns() {
        let design = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0, 4.0, 8.0]);
        let rhs = DVector::from_vec(alloc::vec![1.0, 2.0, 3.0, 4.0]);
        assert!(least_squares(&design, &rhs).is_none());
    }

    #[test]
    fn least_squares_exact_fit() {
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let rhs = DVector::from_vec(alloc::vec![1.0, 3.0, 5.0]);
        let coef = least_squares(&design, &rhs).unwrap();
        assert!((coef[0] - 1.0).abs() < 1e-12 && (coef[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_go_to_lowest_index() {
        let v = DVector::from_vec(alloc::vec![-0.5, 0.5, 0.1]);
        assert_eq!(argmax_abs(&v), 0);
        assert!(needs_flip(&v));
    }
}
