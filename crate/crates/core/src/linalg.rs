//! Small dense/sparse helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A feature row, stored densely or as sorted (index, value) pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Dense(Vector),
    Sparse(SparseRow),
}

/// Sparse row with 0-based, strictly ascending indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::arg("sparse row: index/value length mismatch"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("sparse row: indices must be strictly ascending"));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::arg(format!("sparse row: index {last} out of range for dim {dim}")));
            }
        }
        Ok(SparseRow { dim, indices, values })
    }
}

impl Row {
    pub fn dim(&self) -> usize {
        match self {
            Row::Dense(v) => v.len(),
            Row::Sparse(s) => s.dim,
        }
    }

    pub fn dot(&self, x: &Vector) -> f64 {
        match self {
            Row::Dense(v) => v.dot(x),
            Row::Sparse(s) => s.indices.iter().zip(&s.values).map(|(&i, &v)| v * x[i]).sum(),
        }
    }

    /// `out += alpha * row`
    pub fn axpy(&self, alpha: f64, out: &mut Vector) {
        match self {
            Row::Dense(v) => out.axpy(alpha, v, 1.0),
            Row::Sparse(s) => {
                for (&i, &v) in s.indices.iter().zip(&s.values) {
                    out[i] += alpha * v;
                }
            }
        }
    }

    pub fn norm_squared(&self) -> f64 {
        match self {
            Row::Dense(v) => v.norm_squared(),
            Row::Sparse(s) => s.values.iter().map(|v| v * v).sum(),
        }
    }

    pub fn to_dense(&self) -> Vector {
        match self {
            Row::Dense(v) => v.clone(),
            Row::Sparse(s) => {
                let mut out = Vector::zeros(s.dim);
                for (&i, &v) in s.indices.iter().zip(&s.values) {
                    out[i] = v;
                }
                out
            }
        }
    }
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix together with its numerical rank.
/// Eigenvalues below `rel_tol * max(‖M‖, tiny)` are treated as zero.
pub fn sym_pinv(m: &Matrix, rel_tol: f64) -> (Matrix, usize) {
    let n = m.nrows();
    if n == 0 {
        return (Matrix::zeros(0, 0), 0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let cutoff = rel_tol * scale.max(f64::MIN_POSITIVE);
    let mut inv = Matrix::zeros(n, n);
    let mut rank = 0;
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cutoff {
            rank += 1;
            let q = eig.eigenvectors.column(k);
            inv += (q * q.transpose()) / lam;
        }
    }
    (inv, rank)
}

/// Sorted eigenvalues (ascending) of a symmetric matrix.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Smallest eigenvalue strictly above `rel_tol * λ_max`.
pub fn min_positive_eigenvalue(m: &Matrix, rel_tol: f64) -> Option<f64> {
    let ev = sym_eigenvalues(m);
    let top = ev.last().copied().unwrap_or(0.0);
    ev.into_iter().find(|&v| v > rel_tol * top.abs())
}

/// Spectral norm of a (possibly rectangular) matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.transpose() * a;
    sym_eigenvalues(&gram).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Minimum-norm least-squares solution of `M x = rhs` via the pseudoinverse of `MᵀM`.
pub fn lstsq(m: &Matrix, rhs: &Vector) -> Result<Vector> {
    check_dim(m.nrows(), rhs.len())?;
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &v| a.max(v));
    let eps = 1e-12 * smax.max(f64::MIN_POSITIVE);
    svd.solve(rhs, eps).map_err(|e| Error::Argument(e.to_string()))
}

/// Linearly independent check on vectors by Gram-matrix rank.
pub fn column_rank(a: &Matrix, rel_tol: f64) -> usize {
    sym_pinv(&(a.transpose() * a), rel_tol).1
}

pub fn stack_columns(cols: &[Vector]) -> Matrix {
    if cols.is_empty() {
        return Matrix::zeros(0, 0);
    }
    Matrix::from_columns(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_row_rejects_unsorted() {
        assert!(SparseRow::new(5, vec![3, 1], vec![1.0, 2.0]).is_err());
        assert!(SparseRow::new(5, vec![1, 5], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn sparse_and_dense_agree() {
        let s = Row::Sparse(SparseRow::new(4, vec![0, 2], vec![2.0, -1.0]).unwrap());
        let d = Row::Dense(s.to_dense());
        let x = Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.dot(&x), d.dot(&x));
        assert_eq!(s.norm_squared(), 5.0);
        let mut a = Vector::zeros(4);
        let mut b = Vector::zeros(4);
        s.axpy(0.5, &mut a);
        d.axpy(0.5, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (p, r) = sym_pinv(&m, 1e-10);
        assert_eq!(r, 1);
        let back = &m * &p * &m;
        assert!((back - m).norm() < 1e-12);
    }
}
