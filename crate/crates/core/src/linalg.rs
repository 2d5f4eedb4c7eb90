//! Small dense matrix kernels used by the solvers: Householder QR with a
//! selectable sign convention, the symmetric eigensolver, and orthonormal
//! completion of a unit vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign convention of the QR factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QrSign {
    /// LAPACK `dgeqr2` semantics: each reflector maps the column onto
    /// `-sign(a_jj)·‖col‖·e_j`; no reflection is applied when the part below
    /// the diagonal is already zero.
    #[default]
    Householder,
    /// Same factorization with row/column signs flipped so that `diag(R) ≥ 0`.
    NonNegativeDiagonal,
}

/// Householder QR of a square matrix. Returns `(Q, R)` with `Q` orthogonal and
/// `R` upper triangular.
pub fn qr(m: &DMatrix<f64>, sign: QrSign) -> (DMatrix<f64>, DMatrix<f64>) {
    let rows = m.nrows();
    let cols = m.ncols();
    let mut r = m.clone();
    let mut q = DMatrix::<f64>::identity(rows, rows);
    let steps = rows.min(cols);

    for j in 0..steps {
        let alpha = r[(j, j)];
        let xnorm = (j + 1..rows)
            .map(|i| r[(i, j)] * r[(i, j)])
            .sum::<f64>()
            .sqrt();
        if xnorm == 0.0 {
            // H = I
            continue;
        }
        let norm = alpha.hypot(xnorm);
        let beta = if alpha >= 0.0 { -norm } else { norm };
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);

        // v = [1, x / (alpha - beta)]
        let mut v = vec![0.0; rows - j];
        v[0] = 1.0;
        for i in j + 1..rows {
            v[i - j] = r[(i, j)] * scale;
        }

        // R <- (I - tau v v^T) R on rows j.., columns j..
        for c in j..cols {
            let dot: f64 = (j..rows).map(|i| v[i - j] * r[(i, c)]).sum();
            let t = tau * dot;
            for i in j..rows {
                r[(i, c)] -= t * v[i - j];
            }
        }
        r[(j, j)] = beta;
        for i in j + 1..rows {
            r[(i, j)] = 0.0;
        }

        // Q <- Q (I - tau v v^T)
        for row in 0..rows {
            let dot: f64 = (j..rows).map(|i| q[(row, i)] * v[i - j]).sum();
            let t = tau * dot;
            for i in j..rows {
                q[(row, i)] -= t * v[i - j];
            }
        }
    }

    if sign == QrSign::NonNegativeDiagonal {
        for j in 0..steps {
            if r[(j, j)] < 0.0 {
                for c in 0..cols {
                    r[(j, c)] = -r[(j, c)];
                }
                for row in 0..rows {
                    q[(row, j)] = -q[(row, j)];
                }
            }
        }
    }
    (q, r)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigenDecomposition {
    /// Ascending.
    pub values: DVector<f64>,
    /// Column `j` is the unit eigenvector of `values[j]`.
    pub vectors: DMatrix<f64>,
}

/// Relative asymmetry tolerated by [`symmetric_matrix_eigen`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
pub fn symmetric_matrix_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigenDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SymmetricEigenDecomposition {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let asym = (m - m.transpose()).norm();
    let tol = SYMMETRY_TOLERANCE * m.norm();
    if asym > tol {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            tolerance: tol,
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&j| eig.eigenvalues[j]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymmetricEigenDecomposition { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(m: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_matrix_eigen(m)?;
    Ok(eig.values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest eigenvalue magnitude (the spectral norm) of a symmetric matrix.
pub fn symmetric_spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_matrix_eigen(m)?;
    Ok(eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// An `n x (n-1)` matrix whose orthonormal columns span the complement of the
/// unit vector `x`. Built from the Householder reflector that maps `x` onto a
/// multiple of `e_1`, i.e. the first step of a QR factorization of `[x | I]`.
pub fn orthonormal_complement(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut col = DMatrix::zeros(n, n + 1);
    col.set_column(0, x);
    for i in 0..n {
        col[(i, i + 1)] = 1.0;
    }
    let (q, _) = qr(&col, QrSign::Householder);
    q.columns(1, n.saturating_sub(1)).into_owned()
}
