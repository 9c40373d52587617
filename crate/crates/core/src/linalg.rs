//! Thin helpers over `faer` shared by the regression and DMD code.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Minimum-norm least-squares solution of `a·x ≈ b` via the thin SVD.
///
/// Singular values below `eps · max(m, k) · σ_max` are treated as zero. The
/// returned flag is true when that cut removed at least one direction.
pub fn lstsq(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<(Mat<f64>, bool)> {
    let (m, k) = a.shape();
    if b.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "least squares: matrix has {m} rows, right-hand side {}",
            b.nrows()
        )));
    }
    if k == 0 {
        return Ok((Mat::zeros(0, b.ncols()), false));
    }
    if m == 0 {
        return Ok((Mat::zeros(k, b.ncols()), true));
    }
    let svd = a.thin_svd().map_err(|e| Error::Decomposition(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let cutoff = f64::EPSILON * m.max(k) as f64 * smax;
    let rank = (0..s.nrows()).filter(|&i| s[i] > cutoff).count();
    let u = svd.U();
    let v = svd.V();
    // x = V_r Σ_r⁻¹ U_rᵀ b
    let mut utb = u.subcols(0, rank).transpose() * b;
    for i in 0..rank {
        let inv = 1.0 / s[i];
        for j in 0..utb.ncols() {
            utb[(i, j)] *= inv;
        }
    }
    let x = v.subcols(0, rank) * &utb;
    Ok((x, rank < k))
}

/// Rank-`r` truncation of a thin SVD: `(U_r, σ_1..σ_r, V_r)`.
pub struct TruncatedSvd {
    pub u: Mat<f64>,
    pub s: Vec<f64>,
    pub v: Mat<f64>,
    /// Every singular value of the input, descending.
    pub all_singular_values: Vec<f64>,
}

pub fn truncated_svd(a: MatRef<'_, f64>, r: usize) -> Result<TruncatedSvd> {
    let kmax = a.nrows().min(a.ncols());
    if r == 0 || r > kmax {
        return Err(Error::InvalidArgument(format!(
            "rank {r} outside 1..={kmax} for a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let svd = a.thin_svd().map_err(|e| Error::Decomposition(format!("SVD did not converge: {e:?}")))?;
    let sv = svd.S().column_vector();
    let all: Vec<f64> = (0..sv.nrows()).map(|i| sv[i]).collect();
    Ok(TruncatedSvd {
        u: svd.U().subcols(0, r).to_owned(),
        s: all[..r].to_vec(),
        v: svd.V().subcols(0, r).to_owned(),
        all_singular_values: all,
    })
}

/// Eigenvalues and right eigenvectors of a real square matrix.
pub fn real_eigen(a: MatRef<'_, f64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let evd = a.eigen().map_err(|e| Error::Decomposition(format!("eigendecomposition did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// Real matrix promoted to complex.
pub fn to_complex(a: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

/// Complex least squares `a·x ≈ b` for a tall, full-column-rank `a`.
pub fn complex_lstsq(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<Mat<c64>> {
    use faer::linalg::solvers::SolveLstsq;
    if a.nrows() < a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "complex least squares needs at least as many rows ({}) as columns ({})",
            a.nrows(),
            a.ncols()
        )));
    }
    let qr = a.col_piv_qr();
    Ok(qr.solve_lstsq(b))
}

/// Frobenius norm.
pub fn fro(a: MatRef<'_, f64>) -> f64 {
    a.norm_l2()
}
