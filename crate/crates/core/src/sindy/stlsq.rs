use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::lstsq;

/// Iteration cap for the threshold/refit loop.
pub const DEFAULT_MAX_ITER: usize = 10;

/// Raw output of [`stlsq`].
#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    /// Coefficients, library term × target column.
    pub xi: Mat<f64>,
    /// Largest number of refits performed on any column.
    pub iterations: usize,
    /// Columns where a restricted fit was rank deficient and fell back to minimum norm.
    pub rank_deficient_columns: Vec<usize>,
}

/// Sequentially thresholded least squares.
///
/// Starts from the dense least-squares fit, then repeats: zero every
/// coefficient below `threshold` in magnitude, refit on the surviving terms.
/// A column stops once its support no longer changes; `max_iter` caps the
/// number of refits (0 returns the thresholded dense fit). On exit every
/// nonzero coefficient has magnitude at least `threshold`.
pub fn stlsq(theta: &Mat<f64>, xdot: &Mat<f64>, threshold: f64, max_iter: usize) -> Result<Regression> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    let (m, p) = theta.shape();
    if m == 0 {
        return Err(Error::InvalidArgument("regression needs at least one row".into()));
    }
    if xdot.nrows() != m {
        return Err(Error::DimensionMismatch(format!("library has {m} rows, derivatives have {}", xdot.nrows())));
    }
    let n = xdot.ncols();
    let (dense, _) = lstsq(theta.as_ref(), xdot.as_ref())?;

    let mut xi = Mat::<f64>::zeros(p, n);
    let mut iterations = 0;
    let mut deficient = Vec::new();
    for j in 0..n {
        let mut coef: Vec<f64> = (0..p).map(|i| dense[(i, j)]).collect();
        let mut support: Vec<bool> = coef.iter().map(|c| c.abs() >= threshold).collect();
        let mut refits = 0;
        let mut column_deficient = false;
        let mut converged = false;
        while refits < max_iter {
            let (fit, rank_deficient) = fit_column(theta, xdot, j, &support)?;
            column_deficient |= rank_deficient;
            coef = fit;
            refits += 1;
            let next: Vec<bool> = coef.iter().map(|c| c.abs() >= threshold).collect();
            if next == support {
                converged = true;
                break;
            }
            support = next;
        }
        if !converged {
            for (c, keep) in coef.iter_mut().zip(&support) {
                if !keep || c.abs() < threshold {
                    *c = 0.0;
                }
            }
        }
        if column_deficient {
            deficient.push(j);
        }
        iterations = iterations.max(refits);
        for (i, c) in coef.into_iter().enumerate() {
            xi[(i, j)] = c;
        }
    }
    Ok(Regression { xi, iterations, rank_deficient_columns: deficient })
}

// Least squares of column `j` restricted to `support`; zeros elsewhere.
fn fit_column(theta: &Mat<f64>, xdot: &Mat<f64>, j: usize, support: &[bool]) -> Result<(Vec<f64>, bool)> {
    let p = theta.ncols();
    let active: Vec<usize> = (0..p).filter(|&i| support[i]).collect();
    let mut coef = vec![0.0; p];
    if active.is_empty() {
        return Ok((coef, false));
    }
    let sub = Mat::from_fn(theta.nrows(), active.len(), |r, c| theta[(r, active[c])]);
    let rhs = xdot.subcols(j, 1);
    let (x, deficient) = lstsq(sub.as_ref(), rhs)?;
    for (k, &i) in active.iter().enumerate() {
        coef[i] = x[(k, 0)];
    }
    Ok((coef, deficient))
}

/// Least squares restricted to a fixed support, one fit per column.
pub fn refit_on_support(theta: &Mat<f64>, xdot: &Mat<f64>, support: &[Vec<bool>]) -> Result<Mat<f64>> {
    let (p, n) = (theta.ncols(), xdot.ncols());
    if support.len() != p || support.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("support mask does not match the regression shape".into()));
    }
    let mut xi = Mat::zeros(p, n);
    for j in 0..n {
        let col: Vec<bool> = support.iter().map(|r| r[j]).collect();
        let (coef, _) = fit_column(theta, xdot, j, &col)?;
        for (i, c) in coef.into_iter().enumerate() {
            xi[(i, j)] = c;
        }
    }
    Ok(xi)
}
