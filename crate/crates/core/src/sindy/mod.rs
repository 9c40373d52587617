//! Sparse identification of polynomial vector fields.
//!
//! The pipeline is: estimate derivatives by center differences, evaluate a
//! cubic monomial library on the states, then solve `Ẋ ≈ Θ(X)·Ξ` by
//! sequentially thresholded least squares.

pub mod library;
mod stlsq;

use faer::Mat;
use serde::{Deserialize, Serialize};

pub use library::{Exponents, PolynomialLibrary};
pub use stlsq::{refit_on_support, stlsq, Regression, DEFAULT_MAX_ITER};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};

/// Threshold used for every uniscale benchmark.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// State rows paired with their derivative estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPairs {
    pub x: Mat<f64>,
    pub xdot: Mat<f64>,
}

impl TrainingPairs {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// Stacks several blocks (e.g. one per burst) into one training set.
    pub fn concat(blocks: &[TrainingPairs]) -> Result<TrainingPairs> {
        let n = blocks.first().map(|b| b.x.ncols()).unwrap_or(0);
        if blocks.iter().any(|b| b.x.ncols() != n || b.xdot.ncols() != n) {
            return Err(Error::DimensionMismatch("training blocks have different widths".into()));
        }
        let m: usize = blocks.iter().map(TrainingPairs::len).sum();
        let mut x = Mat::zeros(m, n);
        let mut xdot = Mat::zeros(m, n);
        let mut row = 0;
        for b in blocks {
            for i in 0..b.len() {
                for j in 0..n {
                    x[(row, j)] = b.x[(i, j)];
                    xdot[(row, j)] = b.xdot[(i, j)];
                }
                row += 1;
            }
        }
        Ok(TrainingPairs { x, xdot })
    }
}

/// Second-order center differences on the interior rows of a uniform series.
///
/// Row `k` of the result is `(x[k+2] - x[k]) / (2·dt)` paired with `x[k+1]`;
/// the first and last samples are dropped from both matrices.
pub fn center_difference(series: &TimeSeries) -> Result<TrainingPairs> {
    let m = series.len();
    if m < 3 {
        return Err(Error::SeriesTooShort(format!("center differences need 3 rows, got {m}")));
    }
    let n = series.dim();
    let v = series.values();
    let inv = 1.0 / (2.0 * series.dt());
    let x = Mat::from_fn(m - 2, n, |i, j| v[(i + 1, j)]);
    let xdot = Mat::from_fn(m - 2, n, |i, j| (v[(i + 2, j)] - v[(i, j)]) * inv);
    Ok(TrainingPairs { x, xdot })
}

/// Result of a sparse regression over a polynomial library.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseModel {
    library: PolynomialLibrary,
    xi: Mat<f64>,
    threshold: f64,
    iterations_used: usize,
    rank_deficient_columns: Vec<usize>,
}

impl SparseModel {
    pub fn new(library: PolynomialLibrary, regression: Regression, threshold: f64) -> Result<Self> {
        if regression.xi.nrows() != library.len() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix has {} rows, library has {} terms",
                regression.xi.nrows(),
                library.len()
            )));
        }
        Ok(Self {
            library,
            xi: regression.xi,
            threshold,
            iterations_used: regression.iterations,
            rank_deficient_columns: regression.rank_deficient_columns,
        })
    }

    pub fn library(&self) -> &PolynomialLibrary {
        &self.library
    }

    /// Coefficients, library term × state derivative.
    pub fn xi(&self) -> &Mat<f64> {
        &self.xi
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    /// Columns whose restricted least-squares problem needed the minimum-norm fallback.
    pub fn rank_deficient_columns(&self) -> &[usize] {
        &self.rank_deficient_columns
    }

    /// Boolean nonzero pattern of Ξ.
    pub fn support(&self) -> Vec<Vec<bool>> {
        (0..self.xi.nrows()).map(|i| (0..self.xi.ncols()).map(|j| self.xi[(i, j)] != 0.0).collect()).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.support().iter().flatten().filter(|&&b| b).count()
    }

    /// Largest relative coefficient error on the true support, if the supports agree.
    pub fn coefficient_error(&self, truth: &[Vec<f64>]) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for (i, row) in truth.iter().enumerate() {
            for (j, &t) in row.iter().enumerate() {
                let c = self.xi[(i, j)];
                if (t != 0.0) != (c != 0.0) {
                    return None;
                }
                if t != 0.0 {
                    worst = worst.max((c - t).abs() / t.abs());
                }
            }
        }
        Some(worst)
    }

    /// One line per state derivative, e.g. `x' = -10.0000 x + 10.0000 y`.
    pub fn equations(&self, names: &[&str]) -> Vec<String> {
        (0..self.xi.ncols())
            .map(|j| {
                let lhs = names.get(j).copied().map(str::to_string).unwrap_or_else(|| format!("x{}", j + 1));
                let terms: Vec<String> = (0..self.xi.nrows())
                    .filter(|&i| self.xi[(i, j)] != 0.0)
                    .map(|i| {
                        let name = self.library.term_name(i, names);
                        if name == "1" {
                            format!("{:+.4}", self.xi[(i, j)])
                        } else {
                            format!("{:+.4} {name}", self.xi[(i, j)])
                        }
                    })
                    .collect();
                if terms.is_empty() {
                    format!("{lhs}' = 0")
                } else {
                    format!("{lhs}' = {}", terms.join(" "))
                }
            })
            .collect()
    }
}

/// True iff the nonzero pattern of Ξ equals `truth` exactly.
pub fn support_matches(model: &SparseModel, truth: &[Vec<bool>]) -> Result<bool> {
    let (p, n) = (model.xi.nrows(), model.xi.ncols());
    if truth.len() != p || truth.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "support mask must be {p}x{n}, got {}x{}",
            truth.len(),
            truth.first().map_or(0, Vec::len)
        )));
    }
    Ok((0..p).all(|i| (0..n).all(|j| (model.xi[(i, j)] != 0.0) == truth[i][j])))
}

/// Regression on precomputed training pairs.
pub fn fit_pairs(pairs: &TrainingPairs, threshold: f64, degree: u32, max_iter: usize) -> Result<SparseModel> {
    let library = PolynomialLibrary::new(pairs.x.ncols(), degree)?;
    let theta = library.evaluate(&pairs.x)?;
    let regression = stlsq(&theta, &pairs.xdot, threshold, max_iter)?;
    SparseModel::new(library, regression, threshold)
}

/// Center differences, library evaluation and STLSQ in one call.
pub fn fit_sindy(series: &TimeSeries, threshold: f64, degree: u32) -> Result<SparseModel> {
    let pairs = center_difference(series)?;
    fit_pairs(&pairs, threshold, degree, DEFAULT_MAX_ITER)
}

#[derive(Serialize, Deserialize)]
struct LibrarySpecRepr {
    n: usize,
    degree: u32,
}

#[derive(Serialize, Deserialize)]
struct SparseModelRepr {
    library: LibrarySpecRepr,
    terms: Vec<Exponents>,
    /// Row-major, library term × state.
    xi: Vec<Vec<f64>>,
    lambda: f64,
    iterations: usize,
    #[serde(default)]
    rank_deficient_columns: Vec<usize>,
}

impl Serialize for SparseModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SparseModelRepr {
            library: LibrarySpecRepr { n: self.library.dimension(), degree: self.library.max_degree() },
            terms: self.library.terms().to_vec(),
            xi: (0..self.xi.nrows()).map(|i| (0..self.xi.ncols()).map(|j| self.xi[(i, j)]).collect()).collect(),
            lambda: self.threshold,
            iterations: self.iterations_used,
            rank_deficient_columns: self.rank_deficient_columns.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = SparseModelRepr::deserialize(d)?;
        let library = PolynomialLibrary::new(r.library.n, r.library.degree).map_err(D::Error::custom)?;
        if library.terms() != r.terms.as_slice() {
            return Err(D::Error::custom("term list does not match the library ordering"));
        }
        if r.xi.len() != library.len() || r.xi.iter().any(|row| row.len() != r.library.n) {
            return Err(D::Error::custom("coefficient matrix has the wrong shape"));
        }
        let xi = Mat::from_fn(library.len(), r.library.n, |i, j| r.xi[i][j]);
        Ok(SparseModel {
            library,
            xi,
            threshold: r.lambda,
            iterations_used: r.iterations,
            rank_deficient_columns: r.rank_deficient_columns,
        })
    }
}
