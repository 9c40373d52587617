use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial, one entry per state variable.
pub type Exponents = Vec<u32>;

/// Candidate library of all monomials up to a maximum total degree.
///
/// Terms are ordered by total degree, then by exponent vector in descending
/// lexicographic order, so for `(x, y)` at degree 3 the columns are
/// `1, x, y, x², xy, y², x³, x²y, xy², y³`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialLibrary {
    dimension: usize,
    max_degree: u32,
    terms: Vec<Exponents>,
}

impl PolynomialLibrary {
    pub fn new(dimension: usize, max_degree: u32) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("library dimension must be positive".into()));
        }
        if max_degree == 0 {
            return Err(Error::InvalidArgument("library degree must be positive".into()));
        }
        let mut terms = Vec::new();
        for degree in 0..=max_degree {
            let mut current = vec![0u32; dimension];
            push_degree(&mut terms, &mut current, 0, degree);
        }
        Ok(Self { dimension, max_degree, terms })
    }

    /// Degree-3 library, the default used throughout.
    pub fn cubic(dimension: usize) -> Result<Self> {
        Self::new(dimension, 3)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn terms(&self) -> &[Exponents] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Column index of a monomial, if it is part of the library.
    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        self.terms.iter().position(|t| t.as_slice() == exponents)
    }

    /// Human-readable name of term `j` using the given variable names.
    pub fn term_name(&self, j: usize, names: &[&str]) -> String {
        let term = &self.terms[j];
        let mut parts = Vec::new();
        for (var, &e) in term.iter().enumerate() {
            let name = names.get(var).copied().map(str::to_string).unwrap_or_else(|| format!("x{}", var + 1));
            match e {
                0 => {}
                1 => parts.push(name),
                _ => parts.push(format!("{name}^{e}")),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(" ")
        }
    }

    /// Evaluates every monomial on one state vector.
    pub fn evaluate_row(&self, state: &[f64], out: &mut [f64]) {
        debug_assert_eq!(state.len(), self.dimension);
        debug_assert_eq!(out.len(), self.terms.len());
        for (slot, term) in out.iter_mut().zip(&self.terms) {
            let mut v = 1.0;
            for (&x, &e) in state.iter().zip(term) {
                for _ in 0..e {
                    v *= x;
                }
            }
            *slot = v;
        }
    }

    /// Builds Θ(X): row `i` holds every library term evaluated on row `i` of `x`.
    pub fn evaluate(&self, x: &Mat<f64>) -> Result<Mat<f64>> {
        if x.ncols() != self.dimension {
            return Err(Error::DimensionMismatch(format!(
                "library expects {} state columns, data has {}",
                self.dimension,
                x.ncols()
            )));
        }
        let m = x.nrows();
        let p = self.terms.len();
        let mut theta = Mat::<f64>::zeros(m, p);
        let mut state = vec![0.0; self.dimension];
        let mut row = vec![0.0; p];
        for i in 0..m {
            for (j, s) in state.iter_mut().enumerate() {
                *s = x[(i, j)];
            }
            self.evaluate_row(&state, &mut row);
            for (j, &v) in row.iter().enumerate() {
                theta[(i, j)] = v;
            }
        }
        Ok(theta)
    }
}

// Fills the remaining exponent budget from variable `var` onward, highest power first.
fn push_degree(out: &mut Vec<Exponents>, current: &mut Vec<u32>, var: usize, remaining: u32) {
    if var + 1 == current.len() {
        current[var] = remaining;
        out.push(current.clone());
        current[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e;
        push_degree(out, current, var + 1, remaining - e);
    }
    current[var] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn two_variable_cubic_row() {
        let lib = PolynomialLibrary::cubic(2).unwrap();
        let x = Mat::from_fn(1, 2, |_, j| [2.0, 3.0][j]);
        let theta = lib.evaluate(&x).unwrap();
        let row: Vec<f64> = (0..theta.ncols()).map(|j| theta[(0, j)]).collect();
        assert_eq!(row, vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0, 8.0, 12.0, 18.0, 27.0]);
    }

    #[test]
    fn zero_state_has_only_constant() {
        let lib = PolynomialLibrary::cubic(1).unwrap();
        let x = Mat::<f64>::zeros(3, 1);
        let theta = lib.evaluate(&x).unwrap();
        for i in 0..3 {
            assert_eq!([theta[(i, 0)], theta[(i, 1)], theta[(i, 2)], theta[(i, 3)]], [1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn term_count_is_binomial() {
        for n in 1..=6 {
            for d in 1..=4u32 {
                let lib = PolynomialLibrary::new(n, d).unwrap();
                assert_eq!(lib.len(), binomial(n + d as usize, d as usize), "n={n} d={d}");
            }
        }
        assert_eq!(PolynomialLibrary::cubic(3).unwrap().len(), 20);
    }

    #[test]
    fn terms_are_unique_and_ordered() {
        let lib = PolynomialLibrary::cubic(4).unwrap();
        let terms = lib.terms();
        assert_eq!(terms[0], vec![0, 0, 0, 0]);
        for w in terms.windows(2) {
            let (da, db) = (w[0].iter().sum::<u32>(), w[1].iter().sum::<u32>());
            assert!(da < db || (da == db && w[0] > w[1]), "{:?} then {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let lib = PolynomialLibrary::cubic(3).unwrap();
        assert!(matches!(lib.evaluate(&Mat::zeros(4, 2)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn term_names() {
        let lib = PolynomialLibrary::cubic(3).unwrap();
        let names = ["x", "y", "z"];
        let xz = lib.index_of(&[1, 0, 1]).unwrap();
        assert_eq!(lib.term_name(xz, &names), "x z");
        assert_eq!(lib.term_name(0, &names), "1");
        assert_eq!(lib.term_name(lib.index_of(&[3, 0, 0]).unwrap(), &names), "x^3");
    }
}
