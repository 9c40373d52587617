use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sindy::library::{Exponents, PolynomialLibrary};

/// Anything that can be integrated: a state dimension, a vector field and a time unit.
pub trait Dynamics: Send + Sync {
    fn dimension(&self) -> usize;

    /// Writes f(x) into `out`.
    fn rhs(&self, x: &[f64], out: &mut [f64]);

    /// Characteristic period, the unit for sampling rates and durations.
    fn period(&self) -> f64;

    /// Polynomial form of the vector field: per state equation, `(exponents, coefficient)` pairs.
    fn polynomial_terms(&self) -> Vec<Vec<(Exponents, f64)>>;

    /// Active-term mask (library term × state) in the cubic library.
    fn true_support(&self) -> Vec<Vec<bool>> {
        support_from_terms(self.dimension(), &self.polynomial_terms())
    }

    /// Variable names for reports.
    fn variable_names(&self) -> Vec<String>;
}

/// Benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Lorenz,
    Rossler,
    VanDerPol,
    Duffing,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] =
        [SystemKind::Lorenz, SystemKind::Duffing, SystemKind::VanDerPol, SystemKind::Rossler];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Lorenz => "lorenz",
            SystemKind::Rossler => "rossler",
            SystemKind::VanDerPol => "vanderpol",
            SystemKind::Duffing => "duffing",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            SystemKind::Lorenz | SystemKind::Rossler => 3,
            SystemKind::VanDerPol | SystemKind::Duffing => 2,
        }
    }

    /// Parameter names with their default values.
    pub fn default_params(self) -> &'static [(&'static str, f64)] {
        match self {
            SystemKind::Lorenz => &[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)],
            SystemKind::Rossler => &[("a", 0.1), ("b", 0.1), ("c", 14.0), ("tau", 0.1)],
            SystemKind::VanDerPol => &[("mu", 5.0)],
            SystemKind::Duffing => &[("delta", 0.0), ("alpha", 1.0), ("beta", 4.0)],
        }
    }

    /// Initial condition on the basin of the benchmark attractor.
    pub fn default_initial_condition(self) -> Vec<f64> {
        match self {
            SystemKind::Lorenz => vec![-8.0, 8.0, 27.0],
            SystemKind::Rossler => vec![1.0, 1.0, 0.0],
            SystemKind::VanDerPol => vec![2.0, 0.0],
            SystemKind::Duffing => vec![1.0, 0.0],
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lorenz" => Ok(SystemKind::Lorenz),
            "rossler" => Ok(SystemKind::Rossler),
            "vanderpol" | "vdp" => Ok(SystemKind::VanDerPol),
            "duffing" => Ok(SystemKind::Duffing),
            _ => Err(Error::UnknownSystem(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    Rossler { a: f64, b: f64, c: f64, tau: f64 },
    VanDerPol { mu: f64 },
    Duffing { delta: f64, alpha: f64, beta: f64 },
}

/// A named benchmark system with its parameters and characteristic period.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    kind: SystemKind,
    params: BTreeMap<String, f64>,
    field: Field,
    period: f64,
}

impl SystemSpec {
    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    /// Replaces the characteristic period, e.g. after measuring it for non-benchmark parameters.
    pub fn with_period(mut self, period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
        }
        self.period = period;
        Ok(self)
    }

    pub fn default_initial_condition(&self) -> Vec<f64> {
        self.kind.default_initial_condition()
    }

    /// Coordinates of an equilibrium, used for sanity checks.
    pub fn fixed_point(&self) -> Vec<f64> {
        match self.field {
            Field::Lorenz { .. } | Field::VanDerPol { .. } | Field::Duffing { .. } => vec![0.0; self.dimension()],
            Field::Rossler { a, b, c, .. } => {
                // x = a·z, y = -z, a·z² - c·z + b = 0 (inner root)
                let z = (c - (c * c - 4.0 * a * b).sqrt()) / (2.0 * a);
                vec![a * z, -z, z]
            }
        }
    }
}

/// Builds one of the benchmark systems; unspecified parameters take their defaults.
pub fn make_system(name: &str, params: &[(&str, f64)]) -> Result<SystemSpec> {
    let kind: SystemKind = name.parse()?;
    let mut values: BTreeMap<String, f64> = kind.default_params().iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for &(key, value) in params {
        match values.get_mut(key) {
            Some(slot) => {
                if !value.is_finite() {
                    return Err(Error::InvalidParameter {
                        system: kind.name().into(),
                        name: key.into(),
                        reason: format!("must be finite, got {value}"),
                    });
                }
                *slot = value;
            }
            None => {
                return Err(Error::InvalidParameter {
                    system: kind.name().into(),
                    name: key.into(),
                    reason: "unknown parameter".into(),
                })
            }
        }
    }
    let p = |k: &str| values[k];
    let field = match kind {
        SystemKind::Lorenz => Field::Lorenz { sigma: p("sigma"), rho: p("rho"), beta: p("beta") },
        SystemKind::Rossler => {
            if p("tau") <= 0.0 {
                return Err(Error::InvalidParameter {
                    system: kind.name().into(),
                    name: "tau".into(),
                    reason: "time constant must be positive".into(),
                });
            }
            Field::Rossler { a: p("a"), b: p("b"), c: p("c"), tau: p("tau") }
        }
        SystemKind::VanDerPol => Field::VanDerPol { mu: p("mu") },
        SystemKind::Duffing => Field::Duffing { delta: p("delta"), alpha: p("alpha"), beta: p("beta") },
    };
    let mut spec = SystemSpec { kind, params: values, field, period: f64::NAN };
    spec.period = match known_period(&field) {
        Some(t) => t,
        None => super::period::measure_period(&spec)?,
    };
    Ok(spec)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

// Periods measured once at high resolution for the benchmark parameter sets.
fn known_period(field: &Field) -> Option<f64> {
    match *field {
        Field::Lorenz { sigma, rho, beta } if close(sigma, 10.0) && close(beta, 8.0 / 3.0) => {
            if close(rho, 28.0) {
                Some(0.759)
            } else if close(rho, 160.0) {
                Some(1.152_949)
            } else {
                None
            }
        }
        Field::VanDerPol { mu } if close(mu, 5.0) => Some(11.45),
        Field::Duffing { delta, alpha, beta } if delta == 0.0 && close(alpha, 1.0) && close(beta, 4.0) => Some(3.179),
        // Rossler periods scale with the time constant.
        Field::Rossler { a, b, c, tau } if close(a, 0.1) && close(b, 0.1) => {
            if close(c, 14.0) {
                Some(6.14 * tau)
            } else if close(c, 8.5) {
                // four loops before the orbit closes
                Some(24.259 * tau)
            } else {
                None
            }
        }
        _ => None,
    }
}

impl Dynamics for SystemSpec {
    fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    #[inline]
    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        match self.field {
            Field::Lorenz { sigma, rho, beta } => {
                out[0] = sigma * (x[1] - x[0]);
                out[1] = x[0] * (rho - x[2]) - x[1];
                out[2] = x[0] * x[1] - beta * x[2];
            }
            Field::Rossler { a, b, c, tau } => {
                out[0] = (-x[1] - x[2]) / tau;
                out[1] = (x[0] + a * x[1]) / tau;
                out[2] = (b + x[2] * (x[0] - c)) / tau;
            }
            Field::VanDerPol { mu } => {
                out[0] = x[1];
                out[1] = mu * (1.0 - x[0] * x[0]) * x[1] - x[0];
            }
            Field::Duffing { delta, alpha, beta } => {
                out[0] = x[1];
                out[1] = -delta * x[1] - alpha * x[0] - beta * x[0] * x[0] * x[0];
            }
        }
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn polynomial_terms(&self) -> Vec<Vec<(Exponents, f64)>> {
        let t = |e: &[u32], c: f64| (e.to_vec(), c);
        let mut eqs = match self.field {
            Field::Lorenz { sigma, rho, beta } => vec![
                vec![t(&[1, 0, 0], -sigma), t(&[0, 1, 0], sigma)],
                vec![t(&[1, 0, 0], rho), t(&[0, 1, 0], -1.0), t(&[1, 0, 1], -1.0)],
                vec![t(&[1, 1, 0], 1.0), t(&[0, 0, 1], -beta)],
            ],
            Field::Rossler { a, b, c, tau } => vec![
                vec![t(&[0, 1, 0], -1.0 / tau), t(&[0, 0, 1], -1.0 / tau)],
                vec![t(&[1, 0, 0], 1.0 / tau), t(&[0, 1, 0], a / tau)],
                vec![t(&[0, 0, 0], b / tau), t(&[1, 0, 1], 1.0 / tau), t(&[0, 0, 1], -c / tau)],
            ],
            Field::VanDerPol { mu } => {
                vec![vec![t(&[0, 1], 1.0)], vec![t(&[0, 1], mu), t(&[2, 1], -mu), t(&[1, 0], -1.0)]]
            }
            Field::Duffing { delta, alpha, beta } => {
                vec![vec![t(&[0, 1], 1.0)], vec![t(&[0, 1], -delta), t(&[1, 0], -alpha), t(&[3, 0], -beta)]]
            }
        };
        for eq in &mut eqs {
            eq.retain(|(_, c)| *c != 0.0);
        }
        eqs
    }

    fn variable_names(&self) -> Vec<String> {
        match self.kind {
            SystemKind::Lorenz | SystemKind::Rossler => vec!["x".into(), "y".into(), "z".into()],
            SystemKind::VanDerPol | SystemKind::Duffing => vec!["x".into(), "y".into()],
        }
    }
}

/// Converts per-equation polynomial terms into the cubic-library support mask.
pub fn support_from_terms(dimension: usize, terms: &[Vec<(Exponents, f64)>]) -> Vec<Vec<bool>> {
    let lib = PolynomialLibrary::cubic(dimension).expect("dimension is positive");
    let mut mask = vec![vec![false; dimension]; lib.len()];
    for (state, eq) in terms.iter().enumerate() {
        for (exps, coef) in eq {
            if *coef != 0.0 {
                let row = lib.index_of(exps).expect("benchmark terms are at most cubic");
                mask[row][state] = true;
            }
        }
    }
    mask
}

/// Dense coefficient matrix (library term × state) of the polynomial vector field.
pub fn coefficients_from_terms(dimension: usize, terms: &[Vec<(Exponents, f64)>]) -> Vec<Vec<f64>> {
    let lib = PolynomialLibrary::cubic(dimension).expect("dimension is positive");
    let mut xi = vec![vec![0.0; dimension]; lib.len()];
    for (state, eq) in terms.iter().enumerate() {
        for (exps, coef) in eq {
            let row = lib.index_of(exps).expect("benchmark terms are at most cubic");
            xi[row][state] += coef;
        }
    }
    xi
}

/// Pairing of a fast and a slow benchmark system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoupledKind {
    #[serde(rename = "vdp-vdp")]
    VdpVdp,
    #[serde(rename = "slowvdp-fastlorenz")]
    SlowVdpFastLorenz,
    #[serde(rename = "fastvdp-slowlorenz")]
    FastVdpSlowLorenz,
}

impl CoupledKind {
    pub fn name(self) -> &'static str {
        match self {
            CoupledKind::VdpVdp => "vdp-vdp",
            CoupledKind::SlowVdpFastLorenz => "slowvdp-fastlorenz",
            CoupledKind::FastVdpSlowLorenz => "fastvdp-slowlorenz",
        }
    }

    /// Default strength for both directions of first-coordinate coupling.
    ///
    /// A Van der Pol member at `μ = 5` creeps along its slow branch at
    /// roughly `1/(μ|x|)`; forcing larger than that pushes `x` off to
    /// infinity, so the strength is kept well below that speed divided by
    /// the partner's amplitude.
    pub fn default_coupling(self) -> f64 {
        match self {
            CoupledKind::VdpVdp => 0.02,
            CoupledKind::SlowVdpFastLorenz => 0.01,
            CoupledKind::FastVdpSlowLorenz => 0.005,
        }
    }

    fn members(self) -> (SystemKind, SystemKind) {
        match self {
            CoupledKind::VdpVdp => (SystemKind::VanDerPol, SystemKind::VanDerPol),
            CoupledKind::SlowVdpFastLorenz => (SystemKind::Lorenz, SystemKind::VanDerPol),
            CoupledKind::FastVdpSlowLorenz => (SystemKind::VanDerPol, SystemKind::Lorenz),
        }
    }
}

impl fmt::Display for CoupledKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoupledKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vdp-vdp" => Ok(CoupledKind::VdpVdp),
            "slowvdp-fastlorenz" => Ok(CoupledKind::SlowVdpFastLorenz),
            "fastvdp-slowlorenz" => Ok(CoupledKind::FastVdpSlowLorenz),
            _ => Err(Error::UnknownCoupledKind(s.to_string())),
        }
    }
}

/// Row-major dense matrix used for the linear coupling blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Coupling {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// `strength` times the matrix with a single one in its top-left corner.
    pub fn first_coordinates(rows: usize, cols: usize, strength: f64) -> Self {
        let mut c = Self::zeros(rows, cols);
        c.data[0] = strength;
        c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Two benchmark systems with linear coupling and separated time scales:
/// `τ_fast·u̇ = f(u) + C·v`, `τ_slow·v̇ = g(v) + D·u`. State order is `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSpec {
    kind: CoupledKind,
    fast: SystemSpec,
    slow: SystemSpec,
    c: Coupling,
    d: Coupling,
    tau_fast: f64,
    tau_slow: f64,
    ratio: f64,
}

/// Builds a coupled pair whose period ratio equals `ratio`.
///
/// The fast time constant is 1 and the slow one stretches the slow member
/// so that `T_slow = ratio · T_fast`. `coupling` defaults to
/// [`CoupledKind::default_coupling`] between the first coordinates of each
/// member.
pub fn make_coupled(kind: &str, ratio: f64, coupling: Option<(Coupling, Coupling)>) -> Result<CoupledSpec> {
    let kind: CoupledKind = kind.parse()?;
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(Error::DegenerateRatio(ratio));
    }
    let (fast_kind, slow_kind) = kind.members();
    let fast = make_system(fast_kind.name(), &[])?;
    let slow = make_system(slow_kind.name(), &[])?;
    let (n, l) = (fast.dimension(), slow.dimension());
    let (c, d) = coupling.unwrap_or_else(|| {
        (
            Coupling::first_coordinates(n, l, kind.default_coupling()),
            Coupling::first_coordinates(l, n, kind.default_coupling()),
        )
    });
    if c.rows != n || c.cols != l || c.data.len() != n * l {
        return Err(Error::DimensionMismatch(format!("fast coupling must be {n}x{l}, got {}x{}", c.rows, c.cols)));
    }
    if d.rows != l || d.cols != n || d.data.len() != n * l {
        return Err(Error::DimensionMismatch(format!("slow coupling must be {l}x{n}, got {}x{}", d.rows, d.cols)));
    }
    let tau_fast = 1.0;
    let tau_slow = ratio * fast.period() / slow.period();
    Ok(CoupledSpec { kind, fast, slow, c, d, tau_fast, tau_slow, ratio })
}

impl CoupledSpec {
    pub fn kind(&self) -> CoupledKind {
        self.kind
    }

    pub fn fast(&self) -> &SystemSpec {
        &self.fast
    }

    pub fn slow(&self) -> &SystemSpec {
        &self.slow
    }

    pub fn fast_coupling(&self) -> &Coupling {
        &self.c
    }

    pub fn slow_coupling(&self) -> &Coupling {
        &self.d
    }

    pub fn tau_fast(&self) -> f64 {
        self.tau_fast
    }

    pub fn tau_slow(&self) -> f64 {
        self.tau_slow
    }

    /// Frequency ratio `T_slow / T_fast`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn fast_period(&self) -> f64 {
        self.tau_fast * self.fast.period()
    }

    pub fn slow_period(&self) -> f64 {
        self.tau_slow * self.slow.period()
    }

    /// Fast then slow default initial conditions.
    pub fn default_initial_condition(&self) -> Vec<f64> {
        let mut x0 = self.fast.default_initial_condition();
        x0.extend(self.slow.default_initial_condition());
        x0
    }

    /// Index range of the fast and slow blocks in the combined state.
    pub fn fast_range(&self) -> std::ops::Range<usize> {
        0..self.fast.dimension()
    }

    pub fn slow_range(&self) -> std::ops::Range<usize> {
        self.fast.dimension()..self.dimension()
    }
}

impl Dynamics for CoupledSpec {
    fn dimension(&self) -> usize {
        self.fast.dimension() + self.slow.dimension()
    }

    fn rhs(&self, x: &[f64], out: &mut [f64]) {
        let n = self.fast.dimension();
        let (u, v) = x.split_at(n);
        let (du, dv) = out.split_at_mut(n);
        self.fast.rhs(u, du);
        self.slow.rhs(v, dv);
        for i in 0..n {
            let mut acc = 0.0;
            for (j, vj) in v.iter().enumerate() {
                acc += self.c.get(i, j) * vj;
            }
            du[i] = (du[i] + acc) / self.tau_fast;
        }
        for i in 0..v.len() {
            let mut acc = 0.0;
            for (j, uj) in u.iter().enumerate() {
                acc += self.d.get(i, j) * uj;
            }
            dv[i] = (dv[i] + acc) / self.tau_slow;
        }
    }

    /// The fast period: sampling rates of coupled runs are per fast period.
    fn period(&self) -> f64 {
        self.fast_period()
    }

    fn polynomial_terms(&self) -> Vec<Vec<(Exponents, f64)>> {
        let n = self.fast.dimension();
        let l = self.slow.dimension();
        let total = n + l;
        let embed = |exps: &[u32], offset: usize| {
            let mut e = vec![0u32; total];
            e[offset..offset + exps.len()].copy_from_slice(exps);
            e
        };
        let unit = |k: usize| {
            let mut e = vec![0u32; total];
            e[k] = 1;
            e
        };
        let mut eqs = Vec::with_capacity(total);
        for (i, eq) in self.fast.polynomial_terms().into_iter().enumerate() {
            let mut terms: Vec<(Exponents, f64)> = eq.iter().map(|(e, c)| (embed(e, 0), c / self.tau_fast)).collect();
            for j in 0..l {
                let cij = self.c.get(i, j);
                if cij != 0.0 {
                    add_term(&mut terms, unit(n + j), cij / self.tau_fast);
                }
            }
            eqs.push(terms);
        }
        for (i, eq) in self.slow.polynomial_terms().into_iter().enumerate() {
            let mut terms: Vec<(Exponents, f64)> = eq.iter().map(|(e, c)| (embed(e, n), c / self.tau_slow)).collect();
            for j in 0..n {
                let dij = self.d.get(i, j);
                if dij != 0.0 {
                    add_term(&mut terms, unit(j), dij / self.tau_slow);
                }
            }
            eqs.push(terms);
        }
        for eq in &mut eqs {
            eq.retain(|(_, c)| *c != 0.0);
        }
        eqs
    }

    fn variable_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.fast.variable_names().into_iter().map(|s| format!("{s}1")).collect();
        names.extend(self.slow.variable_names().into_iter().map(|s| format!("{s}2")));
        names
    }
}

fn add_term(terms: &mut Vec<(Exponents, f64)>, exps: Exponents, coef: f64) {
    match terms.iter_mut().find(|(e, _)| *e == exps) {
        Some((_, c)) => *c += coef,
        None => terms.push((exps, coef)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support_set(spec: &dyn Dynamics) -> Vec<Vec<String>> {
        let lib = PolynomialLibrary::cubic(spec.dimension()).unwrap();
        let names = spec.variable_names();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mask = spec.true_support();
        (0..spec.dimension())
            .map(|s| (0..lib.len()).filter(|&r| mask[r][s]).map(|r| lib.term_name(r, &names)).collect())
            .collect()
    }

    #[test]
    fn lorenz_defaults() {
        let s = make_system("lorenz", &[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)]).unwrap();
        assert!((s.period() - 0.759).abs() < 1e-12);
        let sup = support_set(&s);
        assert_eq!(sup[0], vec!["x", "y"]);
        assert_eq!(sup[1], vec!["x", "y", "x z"]);
        assert_eq!(sup[2], vec!["z", "x y"]);
    }

    #[test]
    fn vanderpol_and_duffing() {
        let v = make_system("vanderpol", &[("mu", 5.0)]).unwrap();
        assert!((v.period() - 11.45).abs() < 1e-12);
        assert_eq!(support_set(&v), vec![vec!["y"], vec!["x", "y", "x^2 y"]]);
        let d = make_system("duffing", &[("delta", 0.0), ("alpha", 1.0), ("beta", 4.0)]).unwrap();
        assert!((d.period() - 3.179).abs() < 1e-12);
        assert_eq!(support_set(&d), vec![vec!["y"], vec!["x", "x^3"]]);
    }

    #[test]
    fn rossler_period_is_in_scaled_time() {
        let r = make_system("rossler", &[("a", 0.1), ("b", 0.1), ("c", 14.0), ("tau", 0.1)]).unwrap();
        assert!((r.period() - 0.614).abs() < 1e-12);
        assert_eq!(support_set(&r), vec![vec!["y", "z"], vec!["x", "y"], vec!["1", "z", "x z"]]);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(make_system("nosuch", &[]), Err(Error::UnknownSystem(_))));
        assert!(matches!(make_system("lorenz", &[("rho", f64::NAN)]), Err(Error::InvalidParameter { .. })));
        assert!(matches!(make_system("lorenz", &[("gamma", 1.0)]), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn rhs_finite_on_random_states() {
        for kind in SystemKind::ALL {
            let s = make_system(kind.name(), &[]).unwrap();
            let mut out = vec![0.0; s.dimension()];
            for k in 0..50 {
                let x: Vec<f64> = (0..s.dimension()).map(|j| ((k * 7 + j * 3) as f64).sin() * 30.0).collect();
                s.rhs(&x, &mut out);
                assert!(out.iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn fixed_points_are_equilibria() {
        for kind in SystemKind::ALL {
            let s = make_system(kind.name(), &[]).unwrap();
            let x = s.fixed_point();
            let mut out = vec![0.0; s.dimension()];
            s.rhs(&x, &mut out);
            assert!(out.iter().all(|v| v.abs() < 1e-12), "{kind}: {out:?}");
        }
    }

    #[test]
    fn coupled_vdp_matches_schematic() {
        let c = make_coupled("vdp-vdp", 4.0, None).unwrap();
        assert_eq!(c.dimension(), 4);
        assert!((c.slow_period() / c.fast_period() - 4.0).abs() < 1e-12);
        let sup = support_set(&c);
        assert_eq!(sup[0], vec!["y1", "x2"]);
        assert_eq!(sup[1], vec!["x1", "y1", "x1^2 y1"]);
        assert_eq!(sup[2], vec!["x1", "y2"]);
        assert_eq!(sup[3], vec!["x2", "y2", "x2^2 y2"]);
        // ẋ1 = y1 + c1 x2 with τ_fast = 1
        let mut out = vec![0.0; 4];
        c.rhs(&[0.5, 1.5, 2.0, -1.0], &mut out);
        assert!((out[0] - (1.5 + 0.02 * 2.0)).abs() < 1e-15);
        assert!((out[2] - (-1.0 + 0.02 * 0.5) / c.tau_slow()).abs() < 1e-15);
    }

    #[test]
    fn default_coupling_keeps_the_fast_cycle() {
        let c = make_coupled("vdp-vdp", 4.0, None).unwrap();
        let run = crate::dynamics::simulate(&c, &c.default_initial_condition(), 256.0, 16.0, 40.0).unwrap();
        let x1 = run.column(0);
        let crossings = x1.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert!((28..=32).contains(&crossings), "{crossings}");
        assert!(x1.iter().all(|v| v.abs() < 2.1));
    }

    #[test]
    fn coupled_rejects_degenerate_ratio_and_bad_shapes() {
        assert!(matches!(make_coupled("vdp-vdp", 1.0, None), Err(Error::DegenerateRatio(_))));
        assert!(matches!(make_coupled("vdp-vdp", 0.5, None), Err(Error::DegenerateRatio(_))));
        let bad = (Coupling::zeros(3, 2), Coupling::zeros(2, 2));
        assert!(matches!(make_coupled("vdp-vdp", 4.0, Some(bad)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(make_coupled("nope", 4.0, None), Err(Error::UnknownCoupledKind(_))));
    }

    #[test]
    fn coupled_lorenz_pairs() {
        let c = make_coupled("slowvdp-fastlorenz", 8.0, None).unwrap();
        assert_eq!(c.dimension(), 5);
        assert!((c.fast_period() - 0.759).abs() < 1e-12);
        assert!((c.slow_period() - 8.0 * 0.759).abs() < 1e-12);
        let c = make_coupled("fastvdp-slowlorenz", 8.0, None).unwrap();
        assert!((c.slow_period() - 8.0 * 11.45).abs() < 1e-9);
    }
}
