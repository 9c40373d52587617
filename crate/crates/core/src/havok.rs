//! Linear time-delay models: Hankel embeddings and exact DMD.
//!
//! A series `x_0, x_1, …` (fine step `dt`) is embedded with `q` delays, row
//! spacing `d` and column spacing `c`:
//!
//! ```text
//! H [block i, column j] = x[i·d + j·c]
//! H'[block i, column j] = x[i·d + j·c + 1]
//! ```
//!
//! so `H'` is always `H` advanced by one fine step. A rank-`r` exact DMD of
//! the pair gives discrete eigenvalues `λ_k`, continuous eigenvalues
//! `ω_k = ln(λ_k)/dt`, modes `φ_k` and amplitudes `b_k`, and the model
//! `x(t) = Σ φ_k exp(ω_k (t − t_ref)) b_k` can be evaluated at any time.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::{complex_lstsq, real_eigen, to_complex, truncated_svd};

/// Delay embedding layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HankelConfig {
    /// Delays per observable (rows per block count).
    pub q: usize,
    /// Row spacing in fine steps.
    pub d: usize,
    /// Column spacing in fine steps.
    pub c: usize,
    /// Fine time step of the source series.
    pub dt: f64,
    /// Upper bound on the column count; `None` uses every available column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_columns: Option<usize>,
}

impl HankelConfig {
    /// Standard embedding with unit spacings.
    pub fn standard(q: usize, dt: f64) -> Result<Self> {
        Self::spaced(q, 1, 1, dt)
    }

    pub fn spaced(q: usize, d: usize, c: usize, dt: f64) -> Result<Self> {
        let cfg = Self { q, d, c, dt, max_columns: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_columns(mut self, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("column cap must be positive".into()));
        }
        self.max_columns = Some(p);
        Ok(self)
    }

    /// `q = 1` is accepted and yields a plain snapshot matrix.
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.d == 0 || self.c == 0 {
            return Err(Error::InvalidArgument(format!(
                "delays and spacings must be positive (q={}, d={}, c={})",
                self.q, self.d, self.c
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    /// `D = (q − 1)·d·dt`.
    pub fn delay_duration(&self) -> f64 {
        (self.q - 1) as f64 * self.d as f64 * self.dt
    }

    /// Largest column count a series of `m` samples supports.
    pub fn max_columns_for(&self, m: usize) -> Option<usize> {
        let reach = (self.q - 1) * self.d + 2;
        if m < reach {
            return None;
        }
        let p = (m - reach) / self.c + 1;
        Some(self.max_columns.map_or(p, |cap| p.min(cap)))
    }

    /// Fine samples needed to fill `p` columns.
    pub fn samples_for_columns(&self, p: usize) -> usize {
        (self.q - 1) * self.d + (p - 1) * self.c + 2
    }
}

/// Snapshot pair `(H, H')` with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPair {
    pub h: Mat<f64>,
    pub h_next: Mat<f64>,
    pub config: HankelConfig,
    /// Observables per delay block.
    pub n: usize,
    /// Time of the sample in the top-left entry of `H`.
    pub t0: f64,
}

impl HankelPair {
    pub fn columns(&self) -> usize {
        self.h.ncols()
    }

    pub fn numel(&self) -> usize {
        self.h.nrows() * self.h.ncols()
    }
}

/// Builds the (possibly spaced) Hankel pair with the maximal column count.
pub fn build_hankel(series: &TimeSeries, config: &HankelConfig) -> Result<HankelPair> {
    config.validate()?;
    if ((series.dt() - config.dt) / config.dt).abs() > 1e-9 {
        return Err(Error::DimensionMismatch(format!(
            "embedding step {} differs from series step {}",
            config.dt,
            series.dt()
        )));
    }
    let m = series.len();
    let p = config.max_columns_for(m).ok_or_else(|| {
        Error::SeriesTooShort(format!("{m} samples cannot fill one column with q={}, d={}", config.q, config.d))
    })?;
    let n = series.dim();
    let v = series.values();
    let (q, d, c) = (config.q, config.d, config.c);
    let h = Mat::from_fn(q * n, p, |row, j| v[((row / n) * d + j * c, row % n)]);
    let h_next = Mat::from_fn(q * n, p, |row, j| v[((row / n) * d + j * c + 1, row % n)]);
    Ok(HankelPair { h, h_next, config: *config, n, t0: series.t0() })
}

/// Fitted linear delay model.
#[derive(Debug, Clone, PartialEq)]
pub struct HavokModel {
    pub rank: usize,
    /// Continuous-time eigenvalues, 1/time.
    pub omegas: Vec<c64>,
    /// Exact DMD modes, `(q·n) × r`.
    pub modes: Mat<c64>,
    pub amplitudes: Vec<c64>,
    pub config: HankelConfig,
    /// Observables per delay block.
    pub n: usize,
    pub t_ref: f64,
}

/// Rank-`r` exact DMD of a Hankel pair.
///
/// `Ã = Uᵀ H' V Σ⁻¹`, `Ã W = W Λ`, `Φ = H' V Σ⁻¹ W`, `ω = ln λ / dt`
/// (principal branch), and `b` solves `Φ b ≈ H[:, 0]` in least squares.
pub fn fit_dmd(pair: &HankelPair, r: usize) -> Result<HavokModel> {
    let (rows, p) = pair.h.shape();
    if r == 0 || r > rows.min(p) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} outside 1..={} for a {rows}x{p} Hankel matrix",
            rows.min(p)
        )));
    }
    let svd = truncated_svd(pair.h.as_ref(), r)?;
    let cutoff = f64::EPSILON * rows.max(p) as f64 * svd.s[0];
    if let Some(k) = svd.s.iter().position(|&s| s <= cutoff) {
        return Err(Error::ZeroSingularValue { index: k + 1 });
    }
    // V Σ⁻¹
    let mut v_sinv = svd.v.clone();
    for (k, &s) in svd.s.iter().enumerate() {
        for i in 0..v_sinv.nrows() {
            v_sinv[(i, k)] /= s;
        }
    }
    let hv = &pair.h_next * &v_sinv;
    let a_tilde = svd.u.transpose() * &hv;
    let (lambdas, w) = real_eigen(a_tilde.as_ref())?;
    let scale = lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    if let Some(k) = lambdas.iter().position(|l| l.norm() <= f64::EPSILON * scale || l.norm() == 0.0) {
        return Err(Error::ZeroEigenvalue { index: k + 1 });
    }
    let modes = &to_complex(hv.as_ref()) * &w;
    let dt = pair.config.dt;
    let omegas = lambdas.iter().map(|l| l.ln() / dt).collect();
    let first = Mat::from_fn(rows, 1, |i, _| c64::new(pair.h[(i, 0)], 0.0));
    let b = complex_lstsq(modes.as_ref(), first.as_ref())?;
    Ok(HavokModel {
        rank: r,
        omegas,
        amplitudes: (0..r).map(|k| b[(k, 0)]).collect(),
        modes,
        config: pair.config,
        n: pair.n,
        t_ref: pair.t0,
    })
}

impl HavokModel {
    /// Copy with every eigenvalue moved onto the imaginary axis.
    pub fn stabilize(&self) -> HavokModel {
        let mut out = self.clone();
        for w in &mut out.omegas {
            *w = c64::new(0.0, w.im);
        }
        out
    }

    pub fn is_stable(&self) -> bool {
        self.omegas.iter().all(|w| w.re == 0.0)
    }

    /// Discrete eigenvalues `exp(ω·dt)`.
    pub fn discrete_eigenvalues(&self) -> Vec<c64> {
        self.omegas.iter().map(|w| (w * self.config.dt).exp()).collect()
    }

    /// Complex model output (first `n` rows of `Φ e^{Ω(t − t_ref)} b`).
    pub fn predict_complex(&self, t: f64) -> Vec<c64> {
        let tau = t - self.t_ref;
        let coeff: Vec<c64> = self.omegas.iter().zip(&self.amplitudes).map(|(w, b)| (w * tau).exp() * b).collect();
        (0..self.n).map(|l| coeff.iter().enumerate().map(|(k, e)| self.modes[(l, k)] * e).sum()).collect()
    }

    /// Real model output at each time, `times.len() × n`.
    pub fn predict(&self, times: &[f64]) -> Mat<f64> {
        let mut out = Mat::zeros(times.len(), self.n);
        for (i, &t) in times.iter().enumerate() {
            for (l, z) in self.predict_complex(t).into_iter().enumerate() {
                out[(i, l)] = z.re;
            }
        }
        out
    }

    /// Prediction on the uniform grid `t0 + k·dt`, `k < m`.
    pub fn predict_series(&self, t0: f64, dt: f64, m: usize) -> Result<TimeSeries> {
        let times: Vec<f64> = (0..m).map(|k| t0 + k as f64 * dt).collect();
        TimeSeries::new(t0, dt, self.predict(&times))
    }

    /// Largest `|Im|` of the output relative to the largest `|output|` over `times`.
    pub fn imaginary_residue(&self, times: &[f64]) -> f64 {
        let (mut im, mut mag) = (0.0f64, 0.0f64);
        for &t in times {
            for z in self.predict_complex(t) {
                im = im.max(z.im.abs());
                mag = mag.max(z.norm());
            }
        }
        if mag == 0.0 {
            0.0
        } else {
            im / mag
        }
    }

    /// `Σ_k |φ_k| |b_k|` over the observable rows; bounds every stabilized prediction.
    pub fn amplitude_bound(&self) -> Vec<f64> {
        (0..self.n)
            .map(|l| (0..self.rank).map(|k| self.modes[(l, k)].norm() * self.amplitudes[k].norm()).sum())
            .collect()
    }

    /// Contribution of each mode to the observable block, `‖φ_k[0..n]‖·|b_k|`.
    pub fn mode_weights(&self) -> Vec<f64> {
        (0..self.rank)
            .map(|k| {
                let phi: f64 = (0..self.n).map(|l| self.modes[(l, k)].norm_sqr()).sum::<f64>().sqrt();
                phi * self.amplitudes[k].norm()
            })
            .collect()
    }

    /// `|Im ω|` of the heaviest oscillating mode, or `None` if every mode is constant.
    pub fn dominant_frequency(&self) -> Option<f64> {
        let weights = self.mode_weights();
        self.omegas
            .iter()
            .zip(&weights)
            .filter(|(w, _)| w.im.abs() > 1e-9 / self.config.dt)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(w, _)| w.im.abs())
    }

    /// Relative one-step error `‖H' − Φ Λ Φ⁺ H‖_F / ‖H'‖_F` on a snapshot pair.
    pub fn one_step_residual(&self, pair: &HankelPair) -> Result<f64> {
        if pair.h.nrows() != self.modes.nrows() {
            return Err(Error::DimensionMismatch("pair does not match the model embedding".into()));
        }
        let coeffs = complex_lstsq(self.modes.as_ref(), to_complex(pair.h.as_ref()).as_ref())?;
        let lambdas = self.discrete_eigenvalues();
        let mut advanced = coeffs;
        for (k, l) in lambdas.iter().enumerate() {
            for j in 0..advanced.ncols() {
                advanced[(k, j)] *= l;
            }
        }
        let pred = &self.modes * &advanced;
        let mut num = 0.0;
        for j in 0..pred.ncols() {
            for i in 0..pred.nrows() {
                num += (pred[(i, j)] - pair.h_next[(i, j)]).norm_sqr();
            }
        }
        Ok(num.sqrt() / pair.h_next.norm_l2())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Normalized singular values and leading left singular vectors of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    /// `σ_i / Σ_j σ_j` for `i < k`.
    pub normalized: Vec<f64>,
    /// First `k` columns of `U`.
    pub modes: Mat<f64>,
}

pub fn svd_mode_report(pair: &HankelPair, k: usize) -> Result<ModeReport> {
    let svd = truncated_svd(pair.h.as_ref(), k)?;
    let total: f64 = svd.all_singular_values.iter().sum();
    let normalized = if total > 0.0 { svd.s.iter().map(|s| s / total).collect() } else { vec![0.0; k] };
    Ok(ModeReport { normalized, modes: svd.u })
}

fn interleave(z: impl Iterator<Item = c64>) -> Vec<f64> {
    z.flat_map(|z| [z.re, z.im]).collect()
}

fn deinterleave(v: &[f64], what: &str) -> std::result::Result<Vec<c64>, String> {
    if !v.len().is_multiple_of(2) {
        return Err(format!("{what}: odd number of entries"));
    }
    Ok(v.chunks_exact(2).map(|p| c64::new(p[0], p[1])).collect())
}

#[derive(Serialize, Deserialize)]
struct HavokRepr {
    config: HankelConfig,
    r: usize,
    n: usize,
    /// `[re, im, re, im, …]`.
    omegas: Vec<f64>,
    /// Column-major, interleaved.
    modes: Vec<f64>,
    mode_rows: usize,
    amplitudes: Vec<f64>,
    t_ref: f64,
}

impl Serialize for HavokModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let modes = interleave(
            (0..self.modes.ncols())
                .flat_map(|j| (0..self.modes.nrows()).map(move |i| (i, j)))
                .map(|(i, j)| self.modes[(i, j)]),
        );
        HavokRepr {
            config: self.config,
            r: self.rank,
            n: self.n,
            omegas: interleave(self.omegas.iter().copied()),
            modes,
            mode_rows: self.modes.nrows(),
            amplitudes: interleave(self.amplitudes.iter().copied()),
            t_ref: self.t_ref,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HavokModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = HavokRepr::deserialize(d)?;
        let omegas = deinterleave(&r.omegas, "omegas").map_err(D::Error::custom)?;
        let amplitudes = deinterleave(&r.amplitudes, "amplitudes").map_err(D::Error::custom)?;
        let flat = deinterleave(&r.modes, "modes").map_err(D::Error::custom)?;
        if omegas.len() != r.r || amplitudes.len() != r.r || flat.len() != r.mode_rows * r.r {
            return Err(D::Error::custom("model arrays disagree with the rank"));
        }
        r.config.validate().map_err(D::Error::custom)?;
        let modes = Mat::from_fn(r.mode_rows, r.r, |i, j| flat[j * r.mode_rows + i]);
        Ok(HavokModel { rank: r.r, omegas, modes, amplitudes, config: r.config, n: r.n, t_ref: r.t_ref })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(q: usize, periods: f64) -> (TimeSeries, HankelConfig) {
        let dt = 1.0 / (q - 1) as f64;
        let m = (periods / dt).round() as usize;
        let x: Vec<f64> = (0..m).map(|k| (2.0 * PI * k as f64 * dt).cos()).collect();
        (TimeSeries::from_scalar(0.0, dt, &x).unwrap(), HankelConfig::standard(q, dt).unwrap())
    }

    #[test]
    fn textbook_layout() {
        let s = TimeSeries::from_scalar(0.0, 1.0, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = build_hankel(&s, &HankelConfig::standard(3, 1.0).unwrap()).unwrap();
        assert_eq!(p.columns(), 2);
        for j in 0..2 {
            for i in 0..3 {
                assert_eq!(p.h[(i, j)], (i + j) as f64);
                assert_eq!(p.h_next[(i, j)], (i + j + 1) as f64);
            }
        }
    }

    #[test]
    fn spaced_layout_and_cap() {
        let x: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let s = TimeSeries::from_scalar(0.0, 0.5, &x).unwrap();
        let cfg = HankelConfig::spaced(2, 3, 2, 0.5).unwrap();
        let p = build_hankel(&s, &cfg).unwrap();
        assert_eq!(p.columns(), (20 - 2 - 3) / 2 + 1);
        assert_eq!((p.h[(0, 1)], p.h[(1, 1)]), (2.0, 5.0));
        assert_eq!(p.h_next[(1, 1)], 6.0);
        let capped = build_hankel(&s, &cfg.with_max_columns(3).unwrap()).unwrap();
        assert_eq!(capped.columns(), 3);
        assert!((cfg.delay_duration() - 1.5).abs() == 0.0);
        assert!(build_hankel(&s, &HankelConfig::spaced(8, 3, 1, 0.5).unwrap()).is_err());
    }

    #[test]
    fn constant_series_has_one_mode() {
        let s = TimeSeries::from_scalar(0.0, 0.1, &[3.0; 40]).unwrap();
        let p = build_hankel(&s, &HankelConfig::standard(5, 0.1).unwrap()).unwrap();
        let rep = svd_mode_report(&p, 5).unwrap();
        assert!((rep.normalized[0] - 1.0).abs() < 1e-12);
        assert!(rep.normalized[1..].iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn pure_tone_is_exact() {
        let (s, cfg) = tone(32, 4.0);
        let pair = build_hankel(&s, &cfg).unwrap();
        let model = fit_dmd(&pair, 2).unwrap().stabilize();
        let mut ims: Vec<f64> = model.omegas.iter().map(|w| w.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 2.0 * PI).abs() < 1e-6 && (ims[1] - 2.0 * PI).abs() < 1e-6);
        let a = model.predict(&[0.0])[(0, 0)];
        let b = model.predict(&[1.0])[(0, 0)];
        assert!((a - 1.0).abs() < 1e-6 && (a - b).abs() < 1e-6);
        let rep = svd_mode_report(&pair, 4).unwrap();
        assert!(rep.normalized[2] < 1e-10);
    }

    #[test]
    fn stabilize_is_idempotent() {
        let (s, cfg) = tone(16, 3.0);
        let model = fit_dmd(&build_hankel(&s, &cfg).unwrap(), 2).unwrap();
        let once = model.stabilize();
        assert!(once.is_stable());
        assert_eq!(once, once.stabilize());
        let mut m = once.clone();
        m.omegas[0] = c64::new(0.01, 3.0);
        assert_eq!(m.stabilize().omegas[0], c64::new(0.0, 3.0));
    }

    #[test]
    fn rank_too_large_or_zero_signal() {
        let (s, cfg) = tone(8, 2.0);
        let pair = build_hankel(&s, &cfg).unwrap();
        assert!(fit_dmd(&pair, 9).is_err());
        assert!(matches!(fit_dmd(&pair, 4), Err(Error::ZeroSingularValue { index: 3 })));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let (s, cfg) = tone(12, 3.0);
        let model = fit_dmd(&build_hankel(&s, &cfg).unwrap(), 2).unwrap();
        let back = HavokModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, back);
        for (a, b) in model.omegas.iter().zip(&back.omegas) {
            assert_eq!((a.re.to_bits(), a.im.to_bits()), (b.re.to_bits(), b.im.to_bits()));
        }
    }
}
