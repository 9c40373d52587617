//! Delay models for signals that mix a fast and a slow time scale.
//!
//! Two strategies are provided. [`spaced_config`] stretches the delay window
//! over a slow period by spacing rows, while spacing columns keeps the
//! Hankel matrix size fixed. [`iterative_fit`] models the fast scale on a
//! short finely sampled window, subtracts it analytically from a long
//! coarsely sampled record and models what remains as the slow scale.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dynamics::{make_coupled, simulate_with_substeps, Coupling, TimeSeries};
use crate::error::{Error, Result};
use crate::havok::{build_hankel, fit_dmd, HankelConfig, HavokModel};

/// Samples per fast period in the fast-model window.
pub const FAST_WINDOW_RATE: usize = 128;
/// Fast-model window and slow-model record length, in periods of each scale.
pub const WINDOW_PERIODS: f64 = 5.0;
/// Fraction of the fast window's variance that may sit below the fast band.
pub const DRIFT_THRESHOLD: f64 = 0.1;
/// Modes slower than this fraction of the fast angular frequency count as drift.
pub const DRIFT_BAND: f64 = 0.75;

/// A fast and a slow scalar component on one grid, and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoScaleObservable {
    pub fast: TimeSeries,
    pub slow: TimeSeries,
    pub summed: TimeSeries,
    pub t_fast: f64,
    pub t_slow: f64,
}

impl TwoScaleObservable {
    pub fn from_components(fast: TimeSeries, slow: TimeSeries, t_fast: f64, t_slow: f64) -> Result<Self> {
        if fast.dim() != 1 || slow.dim() != 1 {
            return Err(Error::DimensionMismatch("components must be scalar series".into()));
        }
        if !(t_fast > 0.0) || !(t_slow > t_fast) {
            return Err(Error::DegenerateRatio(t_slow / t_fast));
        }
        let summed = fast.add(&slow)?;
        Ok(Self { fast, slow, summed, t_fast, t_slow })
    }

    /// Two uncoupled Van der Pol oscillators (first coordinates summed), the
    /// slow one running `ratio` times slower. `samples_per_fast_period`
    /// fixes the grid; `n_slow_periods` sets the record length after one
    /// slow period of transient.
    pub fn van_der_pol_pair(ratio: f64, samples_per_fast_period: f64, n_slow_periods: f64) -> Result<Self> {
        let spec = make_coupled("vdp-vdp", ratio, Some((Coupling::zeros(2, 2), Coupling::zeros(2, 2))))?;
        let substeps = (1024.0 / samples_per_fast_period).ceil().max(1.0) as usize;
        let series = simulate_with_substeps(
            &spec,
            &spec.default_initial_condition(),
            samples_per_fast_period,
            n_slow_periods * ratio,
            ratio,
            substeps,
        )?;
        let fast = series.select(&[spec.fast_range().start])?;
        let slow = series.select(&[spec.slow_range().start])?;
        Self::from_components(fast, slow, spec.fast_period(), spec.slow_period())
    }

    pub fn ratio(&self) -> f64 {
        self.t_slow / self.t_fast
    }
}

/// Spaced embedding with `D = (q − 1)·d·dt ≈ t_slow` and exactly
/// `sample_budget / q` columns over a record of `train_span`.
///
/// `d = max(1, round(t_slow / ((q − 1)·dt)))`; `c` is the largest spacing
/// coprime to `d` that still yields the target column count, and the count
/// is capped so the matrix size does not depend on `t_slow`.
pub fn spaced_config(t_slow: f64, q: usize, dt: f64, sample_budget: usize, train_span: f64) -> Result<HankelConfig> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 delays, got {q}")));
    }
    if !(t_slow > 0.0) || !(dt > 0.0) || !(train_span > 0.0) {
        return Err(Error::InvalidArgument("durations and step must be positive".into()));
    }
    let d = ((t_slow / ((q - 1) as f64 * dt)).round() as usize).max(1);
    let p = sample_budget / q;
    if p < 2 {
        return Err(Error::InvalidArgument(format!("budget {sample_budget} gives fewer than two columns of {q} rows")));
    }
    let m = (train_span / dt).round() as usize;
    let reach = (q - 1) * d + 2;
    if m < reach + p - 1 {
        return Err(Error::SeriesTooShort(format!(
            "{m} samples cannot hold {p} columns spanning {reach} samples each"
        )));
    }
    // A column step sharing a factor with `d` revisits the same row phases;
    // with `c = d` the matrix is just a decimated standard Hankel matrix.
    let c_max = ((m - reach) / (p - 1)).max(1);
    let c = (1..=c_max).rev().find(|&c| gcd(c, d) == 1).unwrap_or(1);
    HankelConfig::spaced(q, d, c, dt)?.with_max_columns(p)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Fast model, slow model and the constant removed from the fast fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoScaleModel {
    pub fast_model: HavokModel,
    pub slow_model: HavokModel,
    pub constant_offset: f64,
    /// Drift fraction measured on the fast window.
    pub drift_fraction: f64,
}

impl TwoScaleModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `fast + slow + constant_offset` at each time.
pub fn combined_predict(model: &TwoScaleModel, times: &[f64]) -> Vec<f64> {
    let f = model.fast_model.predict(times);
    let s = model.slow_model.predict(times);
    (0..times.len()).map(|i| f[(i, 0)] + s[(i, 0)] + model.constant_offset).collect()
}

/// Modes whose `|Im ω|` lies below `DRIFT_BAND` of the fast angular frequency.
fn drift_mask(model: &HavokModel, t_fast: f64) -> Vec<bool> {
    let band = DRIFT_BAND * 2.0 * std::f64::consts::PI / t_fast;
    model.omegas.iter().map(|w| w.im.abs() < band).collect()
}

/// Scalar output of the selected modes at each time.
fn partial_output(model: &HavokModel, keep: &[bool], times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let tau = t - model.t_ref;
            (0..model.rank)
                .filter(|&k| keep[k])
                .map(|k| (model.modes[(0, k)] * (model.omegas[k] * tau).exp() * model.amplitudes[k]).re)
                .sum()
        })
        .collect()
}

fn variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
}

/// Share of the window's variance carried by sub-fast-band modes of `model`.
pub fn drift_fraction(model: &HavokModel, window: &TimeSeries, t_fast: f64) -> f64 {
    let times = window.times();
    let low = partial_output(model, &drift_mask(model, t_fast), &times);
    let total = variance(&window.column(0));
    if total == 0.0 {
        0.0
    } else {
        variance(&low) / total
    }
}

/// Copy of `model` keeping only the modes where `keep` is true.
fn retain_modes(model: &HavokModel, keep: &[bool]) -> HavokModel {
    let idx: Vec<usize> = (0..model.rank).filter(|&k| keep[k]).collect();
    HavokModel {
        rank: idx.len(),
        omegas: idx.iter().map(|&k| model.omegas[k]).collect(),
        modes: faer::Mat::from_fn(model.modes.nrows(), idx.len(), |i, j| model.modes[(i, idx[j])]),
        amplitudes: idx.iter().map(|&k| model.amplitudes[k]).collect(),
        config: model.config,
        n: model.n,
        t_ref: model.t_ref,
    }
}

// Fits at rank `r`, lowering it to the numerical rank if needed.
fn fit_up_to_rank(series: &TimeSeries, q: usize, r: usize) -> Result<HavokModel> {
    let pair = build_hankel(series, &HankelConfig::standard(q, series.dt())?)?;
    let r = r.min(pair.h.nrows()).min(pair.h.ncols());
    match fit_dmd(&pair, r) {
        Err(Error::ZeroSingularValue { index }) if index > 1 => fit_dmd(&pair, index - 1),
        other => other,
    }
}

/// Three-step fast/slow decomposition of a scalar multiscale record.
///
/// 1. Fit and stabilize a rank-`r_fast` model on the first `5·t_fast` of
///    `summed` at about 128 samples per fast period. Modes below the fast
///    band are removed; their mean over the window becomes
///    `constant_offset`. If they carry more than 10% of the window's
///    variance the slow scale is not frozen on the fast window and
///    [`Error::SlowDrift`] is returned.
/// 2. Decimate a further `ratio` times, keep `5·t_fast·ratio` of record and
///    subtract the fast model (evaluated in closed form) and the offset.
/// 3. Fit and stabilize a rank-`r_slow` model on the residual. A residual
///    of lower numerical rank gets a correspondingly smaller model.
pub fn iterative_fit(
    summed: &TimeSeries,
    t_fast: f64,
    ratio: f64,
    r_fast: usize,
    r_slow: usize,
    q: usize,
) -> Result<TwoScaleModel> {
    if summed.dim() != 1 {
        return Err(Error::DimensionMismatch("iterative fitting needs a scalar observable".into()));
    }
    if !(ratio > 1.0) {
        return Err(Error::DegenerateRatio(ratio));
    }
    if !(t_fast > 0.0) {
        return Err(Error::InvalidArgument(format!("fast period must be positive, got {t_fast}")));
    }
    let fast_stride = ((t_fast / FAST_WINDOW_RATE as f64 / summed.dt()).round() as usize).max(1);
    let fast_dt = fast_stride as f64 * summed.dt();
    let fast_len = (WINDOW_PERIODS * t_fast / fast_dt).round() as usize;
    let decimated = summed.decimate(fast_stride, 0)?;
    if decimated.len() < fast_len {
        return Err(Error::SeriesTooShort(format!(
            "fast window needs {fast_len} samples, record has {}",
            decimated.len()
        )));
    }
    let window = decimated.window(0, fast_len)?;
    let full = fit_up_to_rank(&window, q, r_fast)?.stabilize();
    let drift = drift_fraction(&full, &window, t_fast);
    if drift > DRIFT_THRESHOLD {
        return Err(Error::SlowDrift { fraction: drift });
    }
    let mask = drift_mask(&full, t_fast);
    let low = partial_output(&full, &mask, &window.times());
    let constant_offset = low.iter().sum::<f64>() / low.len() as f64;
    let keep: Vec<bool> = mask.iter().map(|m| !m).collect();
    let fast_model = retain_modes(&full, &keep);

    let slow_stride = fast_stride * (ratio.round() as usize).max(1);
    let coarse = summed.decimate(slow_stride, 0)?;
    let slow_len = (WINDOW_PERIODS * t_fast * ratio / coarse.dt()).round() as usize;
    if coarse.len() < slow_len {
        return Err(Error::SeriesTooShort(format!(
            "slow record needs {slow_len} samples, record has {}",
            coarse.len()
        )));
    }
    let coarse = coarse.window(0, slow_len)?;
    let times = coarse.times();
    let fast_part = fast_model.predict(&times);
    let residual: Vec<f64> =
        (0..slow_len).map(|i| coarse.values()[(i, 0)] - fast_part[(i, 0)] - constant_offset).collect();
    let residual = TimeSeries::from_scalar(coarse.t0(), coarse.dt(), &residual)?;
    let slow_model = fit_up_to_rank(&residual, q, r_slow)?.stabilize();
    Ok(TwoScaleModel { fast_model, slow_model, constant_offset, drift_fraction: drift })
}

/// Period of the strongest spectral peak of a uniformly sampled signal.
///
/// The mean is removed, the record is zero-padded 16-fold and the peak bin
/// is refined by parabolic interpolation of the magnitude.
pub fn dominant_period(samples: &[f64], dt: f64) -> Option<f64> {
    let m = samples.len();
    if m < 4 || !(dt > 0.0) {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / m as f64;
    let len = (16 * m).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|z| z.norm()).collect();
    let (k, &peak) = mag.iter().enumerate().skip(1).max_by(|a, b| a.1.total_cmp(b.1))?;
    if peak == 0.0 {
        return None;
    }
    let shift = if k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            0.5 * (a - c) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some(len as f64 * dt / (k as f64 + shift))
}
