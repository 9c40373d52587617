use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{rmse, Cell, Record, SweepResult};
use crate::dynamics::{make_system, simulate_with_substeps, Dynamics, SystemSpec, TimeSeries};
use crate::error::{Error, Result};
use crate::havok::{build_hankel, fit_dmd, svd_mode_report, HankelConfig, HavokModel, ModeReport};
use crate::multiscale::{combined_predict, dominant_period, iterative_fit, spaced_config, TwoScaleObservable};
use crate::par;

/// Train/test split of one observable on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayData {
    pub train: TimeSeries,
    pub test: TimeSeries,
}

impl DelayData {
    /// `samples_per_period` grid, `train_periods` then `test_periods` after a
    /// 10-period transient; integration uses substeps of at most `T/2048`.
    pub fn simulate(
        spec: &SystemSpec,
        component: usize,
        samples_per_period: f64,
        train_periods: f64,
        test_periods: f64,
    ) -> Result<Self> {
        let substeps = (2048.0 / samples_per_period).ceil().max(1.0) as usize;
        let series = simulate_with_substeps(
            spec,
            &spec.default_initial_condition(),
            samples_per_period,
            train_periods + test_periods,
            10.0,
            substeps,
        )?
        .select(&[component])?;
        Self::split(&series, (train_periods * samples_per_period).round() as usize)
    }

    pub fn split(series: &TimeSeries, train_len: usize) -> Result<Self> {
        if train_len == 0 || train_len >= series.len() {
            return Err(Error::SeriesTooShort(format!("cannot split {} samples at {train_len}", series.len())));
        }
        Ok(Self { train: series.window(0, train_len)?, test: series.window(train_len, series.len() - train_len)? })
    }
}

/// Normalized RMSE of the scalar model output against a scalar series.
fn score(model: &HavokModel, truth: &TimeSeries) -> Result<f64> {
    let pred = model.predict(&truth.times());
    rmse(pred.col_as_slice(0), &truth.column(0), true)
}

fn fit_stable(series: &TimeSeries, config: &HankelConfig, rank: usize) -> Result<(HavokModel, usize)> {
    let pair = build_hankel(series, config)?;
    Ok((fit_dmd(&pair, rank)?.stabilize(), pair.numel()))
}

/// Training and test error against rank, and singular-value concentration
/// against delay count, for one system with `D = T` at `q = 128`.
pub fn rank_delay_study(spec: &SystemSpec, ranks: &[usize], delays: &[usize]) -> Result<SweepResult> {
    const Q: usize = 128;
    let data = DelayData::simulate(spec, 0, (Q - 1) as f64, 5.0, 2.0)?;
    let cfg = HankelConfig::standard(Q, data.train.dt())?;
    let pair = build_hankel(&data.train, &cfg)?;
    let mut result = SweepResult::new("rank-delay", 0, 1)
        .axis("rank", &ranks.iter().map(|&r| r as f64).collect::<Vec<_>>())
        .axis("q", &delays.iter().map(|&q| q as f64).collect::<Vec<_>>())
        .setting("system", spec.name());
    let fits = par::map(ranks.to_vec(), |r| -> Result<(f64, f64)> {
        let model = fit_dmd(&pair, r)?.stabilize();
        Ok((score(&model, &data.train)?, score(&model, &data.test)?))
    });
    for (&r, fit) in ranks.iter().zip(fits) {
        let record = match fit {
            Ok((train, test)) => Record::ok(0, [("train_rmse", train), ("test_rmse", test)]),
            Err(e) => Record::failed(0, e.to_string(), []),
        };
        result.cells.push(Cell::new(&[("rank", r as f64), ("q", Q as f64)], &[("study", "rank")], vec![record]));
    }
    for &q in delays {
        let report = delay_mode_report(spec, q, q.min(8))?;
        let mut record = Record::ok(0, [("sigma_1", report.normalized[0])]);
        for (k, v) in report.normalized.iter().enumerate().skip(1) {
            record.metrics.insert(format!("sigma_{}", k + 1), *v);
        }
        result.cells.push(Cell::new(&[("q", q as f64)], &[("study", "delay")], vec![record]));
    }
    Ok(result)
}

/// Normalized spectrum and leading modes of the `q`-delay Hankel matrix of
/// the first state, on the `T/127` grid used by [`rank_delay_study`].
pub fn delay_mode_report(spec: &SystemSpec, q: usize, k: usize) -> Result<ModeReport> {
    let data = DelayData::simulate(spec, 0, 127.0, 5.0, 2.0)?;
    let pair = build_hankel(&data.train, &HankelConfig::standard(q, data.train.dt())?)?;
    svd_mode_report(&pair, k)
}

/// Settings for [`spacing_tradeoff_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingOptions {
    pub ratios: Vec<f64>,
    pub rank: usize,
    pub q: usize,
    /// Fine-grid steps per fast period.
    pub fine_steps: usize,
    /// Training and test spans in slow periods.
    pub train_periods: f64,
    pub test_periods: f64,
    /// Column count of the spaced model; `None` matches the large-step size.
    pub spaced_columns: Option<usize>,
    /// Largest Hankel matrix attempted for the small-step model.
    pub max_numel: usize,
}

impl Default for SpacingOptions {
    fn default() -> Self {
        Self {
            ratios: vec![4.0, 8.0, 16.0],
            rank: 100,
            q: 256,
            fine_steps: 127,
            spaced_columns: None,
            train_periods: 5.0,
            test_periods: 2.0,
            max_numel: 60_000_000,
        }
    }
}

#[derive(Clone, Copy)]
enum Variant {
    LargeStep,
    SmallStep,
    Spaced,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::LargeStep => "large-dt",
            Variant::SmallStep => "small-dt",
            Variant::Spaced => "spaced",
        }
    }
}

fn integer_ratio(ratio: f64) -> Result<usize> {
    if ratio > 1.0 && ratio.fract() == 0.0 {
        Ok(ratio as usize)
    } else {
        Err(Error::InvalidArgument(format!("this experiment needs an integer ratio, got {ratio}")))
    }
}

// Summed two-oscillator records: the fine `T_fast/fine_steps` grid split into
// train and test, and a training record sampled at `T_slow/(q−1)` for the
// large-step model.
struct SpacingData {
    obs: TwoScaleObservable,
    fine: DelayData,
    coarse: TimeSeries,
}

fn spacing_data(ratio: f64, opts: &SpacingOptions) -> Result<SpacingData> {
    let steps = opts.fine_steps as f64;
    let obs = TwoScaleObservable::van_der_pol_pair(ratio, steps, opts.train_periods + opts.test_periods)?;
    let fine = DelayData::split(&obs.summed, (opts.train_periods * ratio * steps).round() as usize)?;
    let coarse_rate = (opts.q - 1) as f64 / ratio;
    let coarse = TwoScaleObservable::van_der_pol_pair(ratio, coarse_rate, opts.train_periods)?.summed;
    let coarse = coarse.window(0, (opts.train_periods * (opts.q - 1) as f64).round() as usize)?;
    Ok(SpacingData { obs, fine, coarse })
}

fn fit_variant(
    variant: Variant,
    data: &SpacingData,
    ratio: usize,
    opts: &SpacingOptions,
) -> Result<(f64, usize, HankelConfig)> {
    let q = opts.q;
    let dt = data.fine.train.dt();
    let large_cfg = HankelConfig::standard(q, data.coarse.dt())?;
    let large_numel = q * large_cfg
        .max_columns_for(data.coarse.len())
        .ok_or_else(|| Error::SeriesTooShort("training record too short for the large-step model".into()))?;
    let (model, numel, cfg) = match variant {
        Variant::LargeStep => {
            let (m, n) = fit_stable(&data.coarse, &large_cfg, opts.rank)?;
            (m, n, large_cfg)
        }
        Variant::SmallStep => {
            let cfg = HankelConfig::standard(ratio * opts.fine_steps + 1, dt)?;
            let p = cfg
                .max_columns_for(data.fine.train.len())
                .ok_or_else(|| Error::SeriesTooShort("training record too short for the small-step model".into()))?;
            let numel = cfg.q * p;
            if numel > opts.max_numel {
                return Err(Error::InvalidArgument(format!("numel {numel} exceeds the memory budget")));
            }
            let (m, n) = fit_stable(&data.fine.train, &cfg, opts.rank)?;
            (m, n, cfg)
        }
        Variant::Spaced => {
            let span = data.fine.train.len() as f64 * dt;
            let budget = opts.spaced_columns.map_or(large_numel, |p| p * q);
            let cfg = spaced_config(data.obs.t_slow, q, dt, budget, span)?;
            let (m, n) = fit_stable(&data.fine.train, &cfg, opts.rank)?;
            (m, n, cfg)
        }
    };
    Ok((score(&model, &data.fine.test)?, numel, cfg))
}

/// Size and held-out error of large-step, small-step and spaced delay
/// models on the summed two-oscillator signal, with `D = T_slow` for all.
pub fn spacing_tradeoff_sweep(opts: &SpacingOptions, seed: u64) -> Result<SweepResult> {
    let ratios: Vec<usize> = opts.ratios.iter().map(|&f| integer_ratio(f)).collect::<Result<_>>()?;
    let data = par::map(ratios.clone(), |f| spacing_data(f as f64, opts));
    let data: Vec<SpacingData> = data.into_iter().collect::<Result<_>>()?;
    let work: Vec<(usize, Variant)> = (0..ratios.len())
        .flat_map(|i| [Variant::LargeStep, Variant::SmallStep, Variant::Spaced].map(|v| (i, v)))
        .collect();
    let fits = par::map(work.clone(), |(i, v)| fit_variant(v, &data[i], ratios[i], opts));
    let mut result = SweepResult::new("spacing-tradeoff", seed, 1)
        .axis("ratio", &opts.ratios)
        .setting("rank", opts.rank)
        .setting("q", opts.q)
        .setting("train_slow_periods", opts.train_periods)
        .setting("test_slow_periods", opts.test_periods);
    for ((i, v), fit) in work.into_iter().zip(fits) {
        let f = ratios[i];
        let record = match fit {
            Ok((err, numel, cfg)) => Record::ok(
                0,
                [
                    ("test_rmse", err),
                    ("numel", numel as f64),
                    ("q", cfg.q as f64),
                    ("d", cfg.d as f64),
                    ("c", cfg.c as f64),
                    ("delay_duration", cfg.delay_duration()),
                ],
            ),
            Err(e) => {
                let attempted = match v {
                    Variant::SmallStep => {
                        let q = f * opts.fine_steps + 1;
                        (q * (data[i].fine.train.len().saturating_sub(q) + 1)) as f64
                    }
                    _ => f64::NAN,
                };
                Record::failed(0, e.to_string(), [("numel", attempted)])
            }
        };
        result.cells.push(Cell::new(&[("ratio", f as f64)], &[("model", v.name())], vec![record]));
    }
    Ok(result)
}

/// Held-out error of the large-step model on the summed signal; returns
/// `(normalized rmse, numel)`.
pub fn large_dt_baseline(ratio: f64, rank: usize, q: usize, test_periods: f64) -> Result<(f64, usize)> {
    let f = integer_ratio(ratio)?;
    let opts = SpacingOptions { rank, q, test_periods, ..SpacingOptions::default() };
    let data = spacing_data(ratio, &opts)?;
    let (err, numel, _) = fit_variant(Variant::LargeStep, &data, f, &opts)?;
    Ok((err, numel))
}

/// Outcome of the three-step fast/slow fit on the summed oscillators.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeReport {
    pub sweep: SweepResult,
    pub drift_fraction: f64,
    /// `(model, spectrum)` periods of each scale.
    pub fast_period: (f64, f64),
    pub slow_period: (f64, f64),
    /// Normalized error over one held-out slow period.
    pub combined_rmse: f64,
    pub baseline_rmse: f64,
}

/// Iterative fit at one frequency ratio with ranks `rank` for both scales,
/// compared against the large-step single model (rank 100).
pub fn iterative_study(ratio: f64, rank: usize, q: usize) -> Result<IterativeReport> {
    let obs = TwoScaleObservable::van_der_pol_pair(ratio, 128.0, 6.0)?;
    let model = iterative_fit(&obs.summed, obs.t_fast, ratio, rank, rank, q)?;
    let train_len = (5.0 * ratio * 128.0).round() as usize;
    let test = obs.summed.window(train_len, obs.summed.len() - train_len)?;
    let pred = combined_predict(&model, &test.times());
    let combined = rmse(&pred, &test.column(0), true)?;
    let (baseline, _) = large_dt_baseline(ratio, 100, SpacingOptions::default().q, 1.0)?;
    let dt = obs.summed.dt();
    let fft = |s: &TimeSeries| {
        dominant_period(&s.window(0, train_len)?.column(0), dt)
            .ok_or_else(|| Error::InvalidArgument("component has no spectral peak".into()))
    };
    let period = |m: &HavokModel| m.dominant_frequency().map_or(f64::NAN, |w| 2.0 * PI / w);
    let fast_period = (period(&model.fast_model), fft(&obs.fast)?);
    let slow_period = (period(&model.slow_model), fft(&obs.slow)?);
    let mut sweep = SweepResult::new("iterative", 0, 1).axis("ratio", &[ratio]).setting("rank", rank).setting("q", q);
    sweep.cells.push(Cell::new(
        &[("ratio", ratio)],
        &[("model", "iterative")],
        vec![Record::ok(
            0,
            [
                ("test_rmse", combined),
                ("drift_fraction", model.drift_fraction),
                ("fast_model_period", fast_period.0),
                ("fast_fft_period", fast_period.1),
                ("slow_model_period", slow_period.0),
                ("slow_fft_period", slow_period.1),
                ("constant_offset", model.constant_offset),
            ],
        )],
    ));
    sweep.cells.push(Cell::new(
        &[("ratio", ratio)],
        &[("model", "large-dt")],
        vec![Record::ok(0, [("test_rmse", baseline)])],
    ));
    Ok(IterativeReport {
        sweep,
        drift_fraction: model.drift_fraction,
        fast_period,
        slow_period,
        combined_rmse: combined,
        baseline_rmse: baseline,
    })
}

/// A delay model showcased on one benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalleryEntry {
    pub system: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub component: usize,
    pub rank: usize,
}

pub const GALLERY: [GalleryEntry; 3] = [
    GalleryEntry { system: "vanderpol", params: &[], component: 0, rank: 24 },
    GalleryEntry { system: "lorenz", params: &[("rho", 160.0)], component: 0, rank: 12 },
    GalleryEntry { system: "rossler", params: &[("c", 8.5)], component: 2, rank: 105 },
];

/// Stabilized models of the gallery systems with `D = T`, trained on five
/// periods and scored on the next two.
pub fn gallery(q: usize) -> Result<SweepResult> {
    let runs = par::map(GALLERY.to_vec(), |e| -> Result<Record> {
        let spec = make_system(e.system, e.params)?;
        let data = DelayData::simulate(&spec, e.component, (q - 1) as f64, 5.0, 2.0)?;
        let (model, _) = fit_stable(&data.train, &HankelConfig::standard(q, data.train.dt())?, e.rank)?;
        let pred = model.predict(&data.test.times());
        let peak = pred.col_as_slice(0).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let bound = model.amplitude_bound()[0];
        let model_period = model.dominant_frequency().map_or(f64::NAN, |w| 2.0 * PI / w);
        let fft_period = dominant_period(&data.train.column(0), data.train.dt()).unwrap_or(f64::NAN);
        Ok(Record::ok(
            0,
            [
                ("test_rmse", score(&model, &data.test)?),
                ("train_rmse", score(&model, &data.train)?),
                ("max_abs_prediction", peak),
                ("amplitude_bound", bound),
                ("model_period", model_period),
                ("fft_period", fft_period),
                ("period", spec.period()),
            ],
        ))
    });
    let mut result = SweepResult::new("gallery", 0, 1).setting("q", q);
    for (e, r) in GALLERY.iter().zip(runs) {
        let record = r.unwrap_or_else(|err| Record::failed(0, err.to_string(), []));
        result.cells.push(Cell::new(&[("rank", e.rank as f64)], &[("system", e.system)], vec![record]));
    }
    Ok(result)
}
