use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, Record, SweepResult};
use crate::dynamics::{make_coupled, simulate, CoupledKind, CoupledSpec, Dynamics, SystemSpec, TimeSeries};
use crate::error::{Error, Result};
use crate::par;
use crate::sampling::{extract_training_pairs, jittered_burst_schedule, uniform_schedule, Schedule};
use crate::sindy::{self, fit_pairs, support_matches, TrainingPairs, DEFAULT_MAX_ITER};

/// Settings for [`data_requirement_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementOptions {
    /// Sampling rates in samples per period; the largest is the simulation rate.
    pub rates: Vec<u64>,
    /// Random trajectory phases per rate.
    pub n_trials: usize,
    /// Duration grid step, in periods.
    pub resolution: f64,
    /// Longest duration tried, in periods.
    pub max_duration: f64,
    /// Phases are drawn uniformly from this many periods of attractor.
    pub phase_span: f64,
    pub threshold: f64,
}

impl Default for RequirementOptions {
    fn default() -> Self {
        Self {
            rates: (6..=14).map(|k| 1u64 << k).collect(),
            n_trials: 20,
            resolution: 0.05,
            max_duration: 3.0,
            phase_span: 20.0,
            threshold: sindy::DEFAULT_THRESHOLD,
        }
    }
}

/// Minimal identifying duration statistics at one rate, in periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementSummary {
    pub rate: u64,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Trials that identified the system within `max_duration`.
    pub identified: usize,
}

// Fine trajectory plus random start indices shared by every rate.
struct PhaseData {
    series: TimeSeries,
    fine_rate: u64,
    starts: Vec<usize>,
}

fn phase_data(spec: &SystemSpec, fine_rate: u64, opts_span: f64, extra: f64, n: usize, seed: u64) -> Result<PhaseData> {
    let series = simulate(spec, &spec.default_initial_condition(), fine_rate as f64, opts_span + extra, 10.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = (0..n).map(|_| (rng.random::<f64>() * opts_span * fine_rate as f64).floor() as usize).collect();
    Ok(PhaseData { series, fine_rate, starts })
}

fn identifies(
    data: &PhaseData,
    truth: &[Vec<bool>],
    start: usize,
    rate: u64,
    duration: f64,
    threshold: f64,
) -> Result<bool> {
    let idx = uniform_schedule(data.fine_rate, rate, duration)?;
    if idx.len() < 3 {
        return Ok(false);
    }
    let idx: Vec<usize> = idx.into_iter().map(|i| i + start).collect();
    let pairs = extract_training_pairs(&data.series, &Schedule::Uniform(idx))?;
    let model = fit_pairs(&pairs, threshold, 3, DEFAULT_MAX_ITER)?;
    support_matches(&model, truth)
}

/// Minimal duration (in periods) identifying the system at each rate.
///
/// For each rate and each of `n_trials` random phases, bisects over the
/// duration grid `k · resolution` assuming success is monotone in duration.
pub fn data_requirement_sweep(
    spec: &SystemSpec,
    opts: &RequirementOptions,
    seed: u64,
) -> Result<(SweepResult, Vec<RequirementSummary>)> {
    if opts.rates.is_empty() || opts.n_trials == 0 {
        return Err(Error::InvalidArgument("need at least one rate and one trial".into()));
    }
    let fine = *opts.rates.iter().max().expect("non-empty");
    if let Some(r) = opts.rates.iter().find(|&&r| r == 0 || !fine.is_multiple_of(r)) {
        return Err(Error::InvalidArgument(format!("rate {r} does not divide {fine}")));
    }
    let data = phase_data(spec, fine, opts.phase_span, opts.max_duration + 0.5, opts.n_trials, seed)?;
    let truth = spec.true_support();
    let k_max = (opts.max_duration / opts.resolution).round() as usize;

    let work: Vec<(u64, usize)> = opts.rates.iter().flat_map(|&r| (0..opts.n_trials).map(move |t| (r, t))).collect();
    let outcomes = par::map(work, |(rate, trial)| -> Result<Option<f64>> {
        let start = data.starts[trial];
        let ok = |k: usize| identifies(&data, &truth, start, rate, k as f64 * opts.resolution, opts.threshold);
        if !ok(k_max)? {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0usize, k_max);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi as f64 * opts.resolution))
    });

    let rates_f: Vec<f64> = opts.rates.iter().map(|&r| r as f64).collect();
    let mut result = SweepResult::new("data-requirement", seed, opts.n_trials)
        .axis("rate", &rates_f)
        .setting("system", spec.name())
        .setting("resolution", opts.resolution)
        .setting("max_duration", opts.max_duration)
        .setting("threshold", opts.threshold);
    let mut summaries = Vec::new();
    let mut it = outcomes.into_iter();
    for &rate in &opts.rates {
        let mut records = Vec::with_capacity(opts.n_trials);
        let mut found = Vec::new();
        for trial in 0..opts.n_trials {
            let phase = data.starts[trial] as f64 / fine as f64;
            match it.next().expect("one outcome per work item")? {
                Some(d) => {
                    found.push(d);
                    records.push(Record::ok(trial, [("duration", d), ("phase", phase)]));
                }
                None => records.push(Record::failed(trial, "not identified within max duration", [("phase", phase)])),
            }
        }
        summaries.push(RequirementSummary {
            rate,
            mean: (!found.is_empty()).then(|| found.iter().sum::<f64>() / found.len() as f64),
            min: found.iter().copied().reduce(f64::min),
            max: found.iter().copied().reduce(f64::max),
            identified: found.len(),
        });
        result.cells.push(Cell::new(&[("rate", rate as f64)], &[("system", spec.name())], records));
    }
    Ok((result, summaries))
}

/// Fraction of random-phase windows of fixed `duration` that identify the system.
pub fn identification_rate(
    spec: &SystemSpec,
    rate: u64,
    duration: f64,
    n_trials: usize,
    seed: u64,
) -> Result<SweepResult> {
    let data = phase_data(spec, rate, 20.0, duration + 0.5, n_trials, seed)?;
    let truth = spec.true_support();
    let outcomes = par::map((0..n_trials).collect(), |t| {
        identifies(&data, &truth, data.starts[t], rate, duration, sindy::DEFAULT_THRESHOLD)
    });
    let mut records = Vec::with_capacity(n_trials);
    for (t, o) in outcomes.into_iter().enumerate() {
        records.push(Record::ok(t, [("identified", if o? { 1.0 } else { 0.0 })]));
    }
    let mut result = SweepResult::new("identification-rate", seed, n_trials)
        .axis("duration", &[duration])
        .setting("system", spec.name())
        .setting("rate", rate);
    result.cells.push(Cell::new(&[("duration", duration), ("rate", rate as f64)], &[("system", spec.name())], records));
    Ok(result)
}

/// Settings for [`burst_vs_uniform_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstOptions {
    pub ratios: Vec<f64>,
    pub n_trials: usize,
    /// Simulation rate, samples per fast period.
    pub fine_rate: u64,
    pub burst_size: usize,
    /// Sampling span in slow periods.
    pub span: f64,
    /// Uniform rates tried, samples per fast period, ascending.
    pub uniform_rates: Vec<u64>,
    /// Burst counts tried, ascending.
    pub burst_counts: Vec<usize>,
    /// Threshold applied to `τ`-scaled derivatives.
    pub threshold: f64,
}

impl Default for BurstOptions {
    fn default() -> Self {
        Self {
            ratios: vec![2.0, 4.0, 8.0, 16.0],
            n_trials: 20,
            fine_rate: 3 << 12,
            burst_size: 8,
            span: 2.0,
            // Half-octave ladder 4, 6, 8, 12, ..., 4096; every rung divides the fine rate.
            uniform_rates: (2..=12).flat_map(|k| [1u64 << k, 3 << (k - 1)]).filter(|&r| r <= 1 << 12).collect(),
            burst_counts: vec![2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512],
            threshold: coupled_threshold(CoupledKind::VdpVdp),
        }
    }
}

/// Default threshold for `τ`-scaled fits: just under the default coupling,
/// the smallest true coefficient.
pub fn coupled_threshold(kind: CoupledKind) -> f64 {
    0.75 * kind.default_coupling()
}

/// Regression on derivatives multiplied by each state's time constant, so a
/// single threshold applies to `τ·ẋ = f(x)` in both blocks.
pub fn fit_time_scaled(pairs: &TrainingPairs, spec: &CoupledSpec, threshold: f64) -> Result<sindy::SparseModel> {
    let n = spec.dimension();
    let tau: Vec<f64> =
        (0..n).map(|j| if spec.fast_range().contains(&j) { spec.tau_fast() } else { spec.tau_slow() }).collect();
    let scaled =
        TrainingPairs { x: pairs.x.clone(), xdot: Mat::from_fn(pairs.len(), n, |i, j| pairs.xdot[(i, j)] * tau[j]) };
    fit_pairs(&scaled, threshold, 3, DEFAULT_MAX_ITER)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Method {
    Uniform,
    Burst,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::Burst => "burst",
        }
    }
}

/// Minimal total sample count identifying a coupled system in every trial,
/// for uniform sampling and for jittered bursts, at each frequency ratio.
///
/// Both methods sample a span of `span` slow periods starting at a random
/// offset. Budget levels are scanned in ascending order; the first level at
/// which all trials succeed is the cell's requirement.
pub fn burst_vs_uniform_sweep(kind: &str, opts: &BurstOptions, seed: u64) -> Result<SweepResult> {
    if opts.ratios.is_empty() || opts.n_trials == 0 {
        return Err(Error::InvalidArgument("need at least one ratio and one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut result = SweepResult::new("burst-vs-uniform", seed, opts.n_trials)
        .axis("ratio", &opts.ratios)
        .setting("kind", kind)
        .setting("burst_size", opts.burst_size)
        .setting("span_slow_periods", opts.span)
        .setting("fine_rate", opts.fine_rate)
        .setting("threshold", opts.threshold);
    for &ratio in &opts.ratios {
        let spec = make_coupled(kind, ratio, None)?;
        let span_fast = opts.span * ratio;
        let series = simulate(
            &spec,
            &spec.default_initial_condition(),
            opts.fine_rate as f64,
            2.0 * span_fast + 0.1,
            10.0 * ratio,
        )?;
        let span_samples = (span_fast * opts.fine_rate as f64).round() as usize;
        let truth = spec.true_support();
        let offsets: Vec<usize> =
            (0..opts.n_trials).map(|_| (rng.random::<f64>() * span_samples as f64).floor() as usize).collect();
        let burst_seeds: Vec<u64> = (0..opts.n_trials).map(|_| rng.random()).collect();
        for method in [Method::Uniform, Method::Burst] {
            let levels: Vec<usize> = match method {
                Method::Uniform => opts.uniform_rates.iter().map(|&r| r as usize).collect(),
                Method::Burst => opts.burst_counts.clone(),
            };
            let trial = |t: usize, level: usize| -> Result<(bool, usize)> {
                let window = series.window(offsets[t], span_samples)?;
                let (schedule, samples) = match method {
                    Method::Uniform => {
                        let idx = uniform_schedule(opts.fine_rate, level as u64, span_fast)?;
                        let n = idx.len();
                        (Schedule::Uniform(idx), n)
                    }
                    Method::Burst => {
                        let span = span_samples as f64 * window.dt();
                        let s = jittered_burst_schedule(span, window.dt(), opts.burst_size, level, burst_seeds[t])?;
                        let n = s.total_samples();
                        (Schedule::Burst(s), n)
                    }
                };
                let pairs = extract_training_pairs(&window, &schedule)?;
                let model = fit_time_scaled(&pairs, &spec, opts.threshold)?;
                Ok((support_matches(&model, &truth)?, samples))
            };
            let mut first_success: Vec<Option<usize>> = vec![None; opts.n_trials];
            let mut requirement = None;
            for &level in &levels {
                let outcomes = par::map((0..opts.n_trials).collect(), |t| trial(t, level));
                let mut all = true;
                let mut samples = 0;
                for (t, o) in outcomes.into_iter().enumerate() {
                    let (ok, n) = match o {
                        Ok(v) => v,
                        Err(Error::InfeasibleSchedule(_)) => (false, 0),
                        Err(e) => return Err(e),
                    };
                    samples = samples.max(n);
                    if ok && first_success[t].is_none() {
                        first_success[t] = Some(n);
                    }
                    all &= ok;
                }
                if all {
                    requirement = Some((level, samples));
                    break;
                }
            }
            let records = (0..opts.n_trials)
                .map(|t| match (requirement, first_success[t]) {
                    (Some((level, samples)), first) => Record::ok(
                        t,
                        [
                            ("samples_required", samples as f64),
                            ("level", level as f64),
                            ("trial_first_success", first.map_or(f64::NAN, |v| v as f64)),
                        ],
                    ),
                    (None, first) => Record::failed(
                        t,
                        "no budget level identified every trial",
                        [("trial_first_success", first.map_or(f64::NAN, |v| v as f64))],
                    ),
                })
                .collect();
            result.cells.push(Cell::new(&[("ratio", ratio)], &[("method", method.name())], records));
        }
    }
    Ok(result)
}
