use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use faer::Mat;
use msd::dynamics::{
    make_coupled, make_system, simulate, simulate_with_substeps, CoupledSpec, Dynamics, SystemSpec, TimeSeries,
};
use msd::harness::{coupled_threshold, fit_time_scaled, rmse, run_experiment, ExperimentConfig, EXPERIMENTS};
use msd::havok::{build_hankel, fit_dmd, HankelConfig};
use msd::multiscale::{combined_predict, iterative_fit, TwoScaleObservable};
use msd::sampling::{extract_training_pairs, jittered_burst_schedule, uniform_schedule, Schedule, DEFAULT_BURST_SIZE};
use msd::sindy::{center_difference, fit_pairs, support_matches, DEFAULT_MAX_ITER, DEFAULT_THRESHOLD};
use serde_json::json;

use crate::config::{RunConfig, Span};
use crate::error::CliError;
use crate::output::{resolve, sibling, write_json, write_series, write_sidecar, write_text};

const DEFAULT_RATE: f64 = 4096.0;
const DEFAULT_TRANSIENT: Span = Span::Periods(10.0);
/// Coarse delay grids still integrate with at least this many steps per period.
const MIN_STEPS: f64 = 1024.0;

/// Experiments whose results depend on random draws.
const STOCHASTIC: [&str; 2] = ["data-requirement", "burst-vs-uniform"];

enum Source {
    Single(SystemSpec),
    Coupled(CoupledSpec),
}

impl Source {
    fn from_config(cfg: &RunConfig) -> Result<Option<Source>, CliError> {
        match (&cfg.system, &cfg.coupled) {
            (Some(_), Some(_)) => Err(CliError::new("invalid_argument", "give either --system or --coupled, not both")),
            (Some(name), None) => {
                let params: Vec<(&str, f64)> = cfg.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                Ok(Some(Source::Single(make_system(name, &params)?)))
            }
            (None, Some(kind)) => {
                if !cfg.params.is_empty() {
                    return Err(CliError::new("invalid_argument", "--param applies to single systems only"));
                }
                let ratio = cfg
                    .ratio
                    .ok_or_else(|| CliError::new("invalid_argument", "--coupled needs the frequency ratio --F"))?;
                Ok(Some(Source::Coupled(make_coupled(kind, ratio, None)?)))
            }
            (None, None) => Ok(None),
        }
    }

    fn dynamics(&self) -> &dyn Dynamics {
        match self {
            Source::Single(s) => s,
            Source::Coupled(c) => c,
        }
    }

    fn label(&self) -> String {
        match self {
            Source::Single(s) => s.name().to_string(),
            Source::Coupled(c) => c.kind().name().to_string(),
        }
    }

    fn t(&self) -> f64 {
        self.dynamics().period()
    }

    fn t_slow(&self) -> Option<f64> {
        match self {
            Source::Single(_) => None,
            Source::Coupled(c) => Some(c.slow_period()),
        }
    }

    fn periods(&self, span: Span) -> Result<f64, CliError> {
        span.periods(self.t(), self.t_slow())
    }

    fn x0(&self) -> Vec<f64> {
        match self {
            Source::Single(s) => s.default_initial_condition(),
            Source::Coupled(c) => c.default_initial_condition(),
        }
    }
}

fn need_source<'a>(source: Option<&'a Source>, what: &str) -> Result<&'a Source, CliError> {
    source.ok_or_else(|| CliError::new("invalid_argument", format!("{what} needs --system or --coupled")))
}

// Model-time length of a span; plain seconds need no system.
fn span_time(span: Span, source: Option<&Source>) -> Result<f64, CliError> {
    match (span, source) {
        (Span::Time(s), _) => Ok(s),
        (_, Some(src)) => Ok(src.periods(span)? * src.t()),
        (_, None) => Err(CliError::new(
            "invalid_argument",
            format!("`{span}` is in periods; name the system with --system or give seconds"),
        )),
    }
}

fn simulate_source(source: &Source, cfg: &RunConfig, periods: Span) -> Result<TimeSeries, CliError> {
    let rate = cfg.rate.unwrap_or(DEFAULT_RATE);
    let n = source.periods(periods)?;
    let transient = source.periods(cfg.transient.unwrap_or(DEFAULT_TRANSIENT))?;
    Ok(simulate(source.dynamics(), &source.x0(), rate, n, transient)?)
}

fn read_series(path: &Path) -> Result<TimeSeries, CliError> {
    let file = File::open(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    Ok(TimeSeries::read_csv(BufReader::new(file))?)
}

fn column_names(source: Option<&Source>, dim: usize) -> Vec<String> {
    match source {
        Some(s) if s.dynamics().dimension() == dim => s.dynamics().variable_names(),
        _ => (1..=dim).map(|j| format!("x{j}")).collect(),
    }
}

fn with_time(names: Vec<String>) -> Vec<String> {
    std::iter::once("t".to_string()).chain(names).collect()
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let source = Source::from_config(cfg)?;
    let source = need_source(source.as_ref(), "simulate")?;
    let series = simulate_source(source, cfg, cfg.periods.unwrap_or(Span::Periods(5.0)))?;
    let path = resolve(cfg.output.as_deref(), &format!("{}.csv", source.label()));
    write_series(&path, cfg, &series, &with_time(column_names(Some(source), series.dim())))?;
    println!("wrote {} rows to {}", series.len(), path.display());
    Ok(())
}

pub fn sindy_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let source = Source::from_config(cfg)?;
    let series = match &cfg.input {
        Some(p) => read_series(p)?,
        None => simulate_source(
            need_source(source.as_ref(), "sindy without --input")?,
            cfg,
            cfg.periods.or(cfg.span).unwrap_or(Span::Periods(1.0)),
        )?,
    };
    let coupled = match &source {
        Some(Source::Coupled(spec)) if spec.dimension() == series.dim() => Some(spec),
        _ => None,
    };
    let threshold = cfg.threshold.unwrap_or_else(|| coupled.map_or(DEFAULT_THRESHOLD, |c| coupled_threshold(c.kind())));
    let degree = cfg.degree.unwrap_or(3);
    let label = source.as_ref().map_or("series".to_string(), Source::label);
    let path = resolve(cfg.output.as_deref(), &format!("{label}-sindy.json"));

    let mut schedule_file = None;
    let pairs = if let Some(n_bursts) = cfg.bursts {
        let seed = cfg.require_seed("burst sampling")?;
        let span = match cfg.span {
            Some(s) => span_time(s, source.as_ref())?,
            None => series.len() as f64 * series.dt(),
        };
        let schedule =
            jittered_burst_schedule(span, series.dt(), cfg.burst_size.unwrap_or(DEFAULT_BURST_SIZE), n_bursts, seed)?;
        let schedule_path = sibling(&path, ".schedule.json");
        write_json(&schedule_path, cfg, "schedule", &schedule)?;
        schedule_file = Some(schedule_path);
        extract_training_pairs(&series, &Schedule::Burst(schedule))?
    } else if let Some(target) = cfg.target_rate {
        let fine = match (&cfg.input, cfg.rate) {
            (None, rate) => rate.unwrap_or(DEFAULT_RATE),
            (Some(_), Some(rate)) => rate,
            (Some(_), None) => {
                return Err(CliError::new("invalid_argument", "--target-rate on a CSV input needs its --rate"));
            }
        };
        let fine_int = fine as u64;
        if fine_int as f64 != fine {
            return Err(CliError::new("invalid_argument", format!("--rate {fine} must be an integer to subsample")));
        }
        let duration = series.len() as f64 / fine;
        let idx = uniform_schedule(fine_int, target, duration)?;
        extract_training_pairs(&series, &Schedule::Uniform(idx))?
    } else {
        center_difference(&series)?
    };

    // Coupled blocks are fitted as τ·ẋ = f(x) so one threshold suits both time scales.
    let model = match coupled {
        Some(spec) if degree == 3 => fit_time_scaled(&pairs, spec, threshold)?,
        Some(_) => return Err(CliError::new("invalid_argument", "coupled fits use the cubic library (--degree 3)")),
        None => fit_pairs(&pairs, threshold, degree, DEFAULT_MAX_ITER)?,
    };
    let names = column_names(source.as_ref(), series.dim());
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let equations = model.equations(&name_refs);
    let truth = source
        .as_ref()
        .map(|s| s.dynamics())
        .filter(|d| d.dimension() == series.dim() && degree == 3)
        .map(|d| d.true_support());
    let matched = truth.as_ref().map(|t| support_matches(&model, t)).transpose()?;

    let mut report = format!(
        "SINDy fit: {} training rows, threshold {threshold}, degree {degree}, {} nonzero terms{}\n",
        pairs.len(),
        model.nonzero_count(),
        if coupled.is_some() { " (time-scaled: coefficients of τ·dx/dt)" } else { "" }
    );
    for eq in &equations {
        report.push_str(&format!("  {eq}\n"));
    }
    match matched {
        Some(m) => report.push_str(&format!("support matches {label}: {m}\n")),
        None => report.push_str("support match: no ground truth for this input\n"),
    }
    print!("{report}");
    write_text(&sibling(&path, ".report.txt"), &report)?;
    write_json(&path, cfg, "result", &json!({ "model": model, "equations": equations, "support_match": matched }))?;
    println!("wrote {}", path.display());
    if let Some(p) = schedule_file {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn two_column(t0: f64, dt: f64, a: &[f64], b: &[f64]) -> Result<TimeSeries, CliError> {
    let values = Mat::from_fn(a.len(), 2, |i, j| if j == 0 { a[i] } else { b[i] });
    Ok(TimeSeries::new(t0, dt, values)?)
}

pub fn havok_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.iterative.unwrap_or(false) {
        return iterative_cmd(cfg);
    }
    let source = Source::from_config(cfg)?;
    let q = cfg.q.unwrap_or(128);
    let rank = cfg.rank.unwrap_or(24);
    let (d, c) = (cfg.d.unwrap_or(1), cfg.c.unwrap_or(1));
    let component = cfg.component.unwrap_or(0);
    let train_span = cfg.periods.unwrap_or(Span::Periods(5.0));
    let test_span = cfg.predict.unwrap_or(Span::Periods(2.0));

    let full = match &cfg.input {
        Some(p) => read_series(p)?,
        None => {
            let src = need_source(source.as_ref(), "havok without --input")?;
            let rate = cfg.rate.unwrap_or(((q.max(2) - 1) * d) as f64);
            let total = src.periods(train_span)? + src.periods(test_span)?;
            let transient = src.periods(cfg.transient.unwrap_or(DEFAULT_TRANSIENT))?;
            let substeps = (MIN_STEPS / rate).ceil().max(1.0) as usize;
            simulate_with_substeps(src.dynamics(), &src.x0(), rate, total, transient, substeps)?
        }
    };
    if component >= full.dim() {
        return Err(CliError::new(
            "invalid_argument",
            format!("component {component} out of range for {} columns", full.dim()),
        ));
    }
    let series = full.select(&[component])?;
    let dt = series.dt();
    let train_len = ((span_time(train_span, source.as_ref())? / dt).round() as usize).min(series.len());
    let test_len = ((span_time(test_span, source.as_ref())? / dt).round() as usize).min(series.len() - train_len);
    let train = series.window(0, train_len)?;
    let hankel = if d == 1 && c == 1 { HankelConfig::standard(q, dt)? } else { HankelConfig::spaced(q, d, c, dt)? };
    let pair = build_hankel(&train, &hankel)?;
    let model = fit_dmd(&pair, rank)?.stabilize();

    let record = series.window(0, train_len + test_len)?;
    let pred = model.predict(&record.times());
    let pred = pred.col_as_slice(0);
    let truth = record.column(0);
    let train_rmse = rmse(&pred[..train_len], &truth[..train_len], true)?;
    let test_rmse = if test_len > 0 { Some(rmse(&pred[train_len..], &truth[train_len..], true)?) } else { None };

    let label = source.as_ref().map_or("series".to_string(), Source::label);
    let path = resolve(cfg.output.as_deref(), &format!("{label}-havok.json"));
    write_json(
        &path,
        cfg,
        "result",
        &json!({
            "model": model,
            "hankel": hankel,
            "numel": pair.numel(),
            "train_rmse": train_rmse,
            "test_rmse": test_rmse,
            "train_samples": train_len,
        }),
    )?;
    let csv = sibling(&path, ".prediction.csv");
    write_series(
        &csv,
        cfg,
        &two_column(record.t0(), dt, pred, &truth)?,
        &["t".into(), "prediction".into(), "truth".into()],
    )?;
    println!(
        "rank {rank}, q {q}, d {d}, c {c}: train rmse {train_rmse:.4e}{}",
        test_rmse.map_or(String::new(), |e| format!(", test rmse {e:.4e}"))
    );
    println!("wrote {} and {}", path.display(), csv.display());
    Ok(())
}

fn iterative_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let ratio = cfg.ratio.unwrap_or(20.0);
    let rank = cfg.rank.unwrap_or(50);
    let q = cfg.q.unwrap_or(128);
    let (summed, t_fast) = match &cfg.input {
        Some(p) => {
            let series = read_series(p)?.select(&[cfg.component.unwrap_or(0)])?;
            let t_fast = cfg
                .t_fast
                .ok_or_else(|| CliError::new("invalid_argument", "--iterative on a CSV input needs --t-fast"))?;
            (series, t_fast)
        }
        None => {
            let obs = TwoScaleObservable::van_der_pol_pair(ratio, 128.0, 6.0)?;
            (obs.summed, obs.t_fast)
        }
    };
    let model = iterative_fit(&summed, t_fast, ratio, rank, rank, q)?;
    let train_len = ((5.0 * ratio * t_fast / summed.dt()).round() as usize).min(summed.len());
    let test = summed.window(train_len, summed.len() - train_len)?;
    let pred = combined_predict(&model, &test.times());
    let truth = test.column(0);
    let test_rmse = if test.is_empty() { None } else { Some(rmse(&pred, &truth, true)?) };

    let path = resolve(cfg.output.as_deref(), &format!("iterative-F{ratio}.json"));
    write_json(&path, cfg, "result", &json!({ "model": model, "test_rmse": test_rmse }))?;
    if !test.is_empty() {
        let csv = sibling(&path, ".prediction.csv");
        write_series(
            &csv,
            cfg,
            &two_column(test.t0(), test.dt(), &pred, &truth)?,
            &["t".into(), "prediction".into(), "truth".into()],
        )?;
        println!("wrote {}", csv.display());
    }
    println!(
        "drift fraction {:.4}, offset {:.4}{}",
        model.drift_fraction,
        model.constant_offset,
        test_rmse.map_or(String::new(), |e| format!(", held-out rmse {e:.4e}"))
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn sweep_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let name = cfg.experiment.as_deref().ok_or_else(|| {
        CliError::new("usage", "sweep needs an experiment name; usage: msd sweep <EXPERIMENT> [OPTIONS]")
    })?;
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::new(
            "unknown_experiment",
            format!(
                "unknown experiment `{name}` (expected one of {}); usage: msd sweep <EXPERIMENT> [OPTIONS]",
                EXPERIMENTS.join(", ")
            ),
        ));
    }
    let seed = if STOCHASTIC.contains(&name) {
        cfg.require_seed(&format!("experiment {name}"))?
    } else {
        cfg.seed.unwrap_or(0)
    };
    let exp = ExperimentConfig {
        system: cfg.system.clone(),
        kind: cfg.kind.clone(),
        rates: cfg.rates.clone(),
        ratios: cfg.ratios.clone(),
        ranks: cfg.ranks.clone(),
        delays: cfg.delays.clone(),
        trials: cfg.trials,
        rank: cfg.rank,
        q: cfg.q,
        seed,
    };
    eprintln!("sweep {name}: running (seed {seed})");
    let start = Instant::now();
    let result = run_experiment(name, &exp)?;
    let failed = result.cells.iter().filter(|c| !c.all_succeeded()).count();
    eprintln!(
        "sweep {name}: {} cells, {failed} with failed trials, {:.1} s",
        result.cells.len(),
        start.elapsed().as_secs_f64()
    );
    let dir = resolve(cfg.output.as_deref(), "");
    let json_path = dir.join(format!("{name}.json"));
    write_json(&json_path, cfg, "result", &result)?;
    let csv_path = dir.join(format!("{name}.csv"));
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    write_text(&csv_path, &String::from_utf8_lossy(&csv))?;
    let header = String::from_utf8_lossy(&csv).lines().next().unwrap_or_default().to_string();
    write_sidecar(&csv_path, cfg, &header.split(',').map(str::to_string).collect::<Vec<_>>())?;
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}
