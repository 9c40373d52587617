//! Parameter sweeps over the identification and delay-model pipelines.
//!
//! Every experiment returns a [`SweepResult`]: a list of grid cells, each
//! holding exactly `n_trials` records. Trials run in parallel but are merged
//! in cell/trial order, and all randomness is drawn from one seeded stream
//! before the parallel section, so a rerun with the same seed is
//! byte-identical.

mod delay;
mod identification;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use delay::{
    delay_mode_report, gallery, iterative_study, large_dt_baseline, rank_delay_study, spacing_tradeoff_sweep,
    DelayData, GalleryEntry, IterativeReport, SpacingOptions, GALLERY,
};
pub use identification::{
    burst_vs_uniform_sweep, coupled_threshold, data_requirement_sweep, fit_time_scaled, identification_rate,
    BurstOptions, RequirementOptions, RequirementSummary,
};

/// One trial's outcome in a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub trial: usize,
    /// Finite metrics keyed by name.
    pub metrics: BTreeMap<String, f64>,
    /// Set when the trial could not produce its metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed: Option<String>,
}

impl Record {
    pub fn ok(trial: usize, metrics: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        let metrics: BTreeMap<String, f64> = metrics.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let failed = metrics.iter().find(|(_, v)| !v.is_finite()).map(|(k, _)| format!("non-finite {k}"));
        let metrics = metrics.into_iter().filter(|(_, v)| v.is_finite()).collect();
        Self { trial, metrics, failed }
    }

    pub fn failed(
        trial: usize,
        reason: impl Into<String>,
        metrics: impl IntoIterator<Item = (&'static str, f64)>,
    ) -> Self {
        let mut r = Self::ok(trial, metrics);
        r.failed = Some(reason.into());
        r
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

/// A grid point and its trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Numeric coordinates on the sweep axes.
    pub params: BTreeMap<String, f64>,
    /// Categorical coordinates (method, system, model variant).
    pub labels: BTreeMap<String, String>,
    pub records: Vec<Record>,
}

impl Cell {
    pub fn new(params: &[(&str, f64)], labels: &[(&str, &str)], records: Vec<Record>) -> Self {
        Self {
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            labels: labels.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            records,
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn label(&self, name: &str) -> Option<&str> {
        self.labels.get(name).map(String::as_str)
    }

    /// Values of one metric over the successful trials.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.metric(metric)).collect()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        let v = self.values(metric);
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn all_succeeded(&self) -> bool {
        self.records.iter().all(|r| r.failed.is_none())
    }
}

/// Persistable output of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub n_trials: usize,
    /// Grid values per axis, in sweep order.
    pub axes: BTreeMap<String, Vec<f64>>,
    pub cells: Vec<Cell>,
    /// Free-form run settings echoed for provenance.
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
}

impl SweepResult {
    pub fn new(experiment: &str, seed: u64, n_trials: usize) -> Self {
        Self {
            experiment: experiment.to_string(),
            version: crate::VERSION.to_string(),
            seed,
            n_trials,
            axes: BTreeMap::new(),
            cells: Vec::new(),
            settings: BTreeMap::new(),
        }
    }

    pub fn axis(mut self, name: &str, values: &[f64]) -> Self {
        self.axes.insert(name.to_string(), values.to_vec());
        self
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Self {
        self.settings.insert(key.to_string(), value.to_string());
        self
    }

    /// Every cell has `n_trials` records and every kept metric is finite.
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.cells.iter().enumerate() {
            if c.records.len() != self.n_trials {
                return Err(Error::InvalidArgument(format!(
                    "cell {i} has {} records, expected {}",
                    c.records.len(),
                    self.n_trials
                )));
            }
            if c.records.iter().any(|r| r.metrics.values().any(|v| !v.is_finite())) {
                return Err(Error::InvalidArgument(format!("cell {i} holds a non-finite metric")));
            }
        }
        Ok(())
    }

    /// First cell matching all the given labels and params.
    pub fn find(&self, labels: &[(&str, &str)], params: &[(&str, f64)]) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            labels.iter().all(|(k, v)| c.label(k) == Some(*v)) && params.iter().all(|(k, v)| c.param(k) == Some(*v))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// One row per cell × trial; columns are the union of labels, params and
    /// metrics across the sweep, in sorted order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut labels = std::collections::BTreeSet::new();
        let mut params = std::collections::BTreeSet::new();
        let mut metrics = std::collections::BTreeSet::new();
        for c in &self.cells {
            labels.extend(c.labels.keys().cloned());
            params.extend(c.params.keys().cloned());
            for r in &c.records {
                metrics.extend(r.metrics.keys().cloned());
            }
        }
        let mut header = vec!["experiment".to_string(), "cell".into(), "trial".into()];
        header.extend(labels.iter().cloned());
        header.extend(params.iter().cloned());
        header.extend(metrics.iter().cloned());
        header.push("failed".into());
        writeln!(w, "{}", header.join(","))?;
        for (i, c) in self.cells.iter().enumerate() {
            for r in &c.records {
                let mut row = vec![self.experiment.clone(), i.to_string(), r.trial.to_string()];
                row.extend(labels.iter().map(|k| c.labels.get(k).cloned().unwrap_or_default()));
                row.extend(params.iter().map(|k| c.params.get(k).map(|v| format!("{v:?}")).unwrap_or_default()));
                row.extend(metrics.iter().map(|k| r.metrics.get(k).map(|v| format!("{v:?}")).unwrap_or_default()));
                row.push(r.failed.clone().unwrap_or_default().replace(',', ";"));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`; returns both paths.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&json, self.to_json()?)?;
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(&csv, buf)?;
        Ok((json, csv))
    }
}

/// Root-mean-square error; `normalize` divides by the RMS of `truth`.
pub fn rmse(pred: &[f64], truth: &[f64], normalize: bool) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!("prediction has {} samples, truth {}", pred.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("empty series".into()));
    }
    let m = truth.len() as f64;
    let err = (pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / m).sqrt();
    if !normalize {
        return Ok(err);
    }
    let scale = (truth.iter().map(|t| t * t).sum::<f64>() / m).sqrt();
    if scale == 0.0 {
        return Err(Error::InvalidArgument("cannot normalize by an all-zero truth".into()));
    }
    Ok(err / scale)
}

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: [&str; 6] =
    ["data-requirement", "burst-vs-uniform", "spacing-tradeoff", "rank-delay", "iterative", "gallery"];

/// Settings for [`run_experiment`]; unset fields take each experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: Option<String>,
    pub kind: Option<String>,
    pub rates: Option<Vec<u64>>,
    pub ratios: Option<Vec<f64>>,
    pub ranks: Option<Vec<usize>>,
    pub delays: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub rank: Option<usize>,
    pub q: Option<usize>,
    pub seed: u64,
}

/// Dispatches a named experiment.
pub fn run_experiment(name: &str, cfg: &ExperimentConfig) -> Result<SweepResult> {
    let system = cfg.system.as_deref().unwrap_or("lorenz");
    match name {
        "data-requirement" => {
            let spec = crate::dynamics::make_system(system, &[])?;
            let mut opts = RequirementOptions::default();
            if let Some(r) = &cfg.rates {
                opts.rates = r.clone();
            }
            if let Some(t) = cfg.trials {
                opts.n_trials = t;
            }
            data_requirement_sweep(&spec, &opts, cfg.seed).map(|(r, _)| r)
        }
        "burst-vs-uniform" => {
            let mut opts = BurstOptions::default();
            if let Some(f) = &cfg.ratios {
                opts.ratios = f.clone();
            }
            if let Some(t) = cfg.trials {
                opts.n_trials = t;
            }
            burst_vs_uniform_sweep(cfg.kind.as_deref().unwrap_or("vdp-vdp"), &opts, cfg.seed)
        }
        "spacing-tradeoff" => {
            let mut opts = SpacingOptions::default();
            if let Some(f) = &cfg.ratios {
                opts.ratios = f.clone();
            }
            if let Some(r) = cfg.rank {
                opts.rank = r;
            }
            if let Some(q) = cfg.q {
                opts.q = q;
            }
            spacing_tradeoff_sweep(&opts, cfg.seed)
        }
        "rank-delay" => {
            let spec = crate::dynamics::make_system(cfg.system.as_deref().unwrap_or("vanderpol"), &[])?;
            let ranks = cfg.ranks.clone().unwrap_or_else(|| vec![2, 8, 32]);
            let delays = cfg.delays.clone().unwrap_or_else(|| vec![8, 64]);
            rank_delay_study(&spec, &ranks, &delays)
        }
        "iterative" => {
            let ratio = cfg.ratios.as_ref().and_then(|f| f.first().copied()).unwrap_or(20.0);
            let rank = cfg.rank.unwrap_or(50);
            iterative_study(ratio, rank, cfg.q.unwrap_or(128)).map(|r| r.sweep)
        }
        "gallery" => gallery(cfg.q.unwrap_or(128)),
        other => Err(Error::UnknownExperiment(other.to_string())),
    }
}
