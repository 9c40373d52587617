use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A duration in fast periods (`5`, `5T`), slow periods (`2Tslow`) or model time (`57.25s`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Span {
    Periods(f64),
    SlowPeriods(f64),
    Time(f64),
}

impl Span {
    /// Length in fast periods given the fast period and, if any, the slow one.
    pub fn periods(self, t: f64, t_slow: Option<f64>) -> Result<f64, CliError> {
        let p = match self {
            Span::Periods(n) => n,
            Span::Time(s) => s / t,
            Span::SlowPeriods(n) => {
                let ts = t_slow.ok_or_else(|| {
                    CliError::new("invalid_argument", format!("`{self}` needs a system with a slow period"))
                })?;
                n * ts / t
            }
        };
        Ok(p)
    }
}

impl FromStr for Span {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        let (num, make): (&str, fn(f64) -> Span) = if let Some(n) = s.strip_suffix("Tslow") {
            (n, Span::SlowPeriods)
        } else if let Some(n) = s.strip_suffix('T') {
            (n, Span::Periods)
        } else if let Some(n) = s.strip_suffix('s') {
            (n, Span::Time)
        } else {
            (s, Span::Periods)
        };
        match num.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(make(v)),
            _ => Err(CliError::new(
                "invalid_argument",
                format!("cannot read duration `{s}` (use e.g. 5, 5T, 2Tslow or 12.5s)"),
            )),
        }
    }
}

impl TryFrom<String> for Span {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<Span> for String {
    fn from(s: Span) -> String {
        s.to_string()
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Span::Periods(n) => write!(f, "{n}T"),
            Span::SlowPeriods(n) => write!(f, "{n}Tslow"),
            Span::Time(s) => write!(f, "{s}s"),
        }
    }
}

/// Everything that determines a run. Command-line flags override values
/// read from a config file; the merged result is echoed into every output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupled: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rate: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bursts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterative: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_fast: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $(if $top.$field.is_some() { $base.$field = $top.$field; })*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::new("invalid_config", e.to_string()))
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// `self` with every value set in `top` replaced by it.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(self, top;
            command, system, coupled, ratio, rate, periods, transient, input, output,
            threshold, degree, target_rate, burst_size, bursts, span,
            component, q, d, c, rank, predict, iterative, t_fast,
            experiment, kind, ratios, rates, ranks, delays, trials, seed,
        );
        self.params.extend(top.params);
        self
    }

    pub fn require_seed(&self, why: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::new("missing_seed", format!("{why} is stochastic; pass --seed")))
    }
}

/// Parses `name=value` parameter overrides.
pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("parameter `{k}` has non-numeric value `{v}`"))?;
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_parse_and_print() {
        assert_eq!("5".parse::<Span>().unwrap(), Span::Periods(5.0));
        assert_eq!("2.5T".parse::<Span>().unwrap(), Span::Periods(2.5));
        assert_eq!("2Tslow".parse::<Span>().unwrap(), Span::SlowPeriods(2.0));
        assert_eq!("12.5s".parse::<Span>().unwrap(), Span::Time(12.5));
        assert!("fast".parse::<Span>().is_err());
        assert!("-1T".parse::<Span>().is_err());
        for s in ["5T", "2Tslow", "0.25s"] {
            assert_eq!(s.parse::<Span>().unwrap().to_string(), s);
        }
        assert_eq!(Span::SlowPeriods(2.0).periods(1.0, Some(8.0)).unwrap(), 16.0);
        assert!(Span::SlowPeriods(2.0).periods(1.0, None).is_err());
        assert_eq!(Span::Time(3.0).periods(1.5, None).unwrap(), 2.0);
    }

    #[test]
    fn flags_override_file_values() {
        let file = RunConfig {
            system: Some("lorenz".into()),
            rate: Some(1024.0),
            params: [("rho".to_string(), 28.0)].into(),
            ..Default::default()
        };
        let flags = RunConfig { rate: Some(4096.0), params: [("rho".to_string(), 160.0)].into(), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.system.as_deref(), Some("lorenz"));
        assert_eq!(merged.rate, Some(4096.0));
        assert_eq!(merged.params["rho"], 160.0);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let cfg = RunConfig {
            command: Some("havok".into()),
            system: Some("vanderpol".into()),
            periods: Some(Span::SlowPeriods(2.0)),
            ratios: Some(vec![2.0, 4.0]),
            threshold: Some(0.1),
            seed: Some(7),
            ..Default::default()
        };
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let err = RunConfig::from_json(r#"{"sytem": "lorenz"}"#).unwrap_err();
        assert!(err.message.contains("sytem"), "{}", err.message);
    }
}
