//! `msd`: simulate benchmark systems, fit SINDy and HAVOK models, and run sweeps.
//!
//! Every run is fully described by a [`RunConfig`]; a `--config` file supplies
//! defaults and flags override it. The merged config is echoed into each output.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{parse_param, RunConfig, Span};
use error::CliError;

#[derive(Parser)]
#[command(name = "msd", version, about = "Data-driven discovery of multiscale dynamical systems")]
struct Cli {
    /// JSON run configuration; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a benchmark or coupled system and write a CSV.
    Simulate(SimulateArgs),
    /// Fit a sparse polynomial model.
    Sindy(SindyArgs),
    /// Fit a time-delay DMD model and predict ahead.
    Havok(HavokArgs),
    /// Run a named parameter sweep.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Benchmark system: lorenz, duffing, vanderpol or rossler.
    #[arg(long)]
    system: Option<String>,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Coupled pair: vdp-vdp, slowvdp-fastlorenz or fastvdp-slowlorenz.
    #[arg(long)]
    coupled: Option<String>,
    /// Timescale ratio of a coupled pair.
    #[arg(long = "F", visible_alias = "ratio", value_name = "F")]
    ratio: Option<f64>,
    /// Samples per fast period.
    #[arg(long)]
    rate: Option<f64>,
    /// Recorded duration: 5, 5T, 2Tslow or 12.5s.
    #[arg(long)]
    periods: Option<Span>,
    /// Discarded lead-in, same units as --periods.
    #[arg(long)]
    transient: Option<Span>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (sweep: directory). Defaults to $MSD_OUTPUT_DIR or the working directory.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Random seed; required by stochastic operations.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SindyArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Read a CSV written by `msd simulate` instead of simulating.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sparsity threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Largest monomial degree in the library.
    #[arg(long)]
    degree: Option<u32>,
    /// Uniform subsampling rate (samples per period).
    #[arg(long)]
    target_rate: Option<u64>,
    /// Number of bursts for burst sampling.
    #[arg(long)]
    bursts: Option<usize>,
    /// Samples per burst.
    #[arg(long)]
    burst_size: Option<usize>,
    /// Window the bursts are placed in.
    #[arg(long)]
    span: Option<Span>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct HavokArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Observed state component.
    #[arg(long)]
    component: Option<usize>,
    /// Delays per column.
    #[arg(long)]
    q: Option<usize>,
    /// Row spacing in fine steps.
    #[arg(long)]
    d: Option<usize>,
    /// Column spacing in fine steps.
    #[arg(long)]
    c: Option<usize>,
    /// Truncation rank.
    #[arg(long)]
    rank: Option<usize>,
    /// Prediction horizon after the training record.
    #[arg(long)]
    predict: Option<Span>,
    /// Fit fast and slow models in turn on a two-timescale signal.
    #[arg(long)]
    iterative: bool,
    /// Fast period of a CSV input for --iterative.
    #[arg(long)]
    t_fast: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment name.
    experiment: Option<String>,
    #[arg(long)]
    system: Option<String>,
    /// Coupled pair for multiscale experiments.
    #[arg(long)]
    kind: Option<String>,
    /// Timescale ratios, comma separated.
    #[arg(long = "F", visible_alias = "ratio", value_delimiter = ',', value_name = "F")]
    ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    rates: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    delays: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl SystemArgs {
    fn into_config(self, cfg: &mut RunConfig) {
        cfg.system = self.system;
        cfg.params = self.params.into_iter().collect();
        cfg.coupled = self.coupled;
        cfg.ratio = self.ratio;
        cfg.rate = self.rate;
        cfg.periods = self.periods;
        cfg.transient = self.transient;
    }
}

impl OutputArgs {
    fn into_config(self, cfg: &mut RunConfig) {
        cfg.output = self.output;
        cfg.seed = self.seed;
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sindy(_) => "sindy",
            Command::Havok(_) => "havok",
            Command::Sweep(_) => "sweep",
        }
    }

    /// Only the flags actually given; everything else stays `None` so a config file can fill it.
    fn into_config(self) -> RunConfig {
        let mut cfg = RunConfig { command: Some(self.name().to_string()), ..Default::default() };
        match self {
            Command::Simulate(a) => {
                a.system.into_config(&mut cfg);
                a.out.into_config(&mut cfg);
            }
            Command::Sindy(a) => {
                a.system.into_config(&mut cfg);
                a.out.into_config(&mut cfg);
                cfg.input = a.input;
                cfg.threshold = a.threshold;
                cfg.degree = a.degree;
                cfg.target_rate = a.target_rate;
                cfg.bursts = a.bursts;
                cfg.burst_size = a.burst_size;
                cfg.span = a.span;
            }
            Command::Havok(a) => {
                a.system.into_config(&mut cfg);
                a.out.into_config(&mut cfg);
                cfg.input = a.input;
                cfg.component = a.component;
                cfg.q = a.q;
                cfg.d = a.d;
                cfg.c = a.c;
                cfg.rank = a.rank;
                cfg.predict = a.predict;
                cfg.iterative = a.iterative.then_some(true);
                cfg.t_fast = a.t_fast;
            }
            Command::Sweep(a) => {
                a.out.into_config(&mut cfg);
                cfg.experiment = a.experiment;
                cfg.system = a.system;
                cfg.kind = a.kind;
                cfg.ratios = non_empty(a.ratios);
                cfg.rates = non_empty(a.rates);
                cfg.ranks = non_empty(a.ranks);
                cfg.delays = non_empty(a.delays);
                cfg.trials = a.trials;
                cfg.rank = a.rank;
                cfg.q = a.q;
            }
        }
        cfg
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let flags = cli.command.into_config();
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::new("invalid_config", format!("{}: {e}", path.display())))?;
            let file = RunConfig::from_json(&text)?;
            if let (Some(a), Some(b)) = (&file.command, &flags.command) {
                if a != b {
                    return Err(CliError::new(
                        "invalid_config",
                        format!("config file is for `{a}` but the command is `{b}`"),
                    ));
                }
            }
            file.overlay(flags)
        }
        None => flags,
    };
    match cfg.command.as_deref() {
        Some("simulate") => commands::simulate_cmd(&cfg),
        Some("sindy") => commands::sindy_cmd(&cfg),
        Some("havok") => commands::havok_cmd(&cfg),
        _ => commands::sweep_cmd(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    ExitCode::from(2)
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().next().unwrap_or("invalid arguments");
                    let first = first.strip_prefix("error: ").unwrap_or(first);
                    eprintln!("error: usage: {first} (see `msd --help`)");
                    ExitCode::from(2)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
