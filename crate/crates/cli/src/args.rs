use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use treerecon::chain::{hardcore_channel, w_of_lambda};
use treerecon::threshold::{Engine, FamilyKind};
use treerecon::BinaryChannel;

use crate::error::CliError;

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "TREERECON_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "treerecon", version, about = "Reconstruction on trees: bounds, density evolution and thresholds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Bounds,
    Evolve,
    Threshold,
    Couple,
    HardcoreCheck,
    Verify,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form bounds and thresholds for a channel family.
    Bounds(RunArgs),
    /// Diagnostic-versus-depth curve of one channel.
    Evolve(RunArgs),
    /// Bisection estimate of the reconstruction threshold of a family.
    Threshold(RunArgs),
    /// Monotone coupling of the two conditional laws at one depth.
    Couple(RunArgs),
    /// Gibbs and independence checks of a hard-core broadcast.
    HardcoreCheck(RunArgs),
    /// Runs the invariant checks and reports each one.
    Verify(RunArgs),
}

impl Command {
    pub fn split(self) -> (CommandName, RunArgs) {
        match self {
            Command::Bounds(a) => (CommandName::Bounds, a),
            Command::Evolve(a) => (CommandName::Evolve, a),
            Command::Threshold(a) => (CommandName::Threshold, a),
            Command::Couple(a) => (CommandName::Couple, a),
            Command::HardcoreCheck(a) => (CommandName::HardcoreCheck, a),
            Command::Verify(a) => (CommandName::Verify, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Exact,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
#[command(group(
    ArgGroup::new("channel_spec")
        .args(["symmetric", "hardcore", "hardcore_w", "hardcore_lambda", "matrix", "channel"])
        .multiple(false)
))]
pub struct RunArgs {
    /// Symmetric channel with flip probability EPS, or the symmetric family
    /// when no value is given.
    #[arg(long, num_args = 0..=1, value_name = "EPS")]
    pub symmetric: Option<Option<f64>>,
    /// The hard-core family.
    #[arg(long)]
    pub hardcore: bool,
    #[arg(long, value_name = "W")]
    pub hardcore_w: Option<f64>,
    #[arg(long, value_name = "LAMBDA")]
    pub hardcore_lambda: Option<f64>,
    /// First column of the transition matrix.
    #[arg(long, num_args = 2, value_names = ["P00", "P10"])]
    pub matrix: Option<Vec<f64>>,
    /// Transition matrix as `P00 P10` or `P00 P01 P10 P11`.
    #[arg(long, num_args = 2..=4, value_name = "P")]
    pub channel: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    #[arg(long)]
    pub pop_size: Option<usize>,
    /// Grid size of the exact engine; 0 is strict convolution.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Broadcast samples for the independence check.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChannelSpec {
    SymmetricFamily,
    Symmetric { eps: f64 },
    HardcoreFamily,
    HardcoreW { w: f64 },
    HardcoreLambda { lambda: f64 },
    Matrix { p00: f64, p01: f64, p10: f64, p11: f64 },
}

impl ChannelSpec {
    pub fn channel(&self, k: u32) -> Result<BinaryChannel, CliError> {
        Ok(match *self {
            ChannelSpec::Symmetric { eps } => BinaryChannel::symmetric(eps)?,
            ChannelSpec::HardcoreW { w } => hardcore_channel(w, k)?.0,
            ChannelSpec::HardcoreLambda { lambda } => hardcore_channel(w_of_lambda(lambda, k)?, k)?.0,
            ChannelSpec::Matrix { p00, p01, p10, p11 } => BinaryChannel::from_matrix(p00, p01, p10, p11)?,
            ChannelSpec::SymmetricFamily | ChannelSpec::HardcoreFamily => {
                return Err(CliError::Usage(
                    "this command needs one channel: --symmetric EPS, --hardcore-w, --hardcore-lambda, --matrix or --channel".into(),
                ))
            }
        })
    }

    pub fn family(&self) -> Result<FamilyKind, CliError> {
        match self {
            ChannelSpec::SymmetricFamily | ChannelSpec::Symmetric { .. } => Ok(FamilyKind::Symmetric),
            ChannelSpec::HardcoreFamily | ChannelSpec::HardcoreW { .. } | ChannelSpec::HardcoreLambda { .. } => {
                Ok(FamilyKind::Hardcore)
            }
            ChannelSpec::Matrix { .. } => Err(CliError::Usage(
                "an explicit matrix is not a channel family; use --symmetric or --hardcore".into(),
            )),
        }
    }
}

/// Everything that determines a run's output. Written into every output so
/// that the run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub channel: Option<ChannelSpec>,
    pub k: u32,
    pub depth: Option<usize>,
    pub engine: Option<Engine>,
    pub seed: u64,
    pub out: Option<String>,
    pub format: Format,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
}

fn channel_spec(a: &RunArgs) -> Result<Option<ChannelSpec>, CliError> {
    if let Some(eps) = a.symmetric {
        return Ok(Some(eps.map_or(ChannelSpec::SymmetricFamily, |eps| ChannelSpec::Symmetric { eps })));
    }
    if a.hardcore {
        return Ok(Some(ChannelSpec::HardcoreFamily));
    }
    if let Some(w) = a.hardcore_w {
        return Ok(Some(ChannelSpec::HardcoreW { w }));
    }
    if let Some(lambda) = a.hardcore_lambda {
        return Ok(Some(ChannelSpec::HardcoreLambda { lambda }));
    }
    let m = a.matrix.as_ref().or(a.channel.as_ref());
    match m.map(Vec::as_slice) {
        None => Ok(None),
        Some(&[p00, p10]) => Ok(Some(ChannelSpec::Matrix { p00, p01: 1.0 - p00, p10, p11: 1.0 - p10 })),
        Some(&[p00, p01, p10, p11]) => Ok(Some(ChannelSpec::Matrix { p00, p01, p10, p11 })),
        Some(v) => Err(CliError::Usage(format!("a channel takes 2 or 4 entries, got {}", v.len()))),
    }
}

fn engine(a: &RunArgs, default: EngineKind, default_bins: usize) -> Engine {
    match a.engine.unwrap_or(default) {
        EngineKind::Exact => Engine::Exact { bins: a.bins.unwrap_or(default_bins) },
        EngineKind::Population => Engine::Population { n: a.pop_size.unwrap_or(100_000) },
    }
}

impl RunConfig {
    /// Fills in the per-command defaults.
    pub fn resolve(command: CommandName, a: &RunArgs) -> Result<Self, CliError> {
        let channel = channel_spec(a)?;
        let format = a.format.unwrap_or(if command == CommandName::Evolve { Format::Csv } else { Format::Json });
        if format == Format::Csv && command != CommandName::Evolve {
            return Err(CliError::Usage("csv output is only offered for evolve curves".into()));
        }
        let (depth, engine, tol, samples) = match command {
            CommandName::Bounds => (None, None, None, None),
            CommandName::Evolve => (Some(a.depth.unwrap_or(10)), Some(engine(a, EngineKind::Exact, 0)), None, None),
            CommandName::Threshold => (
                Some(a.depth.unwrap_or(40)),
                Some(engine(a, EngineKind::Population, 1000)),
                Some(a.tol.unwrap_or(0.005)),
                None,
            ),
            CommandName::Couple => (Some(a.depth.unwrap_or(3)), Some(engine(a, EngineKind::Exact, 0)), None, None),
            CommandName::HardcoreCheck => (Some(a.depth.unwrap_or(3)), None, None, Some(a.samples.unwrap_or(100_000))),
            CommandName::Verify => (Some(a.depth.unwrap_or(4)), None, None, Some(a.samples.unwrap_or(10_000))),
        };
        if matches!(engine, Some(Engine::Population { .. })) && command == CommandName::Couple {
            return Err(CliError::Usage("couple needs the exact engine".into()));
        }
        let out = match &a.out {
            Some(p) => Some(p.display().to_string()),
            None => std::env::var_os(OUT_DIR_ENV).map(|dir| {
                let ext = if format == Format::Csv { "csv" } else { "json" };
                let name = serde_json::to_value(command).ok().and_then(|v| v.as_str().map(String::from));
                PathBuf::from(dir)
                    .join(format!("{}.{ext}", name.unwrap_or_default()))
                    .display()
                    .to_string()
            }),
        };
        Ok(Self {
            command,
            channel,
            k: a.k,
            depth,
            engine,
            seed: a.seed,
            out,
            format,
            lo: a.lo,
            hi: a.hi,
            tol,
            samples,
        })
    }
}
