//! `hvlab`: command-line driver for the hidden-variable simulation laboratory.

use std::io;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hvlab_core::analytic::STANDARD_CHSH_ANGLES_DEG;
use hvlab_core::diagnostics::AUDIT_Z_THRESHOLD;
use hvlab_core::{ModelSpec, Vector3};

mod commands;
mod output;

use output::{write_records, Format};

const DEFAULT_TRIALS: u64 = 1_000_000;
const DEFAULT_SHARDS: u64 = 16;

#[derive(Debug, Parser)]
#[command(name = "hvlab", version, about = "Monte Carlo laboratory for hidden-variable spin models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate <XY> (or <X> for single_spin) at one planar angle.
    Correlate {
        #[command(flatten)]
        common: Common,
        /// Angle between the two settings, degrees in [0, 180].
        #[arg(long, default_value_t = 60.0)]
        theta: f64,
    },
    /// Correlation and joint probabilities across a grid of angles.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `start:stop:step` or a comma-separated list, degrees.
        #[arg(long, default_value = "0:180:15")]
        theta_grid: String,
    },
    /// Joint probabilities only, across a grid of angles.
    JointProbs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0:180:15")]
        theta_grid: String,
    },
    /// CHSH combination at four planar angles a, a', b, b' (degrees).
    Chsh {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        angles: Option<Vec<f64>>,
    },
    /// Statistical and per-trial audits.
    Audit {
        kind: AuditKind,
        #[command(flatten)]
        common: Common,
        /// Angle for the outcome-dependence audit, degrees.
        #[arg(long, default_value_t = 60.0)]
        theta: f64,
        #[arg(long, default_value_t = AUDIT_Z_THRESHOLD)]
        z_threshold: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AuditKind {
    Signaling,
    OutcomeDependence,
    Asymmetry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Complete,
    #[value(name = "sufficient_condition", alias = "sufficient-condition")]
    SufficientCondition,
    #[value(name = "local_baseline", alias = "local-baseline")]
    LocalBaseline,
    #[value(name = "single_spin", alias = "single-spin")]
    SingleSpin,
}

impl ModelName {
    fn as_str(self) -> &'static str {
        match self {
            ModelName::Complete => "complete",
            ModelName::SufficientCondition => "sufficient_condition",
            ModelName::LocalBaseline => "local_baseline",
            ModelName::SingleSpin => "single_spin",
        }
    }
}

#[derive(Debug, Clone, Args)]
struct Common {
    #[arg(long, value_enum, default_value = "complete")]
    model: ModelName,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    /// Defaults to min(16, trials).
    #[arg(long)]
    shards: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Bloch vector `x,y,z` for the single_spin model.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0,0")]
    bloch: Vec<f64>,
}

/// Fully resolved run parameters shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model_name: ModelName,
    pub model: ModelSpec,
    pub trials: u64,
    pub shards: u64,
    pub seed: u64,
    pub format: Format,
    pub bloch: Vector3,
}

impl Common {
    fn resolve(&self) -> Result<Resolved> {
        if self.bloch.len() != 3 {
            bail!("--bloch takes three comma-separated values");
        }
        let bloch = Vector3::new(self.bloch[0], self.bloch[1], self.bloch[2]);
        let model = match self.model {
            ModelName::Complete => ModelSpec::Complete,
            ModelName::SufficientCondition => ModelSpec::SufficientCondition,
            ModelName::LocalBaseline => ModelSpec::LocalBaseline,
            ModelName::SingleSpin => ModelSpec::single_spin(bloch).context("invalid --bloch")?,
        };
        if self.trials == 0 {
            bail!("--trials must be at least 1");
        }
        Ok(Resolved {
            model_name: self.model,
            model,
            trials: self.trials,
            shards: self.shards.unwrap_or(DEFAULT_SHARDS.min(self.trials)),
            seed: self.seed,
            format: self.format,
            bloch,
        })
    }
}

impl Resolved {
    /// The flags that reproduce this run, for the provenance line on stderr.
    fn provenance(&self) -> String {
        let mut s = format!(
            "--model {} --trials {} --shards {} --seed {}",
            self.model_name.as_str(),
            self.trials,
            self.shards,
            self.seed
        );
        if self.model_name == ModelName::SingleSpin {
            s.push_str(&format!(
                " --bloch {},{},{}",
                self.bloch.x, self.bloch.y, self.bloch.z
            ));
        }
        s
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (resolved, rerun, outcome) = match &cli.command {
        Command::Correlate { common, theta } => {
            let r = common.resolve()?;
            let out = commands::correlate(&r, *theta)?;
            (r, format!("correlate --theta {theta}"), out)
        }
        Command::Sweep { common, theta_grid } => {
            let r = common.resolve()?;
            let grid = commands::parse_theta_grid(theta_grid)?;
            let out = commands::sweep(&r, &grid, true)?;
            (r, format!("sweep --theta-grid {theta_grid}"), out)
        }
        Command::JointProbs { common, theta_grid } => {
            let r = common.resolve()?;
            let grid = commands::parse_theta_grid(theta_grid)?;
            let out = commands::sweep(&r, &grid, false)?;
            (r, format!("joint-probs --theta-grid {theta_grid}"), out)
        }
        Command::Chsh { common, angles } => {
            let r = common.resolve()?;
            let angles: [f64; 4] = match angles {
                Some(v) => v.as_slice().try_into().context("--angles takes four values")?,
                None => STANDARD_CHSH_ANGLES_DEG,
            };
            let out = commands::chsh(&r, angles)?;
            let list = angles.map(|a| a.to_string()).join(",");
            (r, format!("chsh --angles={list}"), out)
        }
        Command::Audit {
            kind,
            common,
            theta,
            z_threshold,
        } => {
            let r = common.resolve()?;
            let out = commands::audit(&r, *kind, *theta, *z_threshold)?;
            let kind_name = kind.to_possible_value().expect("no skipped variants");
            (
                r,
                format!(
                    "audit {} --theta {theta} --z-threshold {z_threshold}",
                    kind_name.get_name()
                ),
                out,
            )
        }
    };
    eprintln!("# rerun: hvlab {rerun} {}", resolved.provenance());
    write_records(io::stdout().lock(), resolved.format, &outcome.records)?;
    if let Some(passed) = outcome.audit_passed {
        eprintln!("# audit {}", if passed { "PASS" } else { "FAIL" });
        return Ok(passed);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
