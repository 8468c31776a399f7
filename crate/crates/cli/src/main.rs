//! `tflow`: time-of-flow distributions, speed limits and control optimization from the command line.
//!
//! Every run writes CSV series and a `report.json` with a manifest; `tflow replay` re-runs a
//! manifest. Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

mod commands;
mod error;
mod output;

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use tflow::models::{LambdaConfig, WaveformSpec};
use tflow::optimize::OptimizeConfig;

use crate::commands::{
    DephasingParams, HadamardParams, LambdaParams, OptimizeParams, Params, ProtocolParams, StaParams, TwoLevelParams,
};
use crate::error::{CliError, Result};
use crate::output::{write_run, Manifest, Report};

#[derive(Parser, Debug)]
#[command(name = "tflow", version, about = "Time-of-flow distributions for small quantum systems")]
struct Cli {
    /// Output directory for CSV series and report.json.
    #[arg(long, global = true, default_value = "tflow-out")]
    out: PathBuf,

    /// Unit of frequency inputs; mhz-cyclic multiplies them by 2 pi.
    #[arg(long, global = true, value_enum, default_value_t = Units::Angular)]
    units: Units,

    /// Seed for sampling and multistart jitter.
    #[arg(long, global = true, env = "TFLOW_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Units {
    Angular,
    MhzCyclic,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::Angular => 1.0,
            Units::MhzCyclic => TAU,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Driven two-level system from a Bloch-sphere initial state.
    TwoLevel(TwoLevelArgs),
    /// Shortcut-to-adiabaticity rotation with theta(t) = (pi/2)(t/T)^alpha.
    Sta(StaArgs),
    /// Three-level Lambda system under a linear detuning sweep.
    Lambda(LambdaArgs),
    /// Pure dephasing of |+> into |->, with speed-limit bounds.
    Dephasing(DephasingArgs),
    /// Hadamard-like rotation with Markovian dephasing, with speed-limit bounds.
    Hadamard(HadamardArgs),
    /// Polynomial control optimization from a JSON config file.
    Optimize(OptimizeArgs),
    /// Re-run the manifest stored in a report.json.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Serialize)]
struct TwoLevelArgs {
    /// Polar angle of the initial state.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    /// Azimuthal angle of the initial state.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi: f64,
    /// Constant drive amplitude omega0.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    omega0: f64,
    /// Polynomial coefficients a_1,a_2,... added to omega0.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "pulse_t0")]
    coefficients: Vec<f64>,
    /// Centre of a Gaussian pi pulse; replaces the polynomial drive.
    #[arg(long, requires = "pulse_sigma")]
    pulse_t0: Option<f64>,
    /// Width of the Gaussian pi pulse.
    #[arg(long, requires = "pulse_t0")]
    pulse_sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t_start: f64,
    #[arg(long)]
    t_end: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 1000)]
    points: usize,
    /// Also propagate the Schrodinger equation and report the deviation.
    #[arg(long)]
    numeric: bool,
    /// Simulate the measurement protocol with this many trials per time point.
    #[arg(long)]
    protocol: Option<u64>,
    /// L1 tolerance for the protocol pass flag.
    #[arg(long, default_value_t = 0.05)]
    protocol_tolerance: f64,
}

#[derive(Args, Debug, Serialize)]
struct StaArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    t_final: f64,
    /// Drive amplitude; only the numeric check depends on it.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    omega0: f64,
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// Propagate numerically and report the deviation from the closed form.
    #[arg(long)]
    numeric: bool,
}

#[derive(Args, Debug, Serialize)]
struct LambdaArgs {
    #[arg(long, allow_negative_numbers = true)]
    omega1: f64,
    #[arg(long, allow_negative_numbers = true)]
    omega2: f64,
    /// Initial detuning, must be negative.
    #[arg(long, allow_negative_numbers = true)]
    delta_i: f64,
    /// Final detuning, must be positive.
    #[arg(long, allow_negative_numbers = true)]
    delta_f: f64,
    #[arg(long)]
    t_final: f64,
    #[arg(long, default_value_t = 4000)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct DephasingArgs {
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// End of the window; defaults to 10/gamma.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, default_value_t = 4000)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct HadamardArgs {
    /// Rotation frequency; defaults to 2 pi x 10 rad per time unit.
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma: f64,
    /// End of the window; defaults to pi/omega0.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    points: usize,
}

#[derive(Args, Debug, Serialize)]
struct OptimizeArgs {
    /// JSON file with the optimizer configuration.
    config: PathBuf,
    /// Number of independent Nelder-Mead starts.
    #[arg(long, default_value_t = 1)]
    starts: usize,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// A report.json written by an earlier run.
    report: PathBuf,
}

fn resolve(command: &Command, units: Units) -> Result<Params> {
    let s = units.scale();
    Ok(match command {
        Command::TwoLevel(a) => {
            let waveform = match (a.pulse_t0, a.pulse_sigma) {
                (Some(t0), Some(sigma)) => WaveformSpec::GaussianPulse { area: PI, t0, sigma },
                _ if a.coefficients.is_empty() => WaveformSpec::Constant { omega0: s * a.omega0 },
                _ => WaveformSpec::Polynomial {
                    omega0: s * a.omega0,
                    coefficients: a.coefficients.iter().map(|c| s * c).collect(),
                },
            };
            Params::TwoLevel(TwoLevelParams {
                theta: a.theta,
                phi: a.phi,
                waveform,
                t_start: a.t_start,
                t_end: a.t_end,
                points: a.points,
                numeric: a.numeric,
                protocol: a.protocol.map(|n_trials| ProtocolParams {
                    n_trials,
                    tolerance: a.protocol_tolerance,
                }),
            })
        }
        Command::Sta(a) => Params::Sta(StaParams {
            alpha: a.alpha,
            t_final: a.t_final,
            omega0: s * a.omega0,
            points: a.points,
            numeric: a.numeric,
        }),
        Command::Lambda(a) => Params::Lambda(LambdaParams {
            config: LambdaConfig::new(s * a.omega1, s * a.omega2, s * a.delta_i, s * a.delta_f, a.t_final)?,
            points: a.points,
        }),
        Command::Dephasing(a) => {
            let gamma = s * a.gamma;
            if !(gamma > 0.0) {
                return Err(CliError::usage("gamma must be > 0"));
            }
            Params::Dephasing(DephasingParams {
                gamma,
                t_end: a.t_end.unwrap_or(10.0 / gamma),
                points: a.points,
            })
        }
        Command::Hadamard(a) => {
            let omega0 = a.omega0.map_or(TAU * 10.0, |w| s * w);
            if !(omega0 > 0.0) {
                return Err(CliError::usage("omega0 must be > 0"));
            }
            Params::Hadamard(HadamardParams {
                omega0,
                gamma: s * a.gamma,
                t_end: a.t_end.unwrap_or(PI / omega0),
                points: a.points,
            })
        }
        Command::Optimize(a) => Params::Optimize(OptimizeParams {
            config: read_optimize_config(&a.config)?,
            starts: a.starts,
        }),
        Command::Replay(_) => unreachable!("replay is resolved from its manifest"),
    })
}

/// Parses an optimizer config, reporting JSON errors with line and column.
fn read_optimize_config(path: &Path) -> Result<OptimizeConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn inputs_of(command: &Command, units: Units) -> Result<Value> {
    let args = match command {
        Command::TwoLevel(a) => serde_json::to_value(a)?,
        Command::Sta(a) => serde_json::to_value(a)?,
        Command::Lambda(a) => serde_json::to_value(a)?,
        Command::Dephasing(a) => serde_json::to_value(a)?,
        Command::Hadamard(a) => serde_json::to_value(a)?,
        Command::Optimize(a) => serde_json::to_value(a)?,
        Command::Replay(_) => Value::Null,
    };
    Ok(serde_json::json!({ "units": units, "args": args }))
}

fn execute(params: &Params, seed: u64, inputs: Value, out: &Path) -> Result<()> {
    let run = params.run(seed)?;
    let manifest = Manifest {
        command: params.command().to_string(),
        params: params.to_value()?,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    for d in &run.diagnostics {
        eprintln!("note: {d}");
    }
    for path in write_run(out, manifest, inputs, run)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Replay(a) => {
            let report = Report::read(&a.report)?;
            let params = Params::from_manifest(&report.manifest.command, report.manifest.params)?;
            execute(&params, report.manifest.seed, report.inputs, &cli.out)
        }
        command => {
            let params = resolve(command, cli.units)?;
            execute(&params, cli.seed, inputs_of(command, cli.units)?, &cli.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
