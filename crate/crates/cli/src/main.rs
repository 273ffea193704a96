//! `optocascade` command-line front end.

mod commands;
mod config;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optocascade::Error;
use toml::Value;

use crate::config::Mode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Model(e) => match e {
                Error::InvalidParameter { .. }
                | Error::Domain(_)
                | Error::UnknownScenario(_)
                | Error::UnknownObservable(_)
                | Error::DimensionOverflow { .. } => 2,
                Error::Stiffness { .. } | Error::TooManySteps { .. } | Error::NoSteadyState(_) | Error::TruncationTooSmall(_) => 3,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "optocascade", version, about = "Cascaded single-photon source driving an opto-mechanical cavity")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the moment equations (and/or the Fock-space oracle) and write CSV.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// CSV path of the moment trace.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        no_plot: bool,
    },
    /// Normal-mode frequencies of the coupled cavity and mechanics.
    Modes {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Pre-injection stationary moments (source decoupled).
    SteadyState {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Run the truncated Fock-space master equation only.
    Oracle {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Scan one parameter; one CSV row per grid point.
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
        /// `KEY=v1,v2,...`, `KEY=lin:START:STOP:N` or `KEY=log:START:STOP:N`.
        #[arg(long)]
        axis: String,
        /// Worker threads (default: machine parallelism).
        #[arg(long)]
        jobs: Option<usize>,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every preset of a reference figure.
    Reproduce {
        /// fig2a, fig2b, fig3, fig4 or fig5.
        figure: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        no_plot: bool,
    },
    /// List scenario presets.
    Presets,
}

/// Configuration layers shared by the subcommands.
#[derive(Debug, Args, Default)]
pub struct Inputs {
    /// Optional config file followed by `KEY=VALUE` overrides.
    #[arg(value_name = "CONFIG | KEY=VALUE")]
    args: Vec<String>,
    /// Start from a registry preset.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    omega_m: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nbar: Option<f64>,
    /// Rotating-wave coupling.
    #[arg(long)]
    rwa: bool,
}

impl Inputs {
    pub fn load(&self, extra: &[String]) -> Result<config::RunConfig, CliError> {
        let mut file = None;
        let mut overrides = Vec::new();
        for a in &self.args {
            if a.contains('=') {
                overrides.push(a.clone());
            } else if file.replace(Path::new(a)).is_some() {
                return Err(CliError::Config(format!("more than one config file given (`{a}`)")));
            }
        }
        let flags = [
            ("g", self.g),
            ("delta", self.delta),
            ("omega_m", self.omega_m),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("nbar", self.nbar),
        ];
        overrides.extend(flags.iter().filter_map(|(k, v)| v.map(|v| format!("params.{k}={v:?}"))));
        if self.rwa {
            overrides.push("params.rwa=true".into());
        }
        overrides.extend_from_slice(extra);
        config::load(&config::Layers { preset: self.preset.as_deref(), file, overrides: &overrides })
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { inputs, mode, out, out_dir, no_plot } => {
            let mut extra = Vec::new();
            if let Some(m) = mode {
                extra.push(format!("solver.mode={}", commands::mode_name(m)));
            }
            if let Some(p) = out {
                extra.push(format!("output.csv={}", toml_string(&p)));
            }
            if let Some(d) = out_dir {
                extra.push(format!("output.dir={}", toml_string(&d)));
            }
            if no_plot {
                extra.push("output.plot=false".into());
            }
            commands::simulate(&inputs.load(&extra)?)
        }
        Command::Modes { inputs } => commands::modes(&inputs.load(&[])?),
        Command::SteadyState { inputs } => commands::steady_state(&inputs.load(&[])?),
        Command::Oracle { inputs, out_dir } => {
            let extra: Vec<String> = out_dir.iter().map(|d| format!("output.dir={}", toml_string(d))).collect();
            commands::oracle(&inputs.load(&extra)?)
        }
        Command::Sweep { inputs, axis, jobs, out } => commands::sweep(&inputs, &axis, jobs, out.as_deref()),
        Command::Reproduce { figure, out_dir, no_plot } => commands::reproduce(&figure, out_dir, !no_plot),
        Command::Presets => commands::presets(),
    }
}

fn toml_string(p: &Path) -> String {
    Value::String(p.to_string_lossy().into_owned()).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => {
            eprintln!("error: internal numerical failure");
            ExitCode::from(3)
        }
    }
}
