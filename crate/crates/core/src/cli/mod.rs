//! Command-line front end.
//!
//! Exit codes: `0` success (including "no data" simulations), `2` usage or
//! validation error, `3` undefined analytic quantity, `4` I/O error.

mod commands;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, ErrorKind, Result};
use crate::scenarios::{self, ScenarioSpec};

pub use commands::{cmd_abl, cmd_check, cmd_simulate, cmd_weak, SimulateOptions};
pub use report::{Parameters, RunReport, Timing};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNDEFINED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "tsvf",
    version,
    about = "ABL probabilities, weak values and pointer simulations for pre- and post-selected systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    pub format: OutputFormat,

    /// Omit the timing field so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strong,
    Weak,
    Pressure,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Strong => "strong",
            Mode::Weak => "weak",
            Mode::Pressure => "pressure",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario (`three-box`, `singlet`) or path to a scenario file.
    #[arg(long, default_value = "three-box")]
    pub scenario: String,

    /// Number of particles (three-box).
    #[arg(short = 'N', value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ABL outcome distribution of an intermediate measurement.
    Abl {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        observable: String,
    },
    /// Weak value of an operator.
    Weak {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, alias = "observable")]
        operator: String,
    },
    /// Monte Carlo simulation with analytic references.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Strong measurements, one weak pointer per observable, or the
        /// N-particle pressure ensemble.
        #[arg(long, value_enum, default_value_t = Mode::Strong)]
        mode: Mode,
        /// Number of Monte Carlo trials.
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Master seed; trial t draws from ChaCha20 stream t.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pointer spread (weak and pressure modes).
        #[arg(long)]
        sigma: Option<f64>,
        /// Comma-separated observables; overrides the scenario schedule in
        /// strong mode and selects pointers in weak/pressure modes.
        #[arg(long, value_delimiter = ',')]
        observable: Vec<String>,
    },
    /// Product-rule check over all commuting observable pairs.
    Check {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Undefined => EXIT_UNDEFINED,
        ErrorKind::Io => EXIT_IO,
    }
}

/// A resolved scenario together with how it was requested.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub spec: ScenarioSpec,
    pub builtin: bool,
    pub n_particles: usize,
}

/// Resolve a built-in name or load a scenario file. Load warnings go to stderr.
pub fn resolve_scenario(name: &str, n: Option<usize>, budget: usize) -> Result<ResolvedScenario> {
    let n_req = n.unwrap_or(1);
    if let Some(spec) = scenarios::builtin(name, n_req, budget)? {
        let n_particles = spec.n_particles.unwrap_or(1);
        return Ok(ResolvedScenario {
            spec,
            builtin: true,
            n_particles,
        });
    }
    let path = PathBuf::from(name);
    if !path.exists() {
        return Err(Error::UnknownName {
            kind: "scenario (not a built-in name or an existing file)",
            name: name.to_string(),
        });
    }
    let text = std::fs::read_to_string(&path)?;
    let loaded = scenarios::load_scenario(&text)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let mut spec = loaded.spec;
    if let Some(n) = n {
        spec.n_particles = Some(n);
    }
    let n_particles = spec.n_particles.unwrap_or(1);
    Ok(ResolvedScenario {
        spec,
        builtin: false,
        n_particles,
    })
}

/// Execute a parsed command line and produce its report.
pub fn run(cli: &Cli) -> Result<RunReport> {
    let budget = scenarios::dim_budget_from_env()?;
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Abl { scenario, observable } => {
            cmd_abl(&scenario.scenario, scenario.n.map(|n| n as usize), observable, budget)?
        }
        Command::Weak { scenario, operator } => {
            cmd_weak(&scenario.scenario, scenario.n.map(|n| n as usize), operator, budget)?
        }
        Command::Simulate {
            scenario,
            mode,
            trials,
            seed,
            sigma,
            observable,
        } => cmd_simulate(&SimulateOptions {
            scenario: scenario.scenario.clone(),
            n: scenario.n.map(|n| n as usize),
            mode: *mode,
            trials: *trials,
            seed: *seed,
            sigma: *sigma,
            observables: observable.clone(),
            budget,
        })?,
        Command::Check { scenario } => cmd_check(&scenario.scenario, scenario.n.map(|n| n as usize), budget)?,
    };
    if !cli.no_timing {
        report.timing = Some(Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(report)
}

/// Render a report in the requested format.
pub fn render(report: &RunReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    }
}
