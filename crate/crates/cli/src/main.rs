//! `dsf-sim`: generate fixtures, compute spectra (sampled, exact or oracle),
//! validate invariants and estimate fault-tolerant resources.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{cvs_value, flag_value};

#[derive(Parser)]
#[command(name = "dsf-sim", version, about = "Dynamic structure factor emulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hadamard-test pipeline: Green's-function series, intensities and S(q, ω).
    Spectrum(RunArgs),
    /// Exact-diagonalization reference spectra and the eigensystem.
    Oracle(RunArgs),
    /// Fault-tolerant resource report, or the reference-table sweep.
    Resources(ResourceArgs),
    /// Invariant suite on the bundled fixtures.
    Validate(ValidateArgs),
    /// Write the bundled model fixtures.
    GenFixtures(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration (or a previous run's manifest.json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "paths.hamiltonian", visible_alias = "hamiltonian", value_name = "FCIDUMP")]
    hamiltonian: Option<String>,
    #[arg(long = "paths.dipoles", visible_alias = "dipoles", value_name = "JSON")]
    dipoles: Option<String>,
    /// `solve`, a CI-vector JSONL file or an eigensystem JSON file.
    #[arg(long = "paths.ground_state", visible_alias = "ground-state", value_name = "PATH|solve")]
    ground_state: Option<String>,
    /// sampled | exact | oracle
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<u64>,
    /// Lorentzian half-width, e.g. `0.06` (Hartree) or `1.63eV`.
    #[arg(long)]
    eta: Option<String>,
    /// Window width Δ (Hartree or eV).
    #[arg(long = "delta", visible_alias = "delta_window")]
    delta: Option<String>,
    /// Lower window edge relative to E0 (Hartree or eV).
    #[arg(long = "omega_offset", visible_alias = "window-offset")]
    omega_offset: Option<String>,
    #[arg(long = "epsilon_trunc", visible_alias = "epsilon-trunc")]
    epsilon_trunc: Option<f64>,
    /// Trotter steps per time step τ.
    #[arg(long = "k", visible_alias = "trotter_k")]
    k: Option<usize>,
    /// Momentum transfer "x,y,z" in inverse Bohr; repeatable.
    #[arg(long, value_name = "X,Y,Z")]
    q: Vec<String>,
    /// Core orbitals, e.g. "0,3", or "none".
    #[arg(long)]
    cvs: Option<String>,
    #[arg(long = "isotropic_q", visible_alias = "isotropic-q")]
    isotropic_q: Option<f64>,
    /// Shift added to written ω columns (Hartree or eV).
    #[arg(long = "calibration_shift", visible_alias = "calibration-shift")]
    calibration_shift: Option<String>,
    #[arg(long = "input_threshold", visible_alias = "input-threshold")]
    input_threshold: Option<f64>,
    #[arg(long = "qubit_cap", visible_alias = "qubit-cap")]
    qubit_cap: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Generic override `dotted.key=json-or-text`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, Value)>, CliError> {
        let mut o: Vec<(String, Value)> = Vec::new();
        let text = |s: &str| Value::String(s.to_string());
        if let Some(v) = &self.hamiltonian {
            o.push(("paths.hamiltonian".into(), text(v)));
        }
        if let Some(v) = &self.dipoles {
            o.push(("paths.dipoles".into(), text(v)));
        }
        if let Some(v) = &self.ground_state {
            o.push(("paths.ground_state".into(), text(v)));
        }
        if let Some(v) = &self.mode {
            o.push(("mode".into(), text(v)));
        }
        if let Some(v) = self.seed {
            o.push(("seed".into(), v.into()));
        }
        if let Some(v) = self.shots {
            o.push(("shots".into(), v.into()));
        }
        for (key, v) in [
            ("eta", &self.eta),
            ("delta_window", &self.delta),
            ("omega_offset", &self.omega_offset),
            ("calibration_shift", &self.calibration_shift),
        ] {
            if let Some(v) = v {
                o.push((key.into(), flag_value(v)));
            }
        }
        if let Some(v) = self.epsilon_trunc {
            o.push(("epsilon_trunc".into(), v.into()));
        }
        if let Some(v) = self.k {
            o.push(("trotter_k".into(), v.into()));
        }
        if !self.q.is_empty() {
            o.push(("q".into(), Value::Array(self.q.iter().map(|s| text(s)).collect())));
        }
        if let Some(v) = &self.cvs {
            o.push(("cvs".into(), cvs_value(v)?));
        }
        if let Some(v) = self.isotropic_q {
            o.push(("isotropic_q".into(), v.into()));
        }
        if let Some(v) = self.input_threshold {
            o.push(("input_threshold".into(), v.into()));
        }
        if let Some(v) = self.qubit_cap {
            o.push(("qubit_cap".into(), v.into()));
        }
        if let Some(v) = &self.out {
            o.push(("out".into(), Value::String(v.display().to_string())));
        }
        for item in &self.set {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE, got `{item}`")))?;
            o.push((key.trim().to_string(), flag_value(value)));
        }
        Ok(o)
    }

    fn resolve(&self) -> Result<config::RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => {
                let bytes = output::read_input(path, "config")?;
                Some(serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?)
            }
            None => None,
        };
        config::RunConfig::resolve(base, &self.overrides()?)
    }
}

#[derive(Args)]
struct ResourceArgs {
    /// Sweep of N_a values, `LO..HI` (step 2) or `LO..HI:STEP`.
    #[arg(long, value_name = "LO..HI")]
    table: Option<String>,
    /// Number of active orbitals for a single report.
    #[arg(long = "n-a", visible_alias = "n_a")]
    n_a: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long = "delta", visible_alias = "delta_window")]
    delta: Option<String>,
    #[arg(long = "epsilon_trunc", visible_alias = "epsilon-trunc")]
    epsilon_trunc: Option<f64>,
    #[arg(long = "k", visible_alias = "trotter_k")]
    k: Option<usize>,
    /// JSON cost model replacing the calibrated defaults.
    #[arg(long = "cost-model", value_name = "JSON")]
    cost_model: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Also write the check list as JSON here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_name = "DIR", default_value = "fixtures")]
    out: PathBuf,
}

/// Failure reported as `{"error": {"kind", "message"}}` on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new("invalid_config", message)
    }

    fn exit_code(&self) -> u8 {
        match self.kind.as_str() {
            "input_not_found" => 2,
            "usage_error" => 64,
            "validation_failed" => 3,
            _ => 1,
        }
    }

    fn to_json(&self) -> String {
        serde_json::json!({"error": {"kind": self.kind, "message": self.message}}).to_string()
    }
}

impl From<dsf_core::Error> for CliError {
    fn from(e: dsf_core::Error) -> Self {
        CliError::new(e.kind(), e.to_string())
    }
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("DSF_SIM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config(format!("DSF_SIM_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new("internal_error", e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Spectrum(args) => {
            let cfg = args.resolve()?;
            commands::spectrum(&cfg)
        }
        Command::Oracle(args) => {
            let cfg = args.resolve()?;
            commands::oracle(&cfg)
        }
        Command::Resources(args) => commands::resources(&args),
        Command::Validate(args) => commands::validate(args.out.as_deref()),
        Command::GenFixtures(args) => commands::gen_fixtures(&args.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::new("usage_error", e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
