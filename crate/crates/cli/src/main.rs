//! `ca-lift`: run automaton and quantum-lift experiments from configs.

mod commands;
mod config;
mod failure;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::failure::Failure;

#[derive(Parser)]
#[command(
    name = "ca-lift",
    version,
    about = "Reversible cellular automata and their quantum lift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in config: fig2-classical, lift-small or lift-medium.
    #[arg(long)]
    preset: Option<String>,
    /// Directory that receives the content-addressed run directories.
    #[arg(long, env = "CA_LIFT_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,
    /// Largest Hilbert-space dimension the quantum subcommands will build.
    #[arg(long, env = "CA_LIFT_DIM_CAP")]
    dim_cap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a random initial state and dump every epoch.
    Simulate(RunArgs),
    /// Evolve a state and a single-site perturbation of it side by side.
    DiffPattern(RunArgs),
    /// Build A, B and U on the ontological basis.
    Lift(RunArgs),
    /// Hamiltonian densities, truncated and exact Hamiltonians.
    Hamiltonian(RunArgs),
    /// Spectra, cycle oracle and vacuum entanglement.
    Spectrum(RunArgs),
    /// BCH truncation errors and spectral spread along a scale grid.
    Converge(RunArgs),
    /// Print the class (beable, changeable, superimposable) of an operator file.
    Classify {
        /// Operator JSON as written by `lift`.
        operator: PathBuf,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Print a built-in config as TOML.
    Preset { name: String },
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let (config, base) = match (&args.config, &args.preset) {
        (Some(path), _) => (
            config::load_config(path)?,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        (None, Some(name)) => (config::preset(name)?, PathBuf::from(".")),
        (None, None) => return Err(Failure::invalid_config("pass --config or --preset")),
    };
    config.resolve(&base, args.dim_cap)
}

type Runner = fn(&ExperimentConfig, &Path) -> Result<PathBuf, Failure>;

fn run(cli: Cli) -> Result<String, Failure> {
    let (name, args, runner): (&str, RunArgs, Runner) = match cli.command {
        Command::Simulate(a) => ("simulate", a, commands::run_simulate),
        Command::DiffPattern(a) => ("diff-pattern", a, commands::run_diff_pattern),
        Command::Lift(a) => ("lift", a, commands::run_lift),
        Command::Hamiltonian(a) => ("hamiltonian", a, commands::run_hamiltonian),
        Command::Spectrum(a) => ("spectrum", a, commands::run_spectrum),
        Command::Converge(a) => ("converge", a, commands::run_converge),
        Command::Classify { operator, tolerance } => {
            let report = commands::run_classify(&operator, tolerance)?;
            return Ok(serde_json::to_string(&report).expect("serialisable"));
        }
        Command::Preset { name } => return Ok(config::to_toml(&config::preset(&name)?)),
    };
    let config = load(&args)?;
    let dir = runner(&config, &args.output_root)?;
    Ok(serde_json::json!({
        "subcommand": name,
        "run_dir": dir.display().to_string(),
        "config_hash": config::config_hash(name, &config),
    })
    .to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let failure = Failure {
                code: "usage",
                message: e.to_string().trim().to_string(),
                exit_code: 2,
            };
            eprintln!("{}", failure.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(out) => {
            println!("{}", out.trim_end());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code as u8)
        }
    }
}
