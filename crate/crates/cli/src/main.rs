use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dickenet_cli::output::output_root;
use dickenet_cli::run::{cmd_aci, cmd_prepare, cmd_scan, cmd_simulate, RunOutcome};
use dickenet_cli::verify::{parse_mutation, run_verify, Level};
use dickenet_cli::{CliError, ConfigError, LoadedConfig};
use dickenet_core::measurement::SignMutation;

#[derive(Parser)]
#[command(name = "dickenet", version, about = "Gravitational redshift in networked Dicke ensembles")]
struct Cli {
    /// Overrides `rng_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ramsey trace for one scenario.
    Simulate { config: PathBuf },
    /// Variational state preparation.
    Prepare { config: PathBuf },
    /// Oracle and invariant checks.
    Verify {
        /// Larger sizes and more random draws.
        #[arg(long)]
        full: bool,
        #[arg(long, hide = true)]
        inject_mutation: Option<String>,
    },
    /// Atom-clock interferometer trace and visibility.
    Aci { config: PathBuf },
    /// Repeat `simulate` over values of one parameter.
    Scan {
        config: PathBuf,
        /// alpha, N, delta_z or t_max
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<LoadedConfig, CliError> {
    let mut loaded = LoadedConfig::from_file(path)?;
    if let Some(s) = seed {
        loaded.config.rng_seed = s;
    }
    Ok(loaded)
}

fn report(outcome: RunOutcome) -> Result<(), CliError> {
    println!("{}", outcome.dir.display());
    for (k, v) in &outcome.manifest.summary {
        println!("  {k} = {v}");
    }
    for w in &outcome.manifest.warnings {
        eprintln!("warning: {w}");
    }
    let failed: Vec<&str> = outcome.manifest.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    for c in &outcome.manifest.checks {
        println!("  [{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let root = output_root();
    match cli.command {
        Command::Simulate { config } => report(cmd_simulate(&load(&config, cli.seed)?, &root)?),
        Command::Prepare { config } => report(cmd_prepare(&load(&config, cli.seed)?, &root)?),
        Command::Aci { config } => report(cmd_aci(&load(&config, cli.seed)?, &root)?),
        Command::Scan { config, param, values } => report(cmd_scan(&load(&config, cli.seed)?, &root, &param, &values)?),
        Command::Verify { full, inject_mutation } => {
            let mutation = match inject_mutation {
                None => SignMutation::None,
                Some(name) => parse_mutation(&name).ok_or_else(|| {
                    CliError::Config(ConfigError { path: None, line: None, message: format!("unknown mutation `{name}`") })
                })?,
            };
            let report = run_verify(if full { Level::Full } else { Level::Fast }, mutation);
            print!("{}", report.render());
            if report.all_pass() {
                Ok(())
            } else {
                Err(CliError::Verification(report.failures().join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dickenet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
