use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use floquet_flow_cli::config::{load_config_str, parse_override};
use floquet_flow_cli::{load_config_with, run, CliError, CliResult, Engine, Figure, RunConfig};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "floquet-flow", version, about = "Floquet occupations and dissipation of driven systems in a thermal bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    engine: Option<Engine>,

    /// CSV output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override a config field, e.g. `--set system.mu_f=2.0`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quasienergies of the configured system.
    Solve,
    /// Partial transition rates.
    Rates,
    /// Quasistationary occupations.
    Steady,
    /// Dissipation rate split into transitions and pseudo-transitions.
    Dissipation,
    /// Parameter sweep described by the `sweep` section.
    Sweep,
    /// Data behind one of the two-level figures.
    Figure {
        #[arg(value_enum)]
        which: Figure,
        /// Abscissa points per curve.
        #[arg(long)]
        points: Option<usize>,
    },
}

/// Figures need no system of their own; this document fills the schema.
const FIGURE_DEFAULT: &str = r#"{"system": {"type": "two_level", "omega0": 1, "omega": 1.5, "mu_f": 0}}"#;

fn build_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut overrides: Vec<(String, Value)> = cli.set.iter().map(|s| parse_override(s)).collect::<CliResult<_>>()?;
    let task = match &cli.command {
        Command::Solve => "quasienergies",
        Command::Rates => "rates",
        Command::Steady => "steady",
        Command::Dissipation => "dissipation",
        Command::Sweep => "sweep",
        Command::Figure { .. } => "figure",
    };
    overrides.push(("task".into(), json!(task)));
    if let Some(e) = cli.engine {
        overrides.push(("engine".into(), json!(e.name())));
    }
    if let Command::Figure { which, points } = &cli.command {
        overrides.push(("figure.which".into(), json!(which.name())));
        if let Some(n) = points {
            overrides.push(("figure.points".into(), json!(n)));
        }
    }
    let mut cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => load_config_with(path, &overrides)?,
        (None, Command::Figure { .. }) => load_config_str(FIGURE_DEFAULT, &PathBuf::from("."), &overrides)?,
        (None, _) => return Err(CliError::validation("--config", "a configuration file is required")),
    };
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.summary).expect("serializable summary"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
