//! `penrose-lab`: batch runs of curvature, mass, Penrose and rigidity
//! computations on catalog graphs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Failure;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "penrose-lab", version, about = "Curvature, mass and Penrose-bound computations for graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` config file; flags and --set override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Catalog id, e.g. `schwarzschild(3,1)` or `schwarzschild` with --n/--m.
    #[arg(long, global = true)]
    graph: Option<String>,

    #[arg(long, global = true)]
    n: Option<usize>,

    /// Mass parameter for bare `schwarzschild` ids.
    #[arg(long, global = true)]
    m: Option<f64>,

    /// Comma-separated sphere radii.
    #[arg(long, global = true)]
    radii: Option<String>,

    #[arg(long = "quad-order", global = true)]
    quad_order: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Override any config key, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Curvature of a graph over a sample plan.
    Curvature,
    /// ADM mass by flux extrapolation.
    Mass,
    /// Mass, Penrose bound and verdict.
    Penrose,
    /// Radial profile with prescribed scalar curvature.
    Radial,
    /// Slide a reference graph onto a graph.
    Slide,
    /// Seeded property suite: identities, hhr, ellipticity, decay or slide.
    Suite { id: Option<String> },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OutputFormat {
    Text,
    Json,
    Csv,
}

fn build_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let flags: [(&str, Option<String>); 9] = [
        ("graph.id", cli.graph.clone()),
        ("n", cli.n.map(|v| v.to_string())),
        ("graph.m", cli.m.map(|v| v.to_string())),
        ("radii", cli.radii.clone()),
        ("quad.order", cli.quad_order.map(|v| v.to_string())),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        (
            "format",
            cli.format.map(|f| {
                match f {
                    OutputFormat::Text => "text",
                    OutputFormat::Json => "json",
                    OutputFormat::Csv => "csv",
                }
                .to_string()
            }),
        ),
        (
            "suite.id",
            match &cli.command {
                Command::Suite { id } => id.clone(),
                _ => None,
            },
        ),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("PENROSE_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Failure::Config(format!("PENROSE_LAB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    let cfg = build_config(cli)?;
    match cli.command {
        Command::Curvature => commands::curvature(&cfg),
        Command::Mass => commands::mass(&cfg),
        Command::Penrose => commands::penrose(&cfg),
        Command::Radial => commands::radial(&cfg),
        Command::Slide => commands::slide(&cfg),
        Command::Suite { .. } => commands::suite(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("penrose-lab: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
