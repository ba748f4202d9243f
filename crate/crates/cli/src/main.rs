mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::ConfigFile;
use crate::output::{error_record, Run};

#[derive(Parser)]
#[command(
    name = "finepot",
    version,
    about = "Obstacle problems, capacities and fine-topology experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the config (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Smaller instance counts.
    #[arg(long, global = true)]
    quick: bool,
    /// Run a refinement study over this many resolutions (at least 2).
    #[arg(long, global = true)]
    refine: Option<u32>,
}

#[derive(Clone, Copy, Subcommand)]
enum Command {
    /// Double-obstacle / Dirichlet problem.
    Solve,
    /// Sobolev, variational or condenser capacity.
    Capacity,
    /// Adams' Choquet-integral lower bound for the single-obstacle problem.
    Adams,
    /// Capacitary inequality for one function.
    Mazya,
    /// Dyadic thinness sums at sample points.
    Wiener,
    /// Analytic report for a Swiss-cheese set.
    Swisscheese,
    /// Fine-interior classification.
    Fineint,
    /// Transmission problem for the line measure in the plane.
    Transmission,
    /// One-dimensional measures with atoms.
    Oned,
    /// The acceptance battery.
    Suite,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Capacity => "capacity",
            Command::Adams => "adams",
            Command::Mazya => "mazya",
            Command::Wiener => "wiener",
            Command::Swisscheese => "swisscheese",
            Command::Fineint => "fineint",
            Command::Transmission => "transmission",
            Command::Oned => "oned",
            Command::Suite => "suite",
        }
    }
}

fn fail(cli: &Cli, run: Option<&Run>, kind: &str, message: &str, seed: Option<u64>) -> ExitCode {
    let record = error_record(cli.command.name(), kind, message, seed);
    eprint!("{record}");
    if let Some(run) = run {
        let _ = std::fs::write(run.out.join("error.toml"), &record);
        let _ = run.manifest("failed: outputs are partial");
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let cfg = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => return fail(&cli, None, e.kind(), &e.to_string(), cli.seed),
        },
        None if matches!(cli.command, Command::Suite) => ConfigFile::default(),
        None => {
            return fail(
                &cli,
                None,
                "config",
                &format!("`{name}` needs --config"),
                cli.seed,
            )
        }
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let mut run = match Run::new(&cli.out, seed, name) {
        Ok(r) => r,
        Err(e) => return fail(&cli, None, e.kind(), &e.to_string(), Some(seed)),
    };
    let base = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .unwrap_or(Path::new("."));
    if let Some(path) = &cli.config {
        run.input(path);
    }
    if let Some(k) = cli.refine {
        run.param("refine", k);
    }
    let ctx = Context {
        cfg: &cfg,
        base,
        quick: cli.quick,
        refine: cli.refine,
    };
    let result = match cli.command {
        Command::Solve => commands::solve(&ctx, &mut run).map(|_| true),
        Command::Capacity => commands::capacity(&ctx, &mut run).map(|_| true),
        Command::Adams => commands::adams(&ctx, &mut run).map(|_| true),
        Command::Mazya => commands::mazya(&ctx, &mut run).map(|_| true),
        Command::Wiener => commands::wiener(&ctx, &mut run).map(|_| true),
        Command::Swisscheese => commands::swisscheese(&ctx, &mut run).map(|_| true),
        Command::Fineint => commands::fineint(&ctx, &mut run).map(|_| true),
        Command::Transmission => commands::transmission(&ctx, &mut run).map(|_| true),
        Command::Oned => commands::oned(&ctx, &mut run).map(|_| true),
        Command::Suite => commands::suite(&ctx, &mut run),
    };
    match result {
        Ok(true) => match run.manifest("ok") {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&cli, None, e.kind(), &e.to_string(), Some(seed)),
        },
        Ok(false) => fail(
            &cli,
            Some(&run),
            "criteria_failed",
            "one or more acceptance criteria failed",
            Some(seed),
        ),
        Err(e) => fail(&cli, Some(&run), e.kind(), &e.to_string(), Some(seed)),
    }
}
