//! `rwdiff`: reproduce the random-walk / Gaussian / telegraph comparisons as
//! CSV, SVG and JSON files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Common;
use crate::config::FileConfig;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "rwdiff", version, about = "Compare random-walk, Gaussian and telegraph diffusion kernels")]
struct Cli {
    /// JSON file with defaults for any flag (kebab-case keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Lattice step.
    #[arg(long, global = true)]
    dx: Option<f64>,

    /// Hop time.
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Also write SVG charts.
    #[arg(long, global = true)]
    svg: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one model's density, gradient or flux over an x range.
    Density(DensityArgs),
    /// L2 deviation series between models, with fitted power laws.
    Compare(CompareArgs),
    /// Exact and approximate correction factor on an (x, t) grid.
    Correction(CorrectionArgs),
    /// Simulate walkers and test the histogram against the lattice law.
    Mc(McArgs),
    /// Write all figure data, summary tables and the acceptance summary.
    Report,
}

#[derive(Args)]
struct DensityArgs {
    /// rw, g or te.
    #[arg(long)]
    model: Option<String>,
    /// density, gradient or flux [default: density].
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    /// Positions as min:max:step.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated metrics such as `rho:rw-te,cattaneo` [default: the nine pairs].
    #[arg(long)]
    metrics: Option<String>,
    /// Times as log:min:max:n or a comma list [default: log:30:3000:40].
    #[arg(long)]
    t_grid: Option<String>,
}

#[derive(Args)]
struct CorrectionArgs {
    /// Times as log:min:max:n or a comma list [default: log:5:1000:80].
    #[arg(long)]
    t_list: Option<String>,
    /// Comma-separated positions, each at least dx [default: 5,10,30].
    #[arg(long)]
    x_list: Option<String>,
    /// Horizon for the settling-time search [default: 5000 dt].
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    walkers: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("RWDIFF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("RWDIFF_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let common = Common::resolve(cli.out, cli.dx, cli.dt, cli.svg, &file)?;
    match cli.command {
        Command::Density(a) => commands::density(&common, a.model, a.kind, a.t, a.x, &file),
        Command::Compare(a) => commands::compare(&common, a.metrics, a.t_grid, &file),
        Command::Correction(a) => commands::correction(&common, a.t_list, a.x_list, a.t_max, &file),
        Command::Mc(a) => commands::mc(&common, a.walkers, a.steps, a.seed, &file),
        Command::Report => report::report(&common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rwdiff: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
