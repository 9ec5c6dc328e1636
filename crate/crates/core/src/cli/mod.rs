//! Command-line experiment harness.

mod certify;
mod config;
mod output;
mod run;
mod svg;
mod sweep;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mpg_lab::MpgError;

use config::FileConfig;

#[derive(Parser, Debug)]
#[command(
    name = "mpg-lab",
    version,
    about = "Exact policy-gradient dynamics in Markov potential games"
)]
struct Cli {
    /// Flat `key = value` TOML file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for seeds and sweep cells.
    #[arg(long, global = true, env = "MPG_LAB_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one dynamic over several seeds and write CSVs, a summary and charts.
    Run(RunArgs),
    /// Run the cross product of a lambda grid and a K grid.
    Sweep(SweepArgs),
    /// Write a JSON report of welfare, potential, smoothness and visitation checks.
    Certify(CertifyArgs),
    /// Write a game description as JSON.
    ExportGame(ExportArgs),
    /// Regenerate the SVG charts of a run directory from its CSVs.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct GameArgs {
    /// `coordination` or a path to a game JSON file.
    #[arg(long)]
    pub game: Option<String>,
    /// Number of agents of the coordination game.
    #[arg(long)]
    pub agents: Option<usize>,
    /// Transition noise of the coordination game.
    #[arg(long)]
    pub eps_trans: Option<f64>,
    /// Discount factor (overrides the file's value for JSON games).
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// pg, pg_logbarrier, npg, npg_br, max_gain_br, nn_pg or nn_adam.
    #[arg(long)]
    pub algo: Option<String>,
    /// Step size
    #[arg(long)]
    pub eta: Option<f64>,
    /// Log-barrier coefficient.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// NPG-BR inner-loop length.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of iterations (rounds for npg_br and max_gain_br)
    #[arg(long)]
    pub iters: Option<u64>,
    /// Number of seeds, used as 0, 1, ..., n - 1.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Explicit comma-separated seeds; overrides --seeds.
    #[arg(long, value_delimiter = ',')]
    pub seed_list: Option<Vec<u64>>,
    /// Ratio-Nash target of max_gain_br.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Record metrics every this many iterations.
    #[arg(long)]
    pub stride: Option<u64>,
    /// `conventional` or `reversed`.
    #[arg(long)]
    pub ratio_convention: Option<String>,
    /// Hidden activation of MLP policies: relu, tanh or identity.
    #[arg(long)]
    pub activation: Option<String>,
    /// Hidden width of MLP policies (default: number of states).
    #[arg(long)]
    pub width: Option<usize>,
    /// Output directory (default: out)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the SVG charts.
    #[arg(long)]
    pub no_svg: bool,
}

#[derive(Args, Debug, Default, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Comma-separated K values.
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Comma-separated alpha values of the smoothness frontier.
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    /// Target gap for the iteration bounds.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Compute the welfare optimum by enumeration even for cooperative games.
    #[arg(long)]
    pub brute_force: bool,
    /// Also fit and check reward and transition smoothness.
    #[arg(long)]
    pub reward_transition: bool,
    /// Seed of random policy sets.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct ExportArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PlotArgs {
    /// Run directory containing seed_*.csv files.
    #[arg(long)]
    pub dir: PathBuf,
}

/// Exit status: 0 on success, 3 for numerical failures, 2 for everything else.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err
                .chain()
                .any(|cause| cause.downcast_ref::<MpgError>().is_some_and(MpgError::is_numerical));
            if numerical {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs);
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            anyhow::ensure!(n >= 1, "--jobs must be at least 1");
            builder = builder.num_threads(n);
        }
        builder.build().context("building the worker pool")?
    };
    pool.install(|| match cli.command {
        Command::Run(args) => run::cmd_run(&config::resolve_run(&args, &file)?),
        Command::Sweep(args) => sweep::cmd_sweep(&config::resolve_sweep(&args, &file)?),
        Command::Certify(args) => certify::cmd_certify(&config::resolve_certify(&args, &file)?),
        Command::ExportGame(args) => export_game(&args, &file),
        Command::Plot(args) => output::plot_dir(&args.dir),
    })
}

fn export_game(args: &ExportArgs, file: &FileConfig) -> Result<()> {
    let source = config::resolve_game(&args.game, file)?;
    let game = source.load()?;
    let json = game.to_json()? + "\n";
    match args.out.as_ref().or(file.out.as_ref()) {
        Some(path) => output::write_atomic(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
