use anyhow::{Context, Result};
use mpg_lab::dynamics::run_dynamics;
use mpg_lab::MarkovGame;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::output::{self, Summary};

#[derive(Serialize)]
struct Conventions {
    joint_action_order: &'static str,
    state_bits: &'static str,
    best_response_tie_break: &'static str,
    npg_br_commit: &'static str,
    max_gain_br_selection: &'static str,
    ratio_convention: mpg_lab::dynamics::RatioConvention,
    visitation_measure: &'static str,
    poa_without_optimum: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    git_describe: &'static str,
    config: &'a RunConfig,
    conventions: Conventions,
    files: Vec<String>,
}

fn manifest(config: &RunConfig) -> Manifest<'_> {
    let mut files: Vec<String> = config.seeds.iter().map(|s| format!("seed_{s}.csv")).collect();
    files.push("summary.json".into());
    if config.svg {
        files.push("nash_gap.svg".into());
        files.push("poa.svg".into());
    }
    Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        git_describe: env!("MPG_LAB_GIT_DESCRIBE"),
        config,
        conventions: Conventions {
            joint_action_order: "mixed radix, agent 0 most significant",
            state_bits: "coordination states list local bits with agent 0 as the most significant bit",
            best_response_tie_break: "lowest action index among values within 1e-12 (1 + |max|)",
            npg_br_commit: "largest potential gain, lowest agent index on ties, committed only if the gain is positive",
            max_gain_br_selection:
                "largest absolute best-response gain among ratio-violating agents, lowest index on ties",
            ratio_convention: config.dynamics.ratio_convention,
            visitation_measure: "unnormalized discounted visitation with total mass 1 / (1 - gamma)",
            poa_without_optimum: "NaN in CSVs, null in JSON",
        },
        files,
    }
}

/// Runs every seed, writes its CSV, then the summary, manifest and charts.
pub fn execute_run(game: &MarkovGame, config: &RunConfig) -> Result<Summary> {
    std::fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| -> Result<_> {
            let record = run_dynamics(game, &config.for_seed(seed)).with_context(|| format!("seed {seed}"))?;
            let bytes = output::rows_to_csv(&record.rows)?;
            output::write_atomic(&output::seed_csv_path(&config.out, seed), &bytes)?;
            Ok(record.rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = output::summarize(&config.seeds, &runs)?;
    output::write_json(&config.out.join("summary.json"), &summary)?;
    output::write_json(&config.out.join("manifest.json"), &manifest(config))?;
    if config.svg {
        output::plot_dir(&config.out)?;
    }
    Ok(summary)
}

pub fn cmd_run(config: &RunConfig) -> Result<()> {
    let game = config.game.load()?;
    let summary = execute_run(&game, config)?;
    println!(
        "{} over {} seed(s): final mean nash_gap {} poa {} -> {}",
        config.dynamics.algorithm,
        config.seeds.len(),
        fmt_opt(summary.final_mean.nash_gap),
        fmt_opt(summary.final_mean.poa),
        config.out.display()
    );
    Ok(())
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}
