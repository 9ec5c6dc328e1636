use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{RunConfig, SweepConfig};
use super::output;
use super::run::{execute_run, fmt_opt};

#[derive(Clone, Debug, Serialize)]
struct CellReport {
    dir: String,
    lambda: f64,
    k: usize,
    final_mean_poa: Option<f64>,
    final_mean_nash_gap: Option<f64>,
}

#[derive(Serialize)]
struct SweepReport {
    selection_rule: &'static str,
    cells: Vec<CellReport>,
    winner: Option<usize>,
}

fn cells(config: &SweepConfig) -> Vec<(String, RunConfig)> {
    let base = &config.base;
    let lambdas: Vec<Option<f64>> = if config.lambda_grid.is_empty() {
        vec![None]
    } else {
        config.lambda_grid.iter().copied().map(Some).collect()
    };
    let ks: Vec<Option<usize>> = if config.k_grid.is_empty() {
        vec![None]
    } else {
        config.k_grid.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for lambda in &lambdas {
        for k in &ks {
            let mut cell = base.clone();
            let mut name = Vec::new();
            if let Some(l) = lambda {
                cell.dynamics.lambda = *l;
                name.push(format!("lambda_{l}"));
            }
            if let Some(k) = k {
                cell.dynamics.k = *k;
                name.push(format!("k_{k}"));
            }
            let name = if name.is_empty() {
                "base".to_string()
            } else {
                name.join("_")
            };
            cell.out = base.out.join(&name);
            out.push((name, cell));
        }
    }
    out
}

/// Highest final mean POA, first cell on ties; cells without a POA never win.
fn select_winner(cells: &[CellReport]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, cell) in cells.iter().enumerate() {
        if let Some(p) = cell.final_mean_poa {
            if best.is_none_or(|b| p > cells[b].final_mean_poa.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(i);
            }
        }
    }
    best
}

pub fn cmd_sweep(config: &SweepConfig) -> Result<()> {
    let game = config.base.game.load()?;
    let cells = cells(config);
    let summaries = cells
        .par_iter()
        .map(|(_, cell)| execute_run(&game, cell))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<CellReport> = cells
        .iter()
        .zip(&summaries)
        .map(|((name, cell), summary)| CellReport {
            dir: name.clone(),
            lambda: cell.dynamics.lambda,
            k: cell.dynamics.k,
            final_mean_poa: summary.final_mean.poa,
            final_mean_nash_gap: summary.final_mean.nash_gap,
        })
        .collect();
    let winner = select_winner(&reports);
    for (i, r) in reports.iter().enumerate() {
        let mark = if Some(i) == winner { " *" } else { "" };
        println!(
            "{}: final mean poa {} nash_gap {}{mark}",
            r.dir,
            fmt_opt(r.final_mean_poa),
            fmt_opt(r.final_mean_nash_gap)
        );
    }
    output::write_json(
        &config.base.out.join("sweep_report.json"),
        &SweepReport {
            selection_rule: "highest final mean POA, first cell on ties",
            cells: reports,
            winner,
        },
    )
}
