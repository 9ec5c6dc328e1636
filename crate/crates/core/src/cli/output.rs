//! Run records on disk: per-seed CSVs, seed summaries, manifests and charts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mpg_lab::dynamics::RunRow;
use serde::Serialize;

use super::svg::{line_chart, Series};

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(err) = result {
        let _ = fs::remove_file(&tmp);
        return Err(err).with_context(|| format!("writing {}", path.display()));
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn seed_csv_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.csv"))
}

pub fn rows_to_csv(rows: &[RunRow]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    if rows.is_empty() {
        writer.write_record(["iter", "nash_gap", "poa", "phi_mu", "grad_norm", "updated_agent"])?;
    }
    writer.into_inner().context("flushing CSV")
}

pub fn read_rows(path: &Path) -> Result<Vec<RunRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<RunRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// `seed_*.csv` files of a run directory, ordered by seed.
pub fn seed_csvs(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(seed) = name.strip_prefix("seed_").and_then(|r| r.strip_suffix(".csv")) {
            if let Ok(seed) = seed.parse::<u64>() {
                found.push((seed, path));
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Mean and standard error of one metric at every recorded iteration.
/// Entries are `None` when no seed produced a finite value.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MetricSummary {
    pub mean: Vec<Option<f64>>,
    pub stderr: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FinalValues {
    pub nash_gap: Option<f64>,
    pub poa: Option<f64>,
    pub phi_mu: Option<f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Summary {
    pub seeds: Vec<u64>,
    pub iter: Vec<u64>,
    pub nash_gap: MetricSummary,
    pub poa: MetricSummary,
    pub phi_mu: MetricSummary,
    pub grad_norm: MetricSummary,
    pub final_mean: FinalValues,
}

fn mean_stderr(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return (None, None);
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    if finite.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

fn metric(runs: &[Vec<RunRow>], pick: impl Fn(&RunRow) -> f64) -> MetricSummary {
    let len = runs[0].len();
    let (mean, stderr) = (0..len)
        .map(|t| {
            let column: Vec<f64> = runs.iter().map(|rows| pick(&rows[t])).collect();
            mean_stderr(&column)
        })
        .unzip();
    MetricSummary { mean, stderr }
}

/// Aggregates runs that share one iteration grid.
pub fn summarize(seeds: &[u64], runs: &[Vec<RunRow>]) -> Result<Summary> {
    if runs.is_empty() {
        bail!("no runs to summarize");
    }
    let iter: Vec<u64> = runs[0].iter().map(|r| r.iter).collect();
    for rows in runs {
        if rows.iter().map(|r| r.iter).ne(iter.iter().copied()) {
            bail!("runs were recorded on different iteration grids");
        }
    }
    let nash_gap = metric(runs, |r| r.nash_gap);
    let poa = metric(runs, |r| r.poa);
    let phi_mu = metric(runs, |r| r.phi_mu);
    let grad_norm = metric(runs, |r| r.grad_norm);
    let last = |m: &MetricSummary| m.mean.last().copied().flatten();
    let final_mean = FinalValues {
        nash_gap: last(&nash_gap),
        poa: last(&poa),
        phi_mu: last(&phi_mu),
    };
    Ok(Summary {
        seeds: seeds.to_vec(),
        iter,
        nash_gap,
        poa,
        phi_mu,
        grad_norm,
        final_mean,
    })
}

/// Reads every seed CSV of `dir` and aggregates them.
pub fn summarize_dir(dir: &Path) -> Result<Summary> {
    let files = seed_csvs(dir)?;
    if files.is_empty() {
        bail!("no seed_*.csv files in {}", dir.display());
    }
    let seeds: Vec<u64> = files.iter().map(|(s, _)| *s).collect();
    let runs = files.iter().map(|(_, p)| read_rows(p)).collect::<Result<Vec<_>>>()?;
    summarize(&seeds, &runs)
}

fn series(summary: &Summary, m: &MetricSummary) -> Series {
    let mut points = Vec::new();
    for (t, (mean, se)) in summary.iter.iter().zip(m.mean.iter().zip(&m.stderr)) {
        if let (Some(mean), Some(se)) = (mean, se) {
            points.push((*t as f64, *mean, *se));
        }
    }
    Series { points }
}

/// Regenerates `nash_gap.svg` and `poa.svg` from the CSVs of `dir`.
pub fn plot_dir(dir: &Path) -> Result<()> {
    let summary = summarize_dir(dir)?;
    let n = summary.seeds.len();
    let caption = format!("mean and standard error over {n} seed{}", if n == 1 { "" } else { "s" });
    let gap = line_chart("Nash-gap", &caption, &series(&summary, &summary.nash_gap));
    write_atomic(&dir.join("nash_gap.svg"), gap.as_bytes())?;
    let poa = line_chart("POA", &caption, &series(&summary, &summary.poa));
    write_atomic(&dir.join("poa.svg"), poa.as_bytes())?;
    Ok(())
}
