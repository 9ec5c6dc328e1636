//! Flat TOML config files and their merge with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mpg_lab::dynamics::{Algorithm, DynamicsConfig, RatioConvention};
use mpg_lab::environments::{coordination_game, CoordinationSpec};
use mpg_lab::nn::Activation;
use mpg_lab::MarkovGame;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CertifyArgs, GameArgs, RunArgs, SweepArgs};

/// Every key mirrors the long flag of the same name with `-` replaced by `_`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub game: Option<String>,
    pub agents: Option<usize>,
    pub eps_trans: Option<f64>,
    pub gamma: Option<f64>,
    pub algo: Option<String>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub iters: Option<u64>,
    pub seeds: Option<usize>,
    pub seed_list: Option<Vec<u64>>,
    pub epsilon: Option<f64>,
    pub stride: Option<u64>,
    pub ratio_convention: Option<String>,
    pub activation: Option<String>,
    pub width: Option<usize>,
    pub out: Option<PathBuf>,
    pub no_svg: Option<bool>,
    pub lambda_grid: Option<Vec<f64>>,
    pub k_grid: Option<Vec<usize>>,
    pub alpha_grid: Option<Vec<f64>>,
    pub brute_force: Option<bool>,
    pub reward_transition: Option<bool>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Where the game comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameSource {
    Coordination { agents: usize, eps_trans: f64, gamma: f64 },
    File { path: PathBuf, gamma: Option<f64> },
}

impl GameSource {
    pub fn load(&self) -> Result<MarkovGame> {
        match self {
            GameSource::Coordination {
                agents,
                eps_trans,
                gamma,
            } => Ok(coordination_game(&CoordinationSpec {
                num_agents: *agents,
                eps_trans: *eps_trans,
                gamma: *gamma,
            })?),
            GameSource::File { path, gamma } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading game {}", path.display()))?;
                let game = MarkovGame::from_json(&text).with_context(|| format!("loading game {}", path.display()))?;
                match gamma {
                    Some(g) => {
                        let mut spec = game.to_spec();
                        spec.gamma = *g;
                        Ok(mpg_lab::build_game(spec)?)
                    }
                    None => Ok(game),
                }
            }
        }
    }
}

/// Fully resolved settings of `run`.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub game: GameSource,
    pub dynamics: DynamicsConfig,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub svg: bool,
}

impl RunConfig {
    /// Dynamics settings of one seed.
    pub fn for_seed(&self, seed: u64) -> DynamicsConfig {
        DynamicsConfig {
            seed,
            ..self.dynamics.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub lambda_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyConfig {
    pub game: GameSource,
    pub alpha_grid: Vec<f64>,
    pub epsilon: f64,
    pub brute_force: bool,
    pub reward_transition: bool,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn parse_enum<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let key = text.trim().to_ascii_lowercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(key)).with_context(|| format!("unknown {what} '{text}'"))
}

pub fn resolve_game(args: &GameArgs, file: &FileConfig) -> Result<GameSource> {
    let name = args
        .game
        .clone()
        .or_else(|| file.game.clone())
        .unwrap_or_else(|| "coordination".into());
    let gamma = args.gamma.or(file.gamma);
    if name == "coordination" {
        Ok(GameSource::Coordination {
            agents: args.agents.or(file.agents).unwrap_or(2),
            eps_trans: args.eps_trans.or(file.eps_trans).unwrap_or(0.1),
            gamma: gamma.unwrap_or(0.95),
        })
    } else {
        if args.agents.is_some() || args.eps_trans.is_some() {
            bail!("--agents and --eps-trans only apply to the coordination game");
        }
        Ok(GameSource::File {
            path: PathBuf::from(name),
            gamma,
        })
    }
}

pub fn resolve_run(args: &RunArgs, file: &FileConfig) -> Result<RunConfig> {
    let game = resolve_game(&args.game, file)?;
    let algorithm: Algorithm = match args.algo.as_ref().or(file.algo.as_ref()) {
        Some(name) => name.parse()?,
        None => Algorithm::Pg,
    };
    let defaults = DynamicsConfig::new(algorithm);
    let ratio_convention: RatioConvention = match args.ratio_convention.as_ref().or(file.ratio_convention.as_ref()) {
        Some(text) => parse_enum(text, "ratio convention")?,
        None => defaults.ratio_convention,
    };
    let activation: Activation = match args.activation.as_ref().or(file.activation.as_ref()) {
        Some(text) => parse_enum(text, "activation")?,
        None => defaults.activation,
    };
    let dynamics = DynamicsConfig {
        algorithm,
        eta: args.eta.or(file.eta).unwrap_or(defaults.eta),
        lambda: args.lambda.or(file.lambda).unwrap_or(defaults.lambda),
        k: args.k.or(file.k).unwrap_or(defaults.k),
        max_iters: args.iters.or(file.iters).unwrap_or(defaults.max_iters),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
        seed: 0,
        stride: args.stride.or(file.stride).unwrap_or(defaults.stride),
        ratio_convention,
        activation,
        width: args.width.or(file.width),
    };
    dynamics.validate()?;

    let seeds = match args.seed_list.clone().or_else(|| file.seed_list.clone()) {
        Some(list) => list,
        None => {
            let count = args.seeds.or(file.seeds).unwrap_or(1);
            (0..count as u64).collect()
        }
    };
    if seeds.is_empty() {
        bail!("at least one seed is required");
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        bail!("seed list contains duplicates");
    }

    Ok(RunConfig {
        game,
        dynamics,
        seeds,
        out: args
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        svg: !(args.no_svg || file.no_svg.unwrap_or(false)),
    })
}

pub fn resolve_sweep(args: &SweepArgs, file: &FileConfig) -> Result<SweepConfig> {
    let base = resolve_run(&args.run, file)?;
    let lambda_grid = args
        .lambda_grid
        .clone()
        .or_else(|| file.lambda_grid.clone())
        .unwrap_or_default();
    let k_grid = args.k_grid.clone().or_else(|| file.k_grid.clone()).unwrap_or_default();
    for &lambda in &lambda_grid {
        DynamicsConfig {
            lambda,
            ..base.dynamics.clone()
        }
        .validate()?;
    }
    for &k in &k_grid {
        DynamicsConfig {
            k,
            ..base.dynamics.clone()
        }
        .validate()?;
    }
    Ok(SweepConfig {
        base,
        lambda_grid,
        k_grid,
    })
}

pub fn resolve_certify(args: &CertifyArgs, file: &FileConfig) -> Result<CertifyConfig> {
    let alpha_grid = args
        .alpha_grid
        .clone()
        .or_else(|| file.alpha_grid.clone())
        .unwrap_or_else(|| (1..=10).map(|k| k as f64 / 10.0).collect());
    if alpha_grid.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        bail!("alpha values must be finite and >= 0");
    }
    let epsilon = args.epsilon.or(file.epsilon).unwrap_or(0.1);
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        bail!("epsilon must be positive, got {epsilon}");
    }
    Ok(CertifyConfig {
        game: resolve_game(&args.game, file)?,
        alpha_grid,
        epsilon,
        brute_force: args.brute_force || file.brute_force.unwrap_or(false),
        reward_transition: args.reward_transition || file.reward_transition.unwrap_or(false),
        seed: args.seed.or(file.seed).unwrap_or(0),
        out: args.out.clone().or_else(|| file.out.clone()),
    })
}
