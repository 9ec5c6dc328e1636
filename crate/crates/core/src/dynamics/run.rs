use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use super::adam::{adam_step, AdamState};
use super::gradient::{log_barrier_objective_grad, table_norm, ParamTable};
use super::npg::{npg_br_round, npg_step};
use super::ratio_br::max_gain_ratio_br_round;
use super::{Algorithm, DynamicsConfig};
use crate::best_response::best_response;
use crate::error::{MpgError, Result};
use crate::eval::evaluate;
use crate::game::{init_params, softmax_policy, MarkovGame, PolicyParams, ProductPolicy};
use crate::metrics::welfare::{optimal_welfare, WelfareOptimum};
use crate::nn::{init_mlp, mlp_log_barrier_grad, mlp_policy, MlpPolicyParams};

/// Parameters of whichever policy class is being trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyState {
    Tabular(PolicyParams),
    Mlp(MlpPolicyParams),
}

impl PolicyState {
    /// Initial parameters for `config`, seeded by `config.seed`.
    pub fn initial(game: &MarkovGame, config: &DynamicsConfig) -> Self {
        if config.algorithm.is_neural() {
            let width = config.width.unwrap_or(game.num_states());
            PolicyState::Mlp(init_mlp(config.seed, game, width, config.activation))
        } else {
            PolicyState::Tabular(init_params(config.seed, game))
        }
    }

    pub fn policy(&self) -> ProductPolicy {
        match self {
            PolicyState::Tabular(p) => softmax_policy(p),
            PolicyState::Mlp(p) => mlp_policy(p),
        }
    }

    /// Gradient of `Phi(mu)` plus the log-barrier penalty.
    pub fn objective_gradient(&self, game: &MarkovGame, lambda: f64) -> Result<ParamTable> {
        match self {
            PolicyState::Tabular(p) => Ok(log_barrier_objective_grad(game, p, lambda)?.1),
            PolicyState::Mlp(p) => mlp_log_barrier_grad(game, p, lambda),
        }
    }
}

/// Which agents moved in the step that produced a row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdatedAgent {
    None,
    All,
    Agent(usize),
}

impl fmt::Display for UpdatedAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdatedAgent::None => f.write_str("none"),
            UpdatedAgent::All => f.write_str("all"),
            UpdatedAgent::Agent(i) => write!(f, "{i}"),
        }
    }
}

impl Serialize for UpdatedAgent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UpdatedAgent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.as_str() {
            "none" => Ok(UpdatedAgent::None),
            "all" => Ok(UpdatedAgent::All),
            other => other
                .parse()
                .map(UpdatedAgent::Agent)
                .map_err(|_| serde::de::Error::custom(format!("invalid updated agent '{other}'"))),
        }
    }
}

/// Metrics of the policy after `iter` updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub iter: u64,
    pub nash_gap: f64,
    /// NaN when no welfare optimum is available.
    pub poa: f64,
    pub phi_mu: f64,
    pub grad_norm: f64,
    pub updated_agent: UpdatedAgent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    pub final_params: PolicyState,
    pub config: DynamicsConfig,
    pub welfare: Option<WelfareOptimum>,
}

/// Runs `config.max_iters` rounds from the seeded initial parameters.
pub fn run_dynamics(game: &MarkovGame, config: &DynamicsConfig) -> Result<RunRecord> {
    run_dynamics_with(game, config, |_, _| {})
}

/// Like [`run_dynamics`], calling `hook` with every recorded row and the
/// parameters it describes.
pub fn run_dynamics_with(
    game: &MarkovGame,
    config: &DynamicsConfig,
    hook: impl FnMut(&RunRow, &PolicyState),
) -> Result<RunRecord> {
    run_dynamics_from(game, config, PolicyState::initial(game, config), hook)
}

/// Runs from explicit initial parameters.
pub fn run_dynamics_from(
    game: &MarkovGame,
    config: &DynamicsConfig,
    initial: PolicyState,
    mut hook: impl FnMut(&RunRow, &PolicyState),
) -> Result<RunRecord> {
    config.validate()?;
    if !game.has_potential() {
        return Err(MpgError::MissingPotential);
    }
    match (&initial, config.algorithm.is_neural()) {
        (PolicyState::Mlp(_), true) | (PolicyState::Tabular(_), false) => {}
        _ => {
            return Err(MpgError::InvalidConfig(format!(
                "initial parameters do not match algorithm {}",
                config.algorithm
            )))
        }
    }
    let welfare = match optimal_welfare(game) {
        Ok(w) => Some(w),
        Err(MpgError::TooLargeToEnumerate { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut state = initial;
    let mut adam = match &state {
        PolicyState::Mlp(p) => Some(AdamState::new(p.flatten().iter().map(Vec::len).sum())),
        PolicyState::Tabular(_) => None,
    };
    let mut rows = Vec::new();
    let first = measure(game, config, &state, welfare.as_ref(), 0, UpdatedAgent::None)?;
    hook(&first, &state);
    rows.push(first);
    let mut settled = false;
    // metrics of the fixed point, reused once the dynamic stops moving
    let mut settled_row: Option<RunRow> = None;

    for t in 1..=config.max_iters {
        let updated = if settled {
            UpdatedAgent::None
        } else {
            let (next, updated, done) = step(game, config, &state, adam.as_mut())?;
            state = next;
            settled = done;
            updated
        };
        if t % config.stride == 0 || t == config.max_iters {
            let row = match &settled_row {
                Some(r) => RunRow {
                    iter: t,
                    updated_agent: updated,
                    ..r.clone()
                },
                None => measure(game, config, &state, welfare.as_ref(), t, updated)?,
            };
            if settled && settled_row.is_none() {
                settled_row = Some(row.clone());
            }
            hook(&row, &state);
            rows.push(row);
        }
    }
    Ok(RunRecord {
        rows,
        final_params: state,
        config: config.clone(),
        welfare,
    })
}

/// One update. The flag reports that the dynamic has reached its fixed point
/// and later rounds cannot move.
fn step(
    game: &MarkovGame,
    config: &DynamicsConfig,
    state: &PolicyState,
    adam: Option<&mut AdamState>,
) -> Result<(PolicyState, UpdatedAgent, bool)> {
    use PolicyState::{Mlp, Tabular};
    Ok(match (config.algorithm, state) {
        (Algorithm::Pg | Algorithm::PgLogbarrier, Tabular(p)) => {
            let (_, grad) = log_barrier_objective_grad(game, p, config.lambda)?;
            (Tabular(p.add_scaled(&grad, config.eta)), UpdatedAgent::All, false)
        }
        (Algorithm::Npg, Tabular(p)) => (Tabular(npg_step(game, p, config.eta)?), UpdatedAgent::All, false),
        (Algorithm::NpgBr, Tabular(p)) => {
            let out = npg_br_round(game, p, config.k)?;
            let updated = out.agent.map_or(UpdatedAgent::None, UpdatedAgent::Agent);
            (Tabular(out.params), updated, false)
        }
        (Algorithm::MaxGainBr, Tabular(p)) => {
            let out = max_gain_ratio_br_round(game, p, config.epsilon, config.ratio_convention)?;
            let updated = out.agent.map_or(UpdatedAgent::None, UpdatedAgent::Agent);
            (Tabular(out.params), updated, out.is_ratio_nash)
        }
        (Algorithm::NnPg, Mlp(p)) => {
            let grad = mlp_log_barrier_grad(game, p, config.lambda)?;
            (Mlp(p.add_scaled(&grad, config.eta)?), UpdatedAgent::All, false)
        }
        (Algorithm::NnAdam, Mlp(p)) => {
            let grad = mlp_log_barrier_grad(game, p, config.lambda)?;
            let adam = adam.expect("Adam state exists for MLP runs");
            // Adam minimizes, so feed the negated ascent direction
            let negated: Vec<f64> = grad.iter().flatten().map(|g| -g).collect();
            let delta = adam_step(adam, &negated, config.eta);
            let mut offset = 0;
            let table: ParamTable = grad
                .iter()
                .map(|g| {
                    let part = delta[offset..offset + g.len()].to_vec();
                    offset += g.len();
                    part
                })
                .collect();
            (Mlp(p.add_scaled(&table, 1.0)?), UpdatedAgent::All, false)
        }
        _ => unreachable!("parameter kind checked against the algorithm"),
    })
}

fn measure(
    game: &MarkovGame,
    config: &DynamicsConfig,
    state: &PolicyState,
    welfare: Option<&WelfareOptimum>,
    iter: u64,
    updated_agent: UpdatedAgent,
) -> Result<RunRow> {
    let policy = state.policy();
    let eval = evaluate(game, &policy)?;
    let mut nash_gap = 0.0f64;
    for i in 0..game.num_agents() {
        let br = best_response(game, &policy, i)?;
        nash_gap = nash_gap.max(br.value_mu - eval.v_mu[i]);
    }
    let poa = match welfare {
        Some(w) if w.value > 0.0 => eval.welfare_mu() / w.value,
        _ => f64::NAN,
    };
    let phi_mu = eval.phi();
    if !phi_mu.is_finite() {
        return Err(MpgError::NonFiniteEntry(format!("Phi(mu) at iteration {iter}")));
    }
    let grad_norm = table_norm(&state.objective_gradient(game, config.lambda)?);
    Ok(RunRow {
        iter,
        nash_gap,
        poa,
        phi_mu,
        grad_norm,
        updated_agent,
    })
}
