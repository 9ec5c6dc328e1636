use serde::{Deserialize, Serialize};

use crate::best_response::{solve_policy_iteration, InducedMdp};
use crate::error::{MpgError, Result};
use crate::eval::evaluate;
use crate::game::{deterministic_maps, MarkovGame, ProductPolicy};

/// Largest number of deterministic product policies the brute-force path enumerates.
pub const MAX_BRUTE_FORCE: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WelfareMethod {
    /// Joint-MDP solve for a shared reward; exact over all product policies.
    CooperativeExact,
    /// Maximum over deterministic product policies; a lower bound for general games.
    BruteForce,
}

/// Largest welfare `sum_i V^i(mu)` and a deterministic product policy attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelfareOptimum {
    pub value: f64,
    /// `argmax[i][s]` is agent `i`'s action in state `s`.
    pub argmax: Vec<Vec<usize>>,
    pub method: WelfareMethod,
}

impl WelfareOptimum {
    pub fn policy(&self, game: &MarkovGame) -> Result<ProductPolicy> {
        ProductPolicy::deterministic(game, &self.argmax)
    }

    /// Whether `value` is the exact optimum rather than a lower bound.
    pub fn is_exact(&self) -> bool {
        self.method == WelfareMethod::CooperativeExact
    }
}

/// Splits a per-state joint-action map into per-agent maps.
pub fn split_joint_map(game: &MarkovGame, joint_map: &[usize]) -> Vec<Vec<usize>> {
    (0..game.num_agents())
        .map(|i| joint_map.iter().map(|&j| game.local_action(j, i)).collect())
        .collect()
}

/// The MDP over joint actions whose reward is the welfare `sum_i r^i`.
fn welfare_mdp(game: &MarkovGame) -> InducedMdp {
    let mut mdp = InducedMdp::joint(game, 0);
    for s in 0..game.num_states() {
        for j in 0..game.num_joint_actions() {
            mdp.reward[s * game.num_joint_actions() + j] = (0..game.num_agents()).map(|i| game.reward(i, s, j)).sum();
        }
    }
    mdp
}

/// Optimal welfare: exact for cooperative games, brute force otherwise.
pub fn optimal_welfare(game: &MarkovGame) -> Result<WelfareOptimum> {
    if game.is_cooperative() {
        let br = solve_policy_iteration(&InducedMdp::joint(game, 0))?;
        Ok(WelfareOptimum {
            value: game.num_agents() as f64 * br.value_mu,
            argmax: split_joint_map(game, &br.policy),
            method: WelfareMethod::CooperativeExact,
        })
    } else {
        optimal_welfare_brute_force(game)
    }
}

/// Maximum welfare over all deterministic product policies (first maximizer
/// in enumeration order).
pub fn optimal_welfare_brute_force(game: &MarkovGame) -> Result<WelfareOptimum> {
    let count = game.deterministic_policy_count();
    if count > MAX_BRUTE_FORCE {
        return Err(MpgError::TooLargeToEnumerate {
            count,
            limit: MAX_BRUTE_FORCE,
        });
    }
    let mdp = welfare_mdp(game);
    let mut best: Option<(f64, Vec<usize>)> = None;
    // a deterministic product policy is exactly one joint action per state
    for map in deterministic_maps(game.num_states(), game.num_joint_actions()) {
        let values = mdp.evaluate(&map)?;
        let value: f64 = game.mu().iter().zip(&values).map(|(m, v)| m * v).sum();
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, map));
        }
    }
    let (value, map) = best.expect("at least one deterministic policy");
    Ok(WelfareOptimum {
        value,
        argmax: split_joint_map(game, &map),
        method: WelfareMethod::BruteForce,
    })
}

/// Price of anarchy `sum_i V^i_pi(mu) / optimum.value`.
pub fn poa(game: &MarkovGame, policy: &ProductPolicy, optimum: &WelfareOptimum) -> Result<f64> {
    poa_from_welfare(evaluate(game, policy)?.welfare_mu(), optimum)
}

pub fn poa_from_welfare(welfare: f64, optimum: &WelfareOptimum) -> Result<f64> {
    if optimum.value <= 0.0 {
        return Err(MpgError::DegenerateOptimum(optimum.value));
    }
    Ok(welfare / optimum.value)
}
