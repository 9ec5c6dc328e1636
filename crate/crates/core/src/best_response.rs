//! Exact single-agent best responses.
//!
//! Freezing every other agent turns the game into a finite MDP for the
//! remaining one; policy iteration with exact evaluation solves it.

use nalgebra::DMatrix;

use crate::error::{MpgError, Result};
use crate::eval::resolvent;
use crate::game::{MarkovGame, ProductPolicy};

/// A finite MDP with tabular transitions `p[(s * A + a) * S + s']`.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedMdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub transition: Vec<f64>,
    /// `reward[s * A + a]`
    pub reward: Vec<f64>,
    pub gamma: f64,
    pub mu: Vec<f64>,
}

/// Optimal values and a deterministic optimal policy.
#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub values: Vec<f64>,
    pub value_mu: f64,
    pub policy: Vec<usize>,
    pub iterations: u64,
}

impl InducedMdp {
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    /// The MDP over joint actions with reward `r^agent`; used for the
    /// cooperative welfare optimum.
    pub fn joint(game: &MarkovGame, agent: usize) -> InducedMdp {
        let n = game.num_states();
        let j = game.num_joint_actions();
        let mut transition = Vec::with_capacity(n * j * n);
        let mut reward = Vec::with_capacity(n * j);
        for s in 0..n {
            for a in 0..j {
                transition.extend_from_slice(game.transition_row(s, a));
                reward.push(game.reward(agent, s, a));
            }
        }
        InducedMdp {
            num_states: n,
            num_actions: j,
            transition,
            reward,
            gamma: game.gamma(),
            mu: game.mu().to_vec(),
        }
    }

    /// Exact values of a deterministic policy.
    pub fn evaluate(&self, policy: &[usize]) -> Result<Vec<f64>> {
        let n = self.num_states;
        let mut p = DMatrix::zeros(n, n);
        let mut r = vec![0.0; n];
        for s in 0..n {
            let a = policy[s];
            for (t, &q) in self.transition_row(s, a).iter().enumerate() {
                p[(s, t)] = q;
            }
            r[s] = self.reward(s, a);
        }
        Ok(resolvent(&p, self.gamma)?.apply(&r))
    }

    /// `Q(s, a) = r(s, a) + gamma E_{s'} V(s')`.
    pub fn q_value(&self, values: &[f64], s: usize, a: usize) -> f64 {
        let future: f64 = self.transition_row(s, a).iter().zip(values).map(|(p, v)| p * v).sum();
        self.reward(s, a) + self.gamma * future
    }

    /// Greedy policy; among near-ties the lowest action index wins.
    pub fn greedy(&self, values: &[f64]) -> Vec<usize> {
        (0..self.num_states)
            .map(|s| {
                let qs: Vec<f64> = (0..self.num_actions).map(|a| self.q_value(values, s, a)).collect();
                let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-12 * (1.0 + best.abs());
                qs.iter().position(|&q| q >= best - tol).unwrap_or(0)
            })
            .collect()
    }

    /// Max-norm Bellman optimality residual of `values`.
    pub fn bellman_residual(&self, values: &[f64]) -> f64 {
        (0..self.num_states)
            .map(|s| {
                let best = (0..self.num_actions)
                    .map(|a| self.q_value(values, s, a))
                    .fold(f64::NEG_INFINITY, f64::max);
                (best - values[s]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The MDP faced by `agent` when every other agent plays `policy`.
pub fn induce_mdp(game: &MarkovGame, policy: &ProductPolicy, agent: usize) -> Result<InducedMdp> {
    policy.check_dims(game)?;
    if agent >= game.num_agents() {
        return Err(MpgError::DimensionMismatch(format!(
            "agent {agent} out of range for {} agents",
            game.num_agents()
        )));
    }
    let n = game.num_states();
    let c = game.num_actions(agent);
    let mut transition = vec![0.0; n * c * n];
    let mut reward = vec![0.0; n * c];
    for s in 0..n {
        for joint in 0..game.num_joint_actions() {
            let own = game.local_action(joint, agent);
            let weight: f64 = (0..game.num_agents())
                .filter(|&j| j != agent)
                .map(|j| policy.prob(j, s, game.local_action(joint, j)))
                .product();
            if weight == 0.0 {
                continue;
            }
            reward[s * c + own] += weight * game.reward(agent, s, joint);
            let row = &mut transition[(s * c + own) * n..(s * c + own + 1) * n];
            for (out, &p) in row.iter_mut().zip(game.transition_row(s, joint)) {
                *out += weight * p;
            }
        }
    }
    Ok(InducedMdp {
        num_states: n,
        num_actions: c,
        transition,
        reward,
        gamma: game.gamma(),
        mu: game.mu().to_vec(),
    })
}

/// Policy iteration from the all-zeros policy.
pub fn solve_policy_iteration(mdp: &InducedMdp) -> Result<BestResponse> {
    solve_policy_iteration_traced(mdp, &vec![0; mdp.num_states]).map(|(br, _)| br)
}

/// Policy iteration from `initial`, also returning the value vector of every sweep.
pub fn solve_policy_iteration_traced(mdp: &InducedMdp, initial: &[usize]) -> Result<(BestResponse, Vec<Vec<f64>>)> {
    let limit = (mdp.num_actions as f64)
        .powi(mdp.num_states as i32)
        .min(u64::MAX as f64) as u64;
    let mut policy = initial.to_vec();
    let mut trace = Vec::new();
    let mut iterations = 0u64;
    loop {
        iterations += 1;
        if iterations > limit.max(1).saturating_add(1) {
            return Err(MpgError::NonTermination(iterations - 1));
        }
        let values = mdp.evaluate(&policy)?;
        let next = mdp.greedy(&values);
        trace.push(values.clone());
        if next == policy {
            let value_mu = mdp.mu.iter().zip(&values).map(|(m, v)| m * v).sum();
            return Ok((
                BestResponse {
                    values,
                    value_mu,
                    policy,
                    iterations,
                },
                trace,
            ));
        }
        policy = next;
    }
}

/// Best response of `agent` against `policy`.
pub fn best_response(game: &MarkovGame, policy: &ProductPolicy, agent: usize) -> Result<BestResponse> {
    solve_policy_iteration(&induce_mdp(game, policy, agent)?)
}
