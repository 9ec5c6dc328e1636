//! Tabular Markov games, softmax product policies and potential checks.
//!
//! Joint actions are flattened into a mixed-radix index with agent 0 as the
//! most significant digit. The same ordering is used by the JSON game format.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{MpgError, Result};

/// Tolerance for row-stochasticity and initial-distribution checks.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Raw, unvalidated game description. This is also the on-disk JSON format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GameSpec {
    pub num_agents: usize,
    pub action_counts: Vec<usize>,
    pub num_states: usize,
    /// `transition[s][a_joint][s']`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `rewards[i][s][a_joint]`
    pub rewards: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<Vec<f64>>>,
    pub mu: Vec<f64>,
    pub gamma: f64,
}

/// A validated finite Markov game. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovGame {
    num_agents: usize,
    num_states: usize,
    action_counts: Vec<usize>,
    num_joint: usize,
    // strides[i] = product of action counts of agents after i
    strides: Vec<usize>,
    transition: Vec<f64>,
    rewards: Vec<f64>,
    potential: Option<Vec<f64>>,
    mu: Vec<f64>,
    gamma: f64,
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(MpgError::NonFiniteEntry(what.to_string()))
    }
}

/// Validates a raw description and returns the game.
///
/// Transition rows and `mu` must sum to one within [`STOCHASTIC_TOL`]; accepted
/// rows are renormalized so downstream solves see exact stochasticity.
pub fn build_game(spec: GameSpec) -> Result<MarkovGame> {
    let GameSpec {
        num_agents,
        action_counts,
        num_states,
        transition,
        rewards,
        potential,
        mu,
        gamma,
    } = spec;

    if num_agents == 0 || num_states == 0 {
        return Err(MpgError::ShapeMismatch(
            "num_agents and num_states must be positive".into(),
        ));
    }
    if action_counts.len() != num_agents {
        return Err(MpgError::ShapeMismatch(format!(
            "action_counts has {} entries for {} agents",
            action_counts.len(),
            num_agents
        )));
    }
    if action_counts.contains(&0) {
        return Err(MpgError::ShapeMismatch("every agent needs at least one action".into()));
    }
    let num_joint = action_counts
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .ok_or_else(|| MpgError::ShapeMismatch("joint action space overflows".into()))?;
    if !gamma.is_finite() {
        return Err(MpgError::NonFiniteEntry("gamma".into()));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(MpgError::InvalidDiscount(gamma));
    }

    if transition.len() != num_states {
        return Err(MpgError::ShapeMismatch(format!(
            "transition has {} states, expected {}",
            transition.len(),
            num_states
        )));
    }
    let mut flat_p = Vec::with_capacity(num_states * num_joint * num_states);
    for (s, per_action) in transition.iter().enumerate() {
        if per_action.len() != num_joint {
            return Err(MpgError::ShapeMismatch(format!(
                "transition[{s}] has {} joint actions, expected {num_joint}",
                per_action.len()
            )));
        }
        for (a, row) in per_action.iter().enumerate() {
            if row.len() != num_states {
                return Err(MpgError::ShapeMismatch(format!(
                    "transition[{s}][{a}] has {} entries, expected {num_states}",
                    row.len()
                )));
            }
            check_finite(row.iter().copied(), &format!("transition[{s}][{a}]"))?;
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MpgError::NonStochasticRow {
                    state: s,
                    action: a,
                    sum,
                });
            }
            flat_p.extend(row.iter().map(|p| p / sum));
        }
    }

    if rewards.len() != num_agents {
        return Err(MpgError::ShapeMismatch(format!(
            "rewards has {} agents, expected {num_agents}",
            rewards.len()
        )));
    }
    let mut flat_r = Vec::with_capacity(num_agents * num_states * num_joint);
    for (i, per_state) in rewards.iter().enumerate() {
        let flat = flatten_table(per_state, num_states, num_joint, &format!("rewards[{i}]"))?;
        flat_r.extend(flat);
    }

    let flat_phi = match &potential {
        Some(table) => Some(flatten_table(table, num_states, num_joint, "potential")?),
        None => None,
    };

    if mu.len() != num_states {
        return Err(MpgError::ShapeMismatch(format!(
            "mu has {} entries, expected {num_states}",
            mu.len()
        )));
    }
    check_finite(mu.iter().copied(), "mu")?;
    let mu_sum: f64 = mu.iter().sum();
    if mu.iter().any(|&m| m < 0.0) || (mu_sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(MpgError::InvalidDistribution(format!("mu sums to {mu_sum}")));
    }
    let mu = mu.iter().map(|m| m / mu_sum).collect();

    let mut strides = vec![1usize; num_agents];
    for i in (0..num_agents.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * action_counts[i + 1];
    }

    Ok(MarkovGame {
        num_agents,
        num_states,
        action_counts,
        num_joint,
        strides,
        transition: flat_p,
        rewards: flat_r,
        potential: flat_phi,
        mu,
        gamma,
    })
}

fn flatten_table(table: &[Vec<f64>], rows: usize, cols: usize, what: &str) -> Result<Vec<f64>> {
    if table.len() != rows {
        return Err(MpgError::ShapeMismatch(format!(
            "{what} has {} states, expected {rows}",
            table.len()
        )));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for (s, row) in table.iter().enumerate() {
        if row.len() != cols {
            return Err(MpgError::ShapeMismatch(format!(
                "{what}[{s}] has {} joint actions, expected {cols}",
                row.len()
            )));
        }
        check_finite(row.iter().copied(), &format!("{what}[{s}]"))?;
        out.extend_from_slice(row);
    }
    Ok(out)
}

impl MarkovGame {
    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_actions(&self, agent: usize) -> usize {
        self.action_counts[agent]
    }

    pub fn max_actions(&self) -> usize {
        self.action_counts.iter().copied().max().unwrap_or(1)
    }

    /// Size of the joint action space.
    pub fn num_joint_actions(&self) -> usize {
        self.num_joint
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    /// Next-state distribution `P(. | s, a_joint)`.
    pub fn transition_row(&self, s: usize, joint: usize) -> &[f64] {
        let start = (s * self.num_joint + joint) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    pub fn reward(&self, agent: usize, s: usize, joint: usize) -> f64 {
        self.rewards[(agent * self.num_states + s) * self.num_joint + joint]
    }

    /// `r^i[s][.]` over joint actions.
    pub fn reward_row(&self, agent: usize, s: usize) -> &[f64] {
        let start = (agent * self.num_states + s) * self.num_joint;
        &self.rewards[start..start + self.num_joint]
    }

    pub fn potential_row(&self, s: usize) -> Option<&[f64]> {
        self.potential
            .as_ref()
            .map(|phi| &phi[s * self.num_joint..(s + 1) * self.num_joint])
    }

    /// Local action of `agent` inside a flattened joint action.
    pub fn local_action(&self, joint: usize, agent: usize) -> usize {
        (joint / self.strides[agent]) % self.action_counts[agent]
    }

    /// Flattens per-agent local actions into a joint index.
    pub fn joint_index(&self, actions: &[usize]) -> usize {
        actions.iter().zip(&self.strides).map(|(a, stride)| a * stride).sum()
    }

    /// Replaces the local action of `agent` inside `joint`.
    pub fn with_local_action(&self, joint: usize, agent: usize, action: usize) -> usize {
        let current = self.local_action(joint, agent);
        joint - current * self.strides[agent] + action * self.strides[agent]
    }

    /// `(min, max)` over all reward entries of all agents.
    pub fn reward_bounds(&self) -> (f64, f64) {
        min_max(&self.rewards)
    }

    /// `(Phi_min, Phi_max) = (phi_min, phi_max) / (1 - gamma)`.
    pub fn potential_bounds(&self) -> Option<(f64, f64)> {
        self.potential.as_ref().map(|phi| {
            let (lo, hi) = min_max(phi);
            (lo / (1.0 - self.gamma), hi / (1.0 - self.gamma))
        })
    }

    /// True when every agent receives the same reward tensor.
    pub fn is_cooperative(&self) -> bool {
        let block = self.num_states * self.num_joint;
        let first = &self.rewards[..block];
        (1..self.num_agents).all(|i| &self.rewards[i * block..(i + 1) * block] == first)
    }

    /// Serializes back to the raw description.
    pub fn to_spec(&self) -> GameSpec {
        let s = self.num_states;
        let j = self.num_joint;
        GameSpec {
            num_agents: self.num_agents,
            action_counts: self.action_counts.clone(),
            num_states: s,
            transition: (0..s)
                .map(|st| (0..j).map(|a| self.transition_row(st, a).to_vec()).collect())
                .collect(),
            rewards: (0..self.num_agents)
                .map(|i| (0..s).map(|st| self.reward_row(i, st).to_vec()).collect())
                .collect(),
            potential: self
                .potential
                .as_ref()
                .map(|_| (0..s).map(|st| self.potential_row(st).unwrap().to_vec()).collect()),
            mu: self.mu.clone(),
            gamma: self.gamma,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_spec())?)
    }

    pub fn from_json(text: &str) -> Result<MarkovGame> {
        build_game(serde_json::from_str(text)?)
    }

    /// Number of deterministic product policies, as a float to avoid overflow.
    pub fn deterministic_policy_count(&self) -> f64 {
        self.action_counts
            .iter()
            .map(|&c| (c as f64).powi(self.num_states as i32))
            .product()
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Per-agent tabular softmax logits `theta[i][s * |A^i| + a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    num_states: usize,
    action_counts: Vec<usize>,
    theta: Vec<Vec<f64>>,
}

impl PolicyParams {
    pub fn zeros(game: &MarkovGame) -> Self {
        PolicyParams {
            num_states: game.num_states(),
            action_counts: game.action_counts().to_vec(),
            theta: game
                .action_counts()
                .iter()
                .map(|&c| vec![0.0; c * game.num_states()])
                .collect(),
        }
    }

    /// Builds parameters from per-agent flat tables, checking shape and finiteness.
    pub fn from_tables(game: &MarkovGame, theta: Vec<Vec<f64>>) -> Result<Self> {
        if theta.len() != game.num_agents() {
            return Err(MpgError::ShapeMismatch(format!(
                "params have {} agents, game has {}",
                theta.len(),
                game.num_agents()
            )));
        }
        for (i, table) in theta.iter().enumerate() {
            if table.len() != game.num_states() * game.num_actions(i) {
                return Err(MpgError::ShapeMismatch(format!(
                    "params for agent {i} have {} entries, expected {}",
                    table.len(),
                    game.num_states() * game.num_actions(i)
                )));
            }
            check_finite(table.iter().copied(), &format!("theta[{i}]"))?;
        }
        Ok(PolicyParams {
            num_states: game.num_states(),
            action_counts: game.action_counts().to_vec(),
            theta,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.theta.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.theta[i]
    }

    pub fn agent_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.theta[i]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn row(&self, i: usize, s: usize) -> &[f64] {
        let c = self.action_counts[i];
        &self.theta[i][s * c..(s + 1) * c]
    }

    pub fn get(&self, i: usize, s: usize, a: usize) -> f64 {
        self.theta[i][s * self.action_counts[i] + a]
    }

    pub fn set(&mut self, i: usize, s: usize, a: usize, value: f64) {
        let c = self.action_counts[i];
        self.theta[i][s * c + a] = value;
    }

    /// Total number of logits.
    pub fn len(&self) -> usize {
        self.theta.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenation of all agents' tables.
    pub fn flatten(&self) -> Vec<f64> {
        self.theta.iter().flatten().copied().collect()
    }

    /// Inverse of [`PolicyParams::flatten`].
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.len(), "flat parameter length");
        let mut out = self.clone();
        let mut offset = 0;
        for table in &mut out.theta {
            let n = table.len();
            table.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        out
    }

    /// `self + scale * direction`, where `direction` has the same shape.
    pub fn add_scaled(&self, direction: &[Vec<f64>], scale: f64) -> Self {
        let mut out = self.clone();
        for (table, dir) in out.theta.iter_mut().zip(direction) {
            for (t, d) in table.iter_mut().zip(dir) {
                *t += scale * d;
            }
        }
        out
    }
}

/// Per-agent per-state action distributions, `probs[i][s * |A^i| + a]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductPolicy {
    num_states: usize,
    action_counts: Vec<usize>,
    probs: Vec<Vec<f64>>,
}

impl ProductPolicy {
    pub(crate) fn from_parts(num_states: usize, action_counts: Vec<usize>, probs: Vec<Vec<f64>>) -> Self {
        ProductPolicy {
            num_states,
            action_counts,
            probs,
        }
    }

    /// Uniform play for every agent.
    pub fn uniform(game: &MarkovGame) -> Self {
        softmax_policy(&PolicyParams::zeros(game))
    }

    /// Builds a policy from explicit per-agent tables; each row must be a
    /// distribution within 1e-9.
    pub fn from_tables(game: &MarkovGame, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != game.num_agents() {
            return Err(MpgError::DimensionMismatch(format!(
                "policy has {} agents, game has {}",
                probs.len(),
                game.num_agents()
            )));
        }
        for (i, table) in probs.iter().enumerate() {
            let c = game.num_actions(i);
            if table.len() != c * game.num_states() {
                return Err(MpgError::DimensionMismatch(format!(
                    "policy table for agent {i} has {} entries, expected {}",
                    table.len(),
                    c * game.num_states()
                )));
            }
            for (s, row) in table.chunks(c).enumerate() {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(MpgError::InvalidDistribution(format!(
                        "policy row (agent {i}, state {s}) sums to {sum}"
                    )));
                }
            }
        }
        Ok(ProductPolicy {
            num_states: game.num_states(),
            action_counts: game.action_counts().to_vec(),
            probs,
        })
    }

    /// Deterministic product policy: `actions[i][s]` is agent `i`'s action in state `s`.
    pub fn deterministic(game: &MarkovGame, actions: &[Vec<usize>]) -> Result<Self> {
        let probs = actions
            .iter()
            .enumerate()
            .map(|(i, per_state)| deterministic_table(game.num_actions(i), per_state))
            .collect();
        Self::from_tables(game, probs)
    }

    pub fn num_agents(&self) -> usize {
        self.probs.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// `pi^i(. | s)`.
    pub fn row(&self, i: usize, s: usize) -> &[f64] {
        let c = self.action_counts[i];
        &self.probs[i][s * c..(s + 1) * c]
    }

    pub fn prob(&self, i: usize, s: usize, a: usize) -> f64 {
        self.probs[i][s * self.action_counts[i] + a]
    }

    pub fn agent_table(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// Probability of joint action `joint` in state `s` under the product policy.
    pub fn joint_prob(&self, game: &MarkovGame, s: usize, joint: usize) -> f64 {
        (0..self.num_agents())
            .map(|i| self.prob(i, s, game.local_action(joint, i)))
            .product()
    }

    /// Joint action distribution in state `s`, indexed by flattened joint action.
    pub fn joint_distribution(&self, game: &MarkovGame, s: usize) -> Vec<f64> {
        let mut dist = vec![1.0];
        for i in 0..self.num_agents() {
            let row = self.row(i, s);
            let mut next = Vec::with_capacity(dist.len() * row.len());
            for &p in &dist {
                for &q in row {
                    next.push(p * q);
                }
            }
            dist = next;
        }
        debug_assert_eq!(dist.len(), game.num_joint_actions());
        dist
    }

    /// The composite `(other^i, self^{-i})`: agent `i` switches to `other`'s table.
    pub fn with_agent_from(&self, i: usize, other: &ProductPolicy) -> Self {
        let mut out = self.clone();
        out.probs[i] = other.probs[i].clone();
        out
    }

    /// Replaces agent `i`'s table with a deterministic map `state -> action`.
    pub fn with_agent_deterministic(&self, i: usize, actions: &[usize]) -> Self {
        let mut out = self.clone();
        out.probs[i] = deterministic_table(self.action_counts[i], actions);
        out
    }

    /// Checks that the policy shape matches the game.
    pub fn check_dims(&self, game: &MarkovGame) -> Result<()> {
        if self.num_states != game.num_states() || self.action_counts != game.action_counts() {
            return Err(MpgError::DimensionMismatch(format!(
                "policy shape ({} states, actions {:?}) does not match game ({} states, actions {:?})",
                self.num_states,
                self.action_counts,
                game.num_states(),
                game.action_counts()
            )));
        }
        Ok(())
    }
}

fn deterministic_table(num_actions: usize, per_state: &[usize]) -> Vec<f64> {
    let mut table = vec![0.0; num_actions * per_state.len()];
    for (s, &a) in per_state.iter().enumerate() {
        table[s * num_actions + a] = 1.0;
    }
    table
}

/// Stabilized softmax of one logit row.
pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Per-agent per-state softmax of the logits.
pub fn softmax_policy(params: &PolicyParams) -> ProductPolicy {
    let probs = params
        .theta
        .iter()
        .zip(&params.action_counts)
        .map(|(table, &c)| table.chunks(c).flat_map(softmax_row).collect())
        .collect();
    ProductPolicy {
        num_states: params.num_states,
        action_counts: params.action_counts.clone(),
        probs,
    }
}

/// I.i.d. standard-normal logits from a seeded ChaCha8 stream.
pub fn init_params(seed: u64, game: &MarkovGame) -> PolicyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = game
        .action_counts()
        .iter()
        .map(|&c| {
            (0..c * game.num_states())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect();
    PolicyParams {
        num_states: game.num_states(),
        action_counts: game.action_counts().to_vec(),
        theta,
    }
}

/// Enumerates every deterministic map `state -> action` for one agent, in
/// lexicographic order with state 0 as the most significant digit.
pub fn deterministic_maps(num_states: usize, num_actions: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (num_actions as u64).checked_pow(num_states as u32).unwrap_or(u64::MAX);
    (0..total).map(move |mut code| {
        let mut map = vec![0usize; num_states];
        for s in (0..num_states).rev() {
            map[s] = (code % num_actions as u64) as usize;
            code /= num_actions as u64;
        }
        map
    })
}

/// Outcome of a falsification check of the potential identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PotentialVerdict {
    Pass {
        checked_deviations: usize,
        sampled: bool,
    },
    Violation {
        policy_index: usize,
        agent: usize,
        deviation: Vec<usize>,
        state: usize,
        value_difference: f64,
        potential_difference: f64,
    },
}

impl PotentialVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, PotentialVerdict::Pass { .. })
    }
}

/// Per-agent deviation sets larger than this are sampled instead of enumerated.
pub const MAX_ENUMERATED_DEVIATIONS: u64 = 4096;
const SAMPLED_DEVIATIONS: usize = 256;
const POTENTIAL_TOL: f64 = 1e-8;

/// Checks `V^i(dev, pi^-i) - V^i(pi) = Phi(dev, pi^-i) - Phi(pi)` in every state,
/// for every trial policy, agent and deterministic deviation.
///
/// Deviation sets of at most [`MAX_ENUMERATED_DEVIATIONS`] maps are enumerated;
/// larger ones are replaced by a seeded sample.
pub fn verify_potential(game: &MarkovGame, trial_policies: &[ProductPolicy]) -> Result<PotentialVerdict> {
    if !game.has_potential() {
        return Err(MpgError::MissingPotential);
    }
    let mut checked = 0;
    let mut sampled = false;
    for (k, policy) in trial_policies.iter().enumerate() {
        let base = crate::eval::evaluate(game, policy)?;
        let base_phi = base.phi_s.as_ref().expect("potential present");
        for i in 0..game.num_agents() {
            let count = (game.num_actions(i) as u64)
                .checked_pow(game.num_states() as u32)
                .unwrap_or(u64::MAX);
            let deviations: Vec<Vec<usize>> = if count <= MAX_ENUMERATED_DEVIATIONS {
                deterministic_maps(game.num_states(), game.num_actions(i)).collect()
            } else {
                sampled = true;
                sample_maps(game, i, SAMPLED_DEVIATIONS, (k * game.num_agents() + i) as u64)
            };
            for dev in deviations {
                let deviated = policy.with_agent_deterministic(i, &dev);
                let eval = crate::eval::evaluate(game, &deviated)?;
                let phi = eval.phi_s.as_ref().expect("potential present");
                for s in 0..game.num_states() {
                    let dv = eval.v[i][s] - base.v[i][s];
                    let dphi = phi[s] - base_phi[s];
                    if (dv - dphi).abs() > POTENTIAL_TOL {
                        return Ok(PotentialVerdict::Violation {
                            policy_index: k,
                            agent: i,
                            deviation: dev,
                            state: s,
                            value_difference: dv,
                            potential_difference: dphi,
                        });
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(PotentialVerdict::Pass {
        checked_deviations: checked,
        sampled,
    })
}

fn sample_maps(game: &MarkovGame, agent: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..game.num_states())
                .map(|_| rng.random_range(0..game.num_actions(agent)))
                .collect()
        })
        .collect()
}
