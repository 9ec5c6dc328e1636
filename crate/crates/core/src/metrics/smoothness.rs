//! Falsification checks of game smoothness over finite policy sets.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MpgError, Result};
use crate::eval::{evaluate, expected_rewards, induced_transition, resolvent, Resolvent};
use crate::game::{deterministic_maps, init_params, softmax_policy, MarkovGame, ProductPolicy};

/// Largest deterministic policy set used by [`PolicyPairs::default_for`];
/// all ordered pairs of it are tested.
pub const MAX_DETERMINISTIC_SET: f64 = 256.0;
/// Size of the random mixed set used when the deterministic set is too large.
pub const RANDOM_SET_SIZE: usize = 64;

const SLACK_TOL: f64 = 1e-8;

/// Policies plus the ordered pairs `(pi, pi')` (as indices) to test.
#[derive(Clone, Debug)]
pub struct PolicyPairs {
    pub policies: Vec<ProductPolicy>,
    pub pairs: Vec<(usize, usize)>,
    pub descriptor: String,
}

impl PolicyPairs {
    /// Every ordered pair of `policies`, including `pi = pi'`.
    pub fn all_ordered(policies: Vec<ProductPolicy>, descriptor: impl Into<String>) -> Self {
        let n = policies.len();
        let pairs = (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).collect();
        PolicyPairs {
            policies,
            pairs,
            descriptor: descriptor.into(),
        }
    }

    /// All deterministic product policies, in enumeration order (one joint
    /// action per state, state 0 most significant).
    pub fn deterministic_policies(game: &MarkovGame, limit: f64) -> Result<Vec<ProductPolicy>> {
        let count = game.deterministic_policy_count();
        if count > limit {
            return Err(MpgError::TooLargeToEnumerate { count, limit });
        }
        deterministic_maps(game.num_states(), game.num_joint_actions())
            .map(|map| {
                let per_agent: Vec<Vec<usize>> = (0..game.num_agents())
                    .map(|i| map.iter().map(|&j| game.local_action(j, i)).collect())
                    .collect();
                ProductPolicy::deterministic(game, &per_agent)
            })
            .collect()
    }

    /// Softmax policies of `count` standard-normal logit draws seeded `seed, seed + 1, ...`.
    pub fn random_policies(game: &MarkovGame, count: usize, seed: u64) -> Vec<ProductPolicy> {
        (0..count as u64)
            .map(|k| softmax_policy(&init_params(seed.wrapping_add(k), game)))
            .collect()
    }

    /// All deterministic pairs when at most [`MAX_DETERMINISTIC_SET`] policies
    /// exist, otherwise all pairs of [`RANDOM_SET_SIZE`] seeded mixed policies.
    pub fn default_for(game: &MarkovGame, seed: u64) -> Result<Self> {
        let count = game.deterministic_policy_count();
        if count <= MAX_DETERMINISTIC_SET {
            let policies = Self::deterministic_policies(game, MAX_DETERMINISTIC_SET)?;
            let descriptor = format!(
                "all {} deterministic product policies, all ordered pairs",
                policies.len()
            );
            Ok(Self::all_ordered(policies, descriptor))
        } else {
            let policies = Self::random_policies(game, RANDOM_SET_SIZE, seed);
            let descriptor =
                format!("{RANDOM_SET_SIZE} random mixed softmax policies (seeds {seed}..), all ordered pairs");
            Ok(Self::all_ordered(policies, descriptor))
        }
    }

    fn check(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(MpgError::InvalidConfig("policy pair set is empty".into()));
        }
        let n = self.policies.len();
        if let Some(&(p, q)) = self.pairs.iter().find(|&&(p, q)| p >= n || q >= n) {
            return Err(MpgError::DimensionMismatch(format!(
                "pair ({p}, {q}) out of range for {n} policies"
            )));
        }
        Ok(())
    }
}

/// Exact quantities of one product policy.
struct PolicyValues {
    res: Resolvent,
    /// `r^i_pi(s)`
    rewards: Vec<Vec<f64>>,
    /// `V^i_pi(s)`
    values: Vec<Vec<f64>>,
}

impl PolicyValues {
    fn new(game: &MarkovGame, policy: &ProductPolicy) -> Result<Self> {
        let res = resolvent(&induced_transition(game, policy)?, game.gamma())?;
        let rewards = expected_rewards(game, policy);
        let values = rewards.iter().map(|r| res.apply(r)).collect();
        Ok(PolicyValues { res, rewards, values })
    }

    fn welfare(&self) -> Vec<f64> {
        sum_rows(&self.values)
    }

    fn reward_sum(&self) -> Vec<f64> {
        sum_rows(&self.rewards)
    }
}

fn sum_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for row in rows {
        for (o, x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
    out
}

fn policy_key(policy: &ProductPolicy) -> Vec<u64> {
    policy.tables().iter().flatten().map(|x| x.to_bits()).collect()
}

/// Evaluations of every base policy and every unilateral composite, with
/// identical composites evaluated once.
struct PairData {
    values: Vec<PolicyValues>,
    base: Vec<usize>,
    /// `composite[k][i]` indexes `(pi'^i, pi^-i)` for pair `k`.
    composite: Vec<Vec<usize>>,
}

impl PairData {
    fn build(game: &MarkovGame, pairs: &PolicyPairs) -> Result<Self> {
        pairs.check()?;
        let mut unique: Vec<ProductPolicy> = Vec::new();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut intern = |policy: ProductPolicy| -> usize {
            let key = policy_key(&policy);
            *index.entry(key).or_insert_with(|| {
                unique.push(policy);
                unique.len() - 1
            })
        };
        let base: Vec<usize> = pairs.policies.iter().map(|p| intern(p.clone())).collect();
        let composite: Vec<Vec<usize>> = pairs
            .pairs
            .iter()
            .map(|&(p, q)| {
                (0..game.num_agents())
                    .map(|i| intern(pairs.policies[p].with_agent_from(i, &pairs.policies[q])))
                    .collect()
            })
            .collect();
        for policy in &unique {
            policy.check_dims(game)?;
        }
        let values = unique
            .par_iter()
            .map(|policy| PolicyValues::new(game, policy))
            .collect::<Result<Vec<_>>>()?;
        Ok(PairData {
            values,
            base,
            composite,
        })
    }

    fn pi(&self, pairs: &PolicyPairs, k: usize) -> &PolicyValues {
        &self.values[self.base[pairs.pairs[k].0]]
    }

    fn pi_prime(&self, pairs: &PolicyPairs, k: usize) -> &PolicyValues {
        &self.values[self.base[pairs.pairs[k].1]]
    }

    fn comp(&self, k: usize, i: usize) -> &PolicyValues {
        &self.values[self.composite[k][i]]
    }

    /// `sum_i V^i_{pi'^i, pi^-i}(s)` for pair `k`.
    fn composite_welfare(&self, k: usize) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = (0..self.composite[k].len())
            .map(|i| self.comp(k, i).values[i].clone())
            .collect();
        sum_rows(&rows)
    }

    /// `sum_i r^i_{pi'^i, pi^-i}(s)` for pair `k`.
    fn composite_reward(&self, k: usize) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = (0..self.composite[k].len())
            .map(|i| self.comp(k, i).rewards[i].clone())
            .collect();
        sum_rows(&rows)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Tuple with the smallest slack among those tested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub state: usize,
    /// Indices of `(pi, pi')` in the policy set.
    pub pair: (usize, usize),
    pub slack: f64,
}

/// Outcome of checking `sum_i V^i_{pi'^i, pi^-i}(s) >= alpha V_{pi'}(s) - beta V_pi(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub verdict: Verdict,
    pub worst: Option<WorstCase>,
    pub tested_tuples: usize,
    pub policy_set_descriptor: String,
}

impl SmoothnessCertificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Keeps the first tuple with the strictly smallest slack.
fn track_worst(worst: &mut Option<WorstCase>, state: usize, pair: (usize, usize), slack: f64) {
    if worst.as_ref().is_none_or(|w| slack < w.slack) {
        *worst = Some(WorstCase { state, pair, slack });
    }
}

fn verdict_of(worst: &Option<WorstCase>) -> Verdict {
    match worst {
        Some(w) if w.slack < -SLACK_TOL => Verdict::Fail,
        _ => Verdict::Pass,
    }
}

/// Checks (alpha, beta)-smoothness on every `(s, pi, pi')` of the pair set.
pub fn verify_smoothness(
    game: &MarkovGame,
    alpha: f64,
    beta: f64,
    pairs: &PolicyPairs,
) -> Result<SmoothnessCertificate> {
    let data = PairData::build(game, pairs)?;
    Ok(certify(&data, pairs, alpha, beta))
}

fn certify(data: &PairData, pairs: &PolicyPairs, alpha: f64, beta: f64) -> SmoothnessCertificate {
    let mut worst = None;
    let mut tested = 0;
    for (k, &pair) in pairs.pairs.iter().enumerate() {
        let comp = data.composite_welfare(k);
        let w_pi = data.pi(pairs, k).welfare();
        let w_prime = data.pi_prime(pairs, k).welfare();
        for s in 0..comp.len() {
            let slack = comp[s] - alpha * w_prime[s] + beta * w_pi[s];
            track_worst(&mut worst, s, pair, slack);
            tested += 1;
        }
    }
    SmoothnessCertificate {
        alpha,
        beta,
        verdict: verdict_of(&worst),
        worst,
        tested_tuples: tested,
        policy_set_descriptor: pairs.descriptor.clone(),
    }
}

/// Smallest feasible beta for one alpha over the tested tuples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub alpha: f64,
    pub beta: f64,
}

/// For each alpha, `beta = max(0, max (alpha V_{pi'}(s) - sum_i V^i_{pi'^i,pi^-i}(s)) / V_pi(s))`.
pub fn fit_smoothness_frontier(
    game: &MarkovGame,
    alpha_grid: &[f64],
    pairs: &PolicyPairs,
) -> Result<Vec<FrontierPoint>> {
    let data = PairData::build(game, pairs)?;
    frontier(&data, pairs, alpha_grid)
}

fn frontier(data: &PairData, pairs: &PolicyPairs, alpha_grid: &[f64]) -> Result<Vec<FrontierPoint>> {
    let tuples: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..pairs.pairs.len())
        .map(|k| {
            (
                data.composite_welfare(k),
                data.pi(pairs, k).welfare(),
                data.pi_prime(pairs, k).welfare(),
            )
        })
        .collect();
    for (k, (_, w_pi, _)) in tuples.iter().enumerate() {
        if let Some((s, v)) = w_pi.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(MpgError::NonPositiveValue(format!(
                "V_pi({s}) = {v} for policy {}",
                pairs.pairs[k].0
            )));
        }
    }
    Ok(alpha_grid
        .iter()
        .map(|&alpha| {
            let beta = tuples
                .iter()
                .flat_map(|(comp, w_pi, w_prime)| {
                    (0..comp.len()).map(move |s| (alpha * w_prime[s] - comp[s]) / w_pi[s])
                })
                .fold(0.0, f64::max);
            FrontierPoint { alpha, beta }
        })
        .collect())
}

/// Smoothness frontier plus the certificate of every frontier point, from one
/// set of evaluations.
pub fn certified_frontier(
    game: &MarkovGame,
    alpha_grid: &[f64],
    pairs: &PolicyPairs,
) -> Result<Vec<SmoothnessCertificate>> {
    let data = PairData::build(game, pairs)?;
    Ok(frontier(&data, pairs, alpha_grid)?
        .into_iter()
        .map(|pt| certify(&data, pairs, pt.alpha, pt.beta))
        .collect())
}

/// Outcome of one inequality family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub worst: Option<WorstCase>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Checks `0 < Phi_pi(s) <= V_pi(s)` for every policy and state, the premise
/// of the bad-policy counting bound. The worst case reports `(k, k)` for policy
/// `k` and the slack `min(Phi_pi(s), V_pi(s) - Phi_pi(s))`.
pub fn verify_potential_below_welfare(game: &MarkovGame, policies: &[ProductPolicy]) -> Result<CheckOutcome> {
    if !game.has_potential() {
        return Err(MpgError::MissingPotential);
    }
    let mut worst = None;
    let mut positive = true;
    for (k, policy) in policies.iter().enumerate() {
        let eval = evaluate(game, policy)?;
        let phi = eval.phi_s.as_ref().ok_or(MpgError::MissingPotential)?;
        for (s, (&p, w)) in phi.iter().zip(eval.welfare_s()).enumerate() {
            positive &= p > 0.0;
            track_worst(&mut worst, s, (k, k), p.min(w - p));
        }
    }
    let verdict = if positive { verdict_of(&worst) } else { Verdict::Fail };
    Ok(CheckOutcome { verdict, worst })
}

/// Reward `(lambda_r, mu_r)` and transition `(kappa, nu)` smoothness, and the
/// implied `(kappa lambda_r, mu_r nu)` game certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardTransitionCertificate {
    pub lambda_r: f64,
    pub mu_r: f64,
    pub kappa: f64,
    pub nu: f64,
    pub reward: CheckOutcome,
    /// Absent when the reward check failed.
    pub transition: Option<CheckOutcome>,
    /// Present only when both families passed.
    pub implied: Option<SmoothnessCertificate>,
    pub policy_set_descriptor: String,
}

impl RewardTransitionCertificate {
    pub fn passed(&self) -> bool {
        self.reward.passed()
            && self.transition.as_ref().is_some_and(CheckOutcome::passed)
            && self.implied.as_ref().is_some_and(SmoothnessCertificate::passed)
    }
}

/// Probe vectors for the transition check of pair `k`: the standard basis
/// plus every agent's composite reward vector.
fn probes(data: &PairData, k: usize, num_states: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..num_states)
        .map(|s| {
            let mut e = vec![0.0; num_states];
            e[s] = 1.0;
            e
        })
        .collect();
    out.extend((0..data.composite[k].len()).map(|i| data.comp(k, i).rewards[i].clone()));
    out
}

/// Checks `lambda_r r_{pi'}(s) <= sum_i r^i_{pi'^i,pi^-i}(s) <= mu_r r_pi(s)` and
/// `M_{pi'^i,pi^-i} r >= kappa M_{pi'} r - nu M_pi r` on the pair set; when both
/// hold, also certifies `(kappa lambda_r, mu_r nu)`-smoothness on the same pairs.
pub fn verify_reward_transition_smoothness(
    game: &MarkovGame,
    lambda_r: f64,
    mu_r: f64,
    kappa: f64,
    nu: f64,
    pairs: &PolicyPairs,
) -> Result<RewardTransitionCertificate> {
    let data = PairData::build(game, pairs)?;
    let n = game.num_states();

    let mut worst = None;
    for (k, &pair) in pairs.pairs.iter().enumerate() {
        let comp = data.composite_reward(k);
        let r_pi = data.pi(pairs, k).reward_sum();
        let r_prime = data.pi_prime(pairs, k).reward_sum();
        for s in 0..n {
            let slack = (comp[s] - lambda_r * r_prime[s]).min(mu_r * r_pi[s] - comp[s]);
            track_worst(&mut worst, s, pair, slack);
        }
    }
    let reward = CheckOutcome {
        verdict: verdict_of(&worst),
        worst,
    };
    let mut cert = RewardTransitionCertificate {
        lambda_r,
        mu_r,
        kappa,
        nu,
        reward,
        transition: None,
        implied: None,
        policy_set_descriptor: pairs.descriptor.clone(),
    };
    if !cert.reward.passed() {
        return Ok(cert);
    }

    let mut worst = None;
    for (k, &pair) in pairs.pairs.iter().enumerate() {
        let pi = data.pi(pairs, k);
        let prime = data.pi_prime(pairs, k);
        for r in probes(&data, k, n) {
            let m_pi = pi.res.apply(&r);
            let m_prime = prime.res.apply(&r);
            for i in 0..game.num_agents() {
                let m_comp = data.comp(k, i).res.apply(&r);
                for s in 0..n {
                    let slack = m_comp[s] - kappa * m_prime[s] + nu * m_pi[s];
                    track_worst(&mut worst, s, pair, slack);
                }
            }
        }
    }
    let transition = CheckOutcome {
        verdict: verdict_of(&worst),
        worst,
    };
    let passed = transition.passed();
    cert.transition = Some(transition);
    if passed {
        cert.implied = Some(certify(&data, pairs, kappa * lambda_r, mu_r * nu));
    }
    Ok(cert)
}

/// Tightest reward-smoothness constants on the pair set: the largest `lambda_r`
/// and smallest `mu_r`. States where the reference reward is zero impose no
/// constraint on the ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSmoothnessFit {
    pub lambda_r: f64,
    pub mu_r: f64,
}

pub fn fit_reward_smoothness(game: &MarkovGame, pairs: &PolicyPairs) -> Result<RewardSmoothnessFit> {
    let data = PairData::build(game, pairs)?;
    let mut lambda_r = f64::INFINITY;
    let mut mu_r = f64::NEG_INFINITY;
    for k in 0..pairs.pairs.len() {
        let comp = data.composite_reward(k);
        let r_pi = data.pi(pairs, k).reward_sum();
        let r_prime = data.pi_prime(pairs, k).reward_sum();
        for s in 0..game.num_states() {
            if r_prime[s] > 0.0 {
                lambda_r = lambda_r.min(comp[s] / r_prime[s]);
            }
            if r_pi[s] > 0.0 {
                mu_r = mu_r.max(comp[s] / r_pi[s]);
            }
        }
    }
    Ok(RewardSmoothnessFit { lambda_r, mu_r })
}

/// Smallest `nu >= 0` making the transition inequality hold for `kappa` on the
/// pair set; infinite when no finite `nu` works.
pub fn fit_transition_nu(game: &MarkovGame, kappa: f64, pairs: &PolicyPairs) -> Result<f64> {
    let data = PairData::build(game, pairs)?;
    let n = game.num_states();
    let mut nu = 0.0f64;
    for k in 0..pairs.pairs.len() {
        let pi = data.pi(pairs, k);
        let prime = data.pi_prime(pairs, k);
        for r in probes(&data, k, n) {
            let m_pi = pi.res.apply(&r);
            let m_prime = prime.res.apply(&r);
            for i in 0..game.num_agents() {
                let m_comp = data.comp(k, i).res.apply(&r);
                for s in 0..n {
                    let deficit = kappa * m_prime[s] - m_comp[s];
                    if m_pi[s] > 0.0 {
                        nu = nu.max(deficit / m_pi[s]);
                    } else if deficit > SLACK_TOL {
                        return Ok(f64::INFINITY);
                    }
                }
            }
        }
    }
    Ok(nu)
}
