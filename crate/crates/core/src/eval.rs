//! Exact policy evaluation by dense linear solves.
//!
//! Everything here goes through the resolvent `M = (I - gamma P_pi)^{-1}`:
//! values are `M r_pi`, the discounted visitation measure is `mu^T M`
//! (unnormalized, total mass `1 / (1 - gamma)`).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MpgError, Result};
use crate::game::{MarkovGame, ProductPolicy};

/// `(I - gamma P_pi)^{-1}`.
#[derive(Clone, Debug)]
pub struct Resolvent {
    pub m: DMatrix<f64>,
}

impl Resolvent {
    pub fn row_sums(&self) -> Vec<f64> {
        self.m.row_iter().map(|r| r.sum()).collect()
    }

    /// `M r` for a per-state vector `r`.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(r)).iter().copied().collect()
    }

    /// `w^T M` for a per-state weight vector `w`.
    pub fn apply_left(&self, w: &[f64]) -> Vec<f64> {
        (self.m.transpose() * DVector::from_column_slice(w))
            .iter()
            .copied()
            .collect()
    }
}

/// Everything known about one product policy.
#[derive(Clone, Debug)]
pub struct EvalResult {
    /// `v[i][s]`
    pub v: Vec<Vec<f64>>,
    /// `q_local[i][s * |A^i| + a]`, opponents marginalized.
    pub q_local: Vec<Vec<f64>>,
    /// `a_local[i][s * |A^i| + a] = q_local - v`.
    pub a_local: Vec<Vec<f64>>,
    /// Total potential per state, when the game has one.
    pub phi_s: Option<Vec<f64>>,
    pub phi_mu: Option<f64>,
    /// Unnormalized discounted visitation `d^pi_mu`.
    pub d_mu: Vec<f64>,
    /// `V^i(mu)`
    pub v_mu: Vec<f64>,
}

impl EvalResult {
    /// Welfare per state, `sum_i V^i(s)`.
    pub fn welfare_s(&self) -> Vec<f64> {
        let n = self.v[0].len();
        (0..n).map(|s| self.v.iter().map(|vi| vi[s]).sum()).collect()
    }

    /// `sum_i V^i(mu)`.
    pub fn welfare_mu(&self) -> f64 {
        self.v_mu.iter().sum()
    }

    /// Potential value at `mu`; panics when the game has no potential.
    pub fn phi(&self) -> f64 {
        self.phi_mu.expect("game has no potential")
    }

    pub fn advantage(&self, agent: usize, s: usize, a: usize) -> f64 {
        let c = self.a_local[agent].len() / self.v[agent].len();
        self.a_local[agent][s * c + a]
    }
}

/// State transition matrix induced by a product policy.
pub fn induced_transition(game: &MarkovGame, policy: &ProductPolicy) -> Result<DMatrix<f64>> {
    policy.check_dims(game)?;
    let n = game.num_states();
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        let dist = policy.joint_distribution(game, s);
        for (joint, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (t, &q) in game.transition_row(s, joint).iter().enumerate() {
                p[(s, t)] += w * q;
            }
        }
    }
    Ok(p)
}

/// Solves `(I - gamma P_pi) M = I` by dense LU.
pub fn resolvent(p_pi: &DMatrix<f64>, gamma: f64) -> Result<Resolvent> {
    let n = p_pi.nrows();
    if p_pi.ncols() != n {
        return Err(MpgError::DimensionMismatch("transition matrix must be square".into()));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(MpgError::InvalidDiscount(gamma));
    }
    let system = DMatrix::identity(n, n) - p_pi * gamma;
    let m = system.lu().try_inverse().ok_or(MpgError::SingularSystem)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(MpgError::SingularSystem);
    }
    Ok(Resolvent { m })
}

/// Expected per-state reward `E_{a ~ pi}[table(s, a)]` for a joint-action table.
fn expected_reward(game: &MarkovGame, dists: &[Vec<f64>], row: impl Fn(usize) -> Vec<f64>) -> Vec<f64> {
    (0..game.num_states())
        .map(|s| {
            let r = row(s);
            dists[s].iter().zip(&r).map(|(w, x)| w * x).sum()
        })
        .collect()
}

/// `r^i_pi(s) = E_{a ~ pi(s)}[r^i(s, a)]` for every agent.
pub fn expected_rewards(game: &MarkovGame, policy: &ProductPolicy) -> Vec<Vec<f64>> {
    let dists: Vec<Vec<f64>> = (0..game.num_states())
        .map(|s| policy.joint_distribution(game, s))
        .collect();
    (0..game.num_agents())
        .map(|i| expected_reward(game, &dists, |s| game.reward_row(i, s).to_vec()))
        .collect()
}

/// Exact values, local advantages, potential and visitation for `policy`.
pub fn evaluate(game: &MarkovGame, policy: &ProductPolicy) -> Result<EvalResult> {
    let p_pi = induced_transition(game, policy)?;
    let res = resolvent(&p_pi, game.gamma())?;
    evaluate_with(game, policy, &res)
}

/// Same as [`evaluate`], reusing a precomputed resolvent for `policy`.
pub fn evaluate_with(game: &MarkovGame, policy: &ProductPolicy, res: &Resolvent) -> Result<EvalResult> {
    let n = game.num_states();
    let gamma = game.gamma();
    let dists: Vec<Vec<f64>> = (0..n).map(|s| policy.joint_distribution(game, s)).collect();

    let mut v = Vec::with_capacity(game.num_agents());
    let mut q_local = Vec::with_capacity(game.num_agents());
    let mut a_local = Vec::with_capacity(game.num_agents());
    for i in 0..game.num_agents() {
        let r_pi = expected_reward(game, &dists, |s| game.reward_row(i, s).to_vec());
        let vi = res.apply(&r_pi);
        let (qi, ai) = local_q_and_advantage(game, policy, i, &vi, |s, a| game.reward(i, s, a));
        v.push(vi);
        q_local.push(qi);
        a_local.push(ai);
    }

    let phi_s = if game.has_potential() {
        let phi_pi = expected_reward(game, &dists, |s| game.potential_row(s).unwrap().to_vec());
        Some(res.apply(&phi_pi))
    } else {
        None
    };
    let mu = game.mu();
    let phi_mu = phi_s.as_ref().map(|phi| dot(mu, phi));
    let d_mu = res.apply_left(mu);
    let v_mu = v.iter().map(|vi| dot(mu, vi)).collect();
    debug_assert!(gamma < 1.0);

    Ok(EvalResult {
        v,
        q_local,
        a_local,
        phi_s,
        phi_mu,
        d_mu,
        v_mu,
    })
}

/// Local action values `Q^i(s, a^i) = E_{a^-i}[r(s,a) + gamma E_{s'} V(s')]`
/// and the corresponding advantages.
fn local_q_and_advantage(
    game: &MarkovGame,
    policy: &ProductPolicy,
    agent: usize,
    values: &[f64],
    reward: impl Fn(usize, usize) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = game.num_states();
    let c = game.num_actions(agent);
    let gamma = game.gamma();
    let mut q = vec![0.0; n * c];
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
            let future: f64 = game
                .transition_row(s, joint)
                .iter()
                .zip(values)
                .map(|(p, x)| p * x)
                .sum();
            q[s * c + own] += weight * (reward(s, joint) + gamma * future);
        }
    }
    let a = q.iter().enumerate().map(|(k, qv)| qv - values[k / c]).collect();
    (q, a)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rollout estimate of `V^i(mu)` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub horizon: usize,
}

/// Truncation horizon keeping the bias below `1e-6`:
/// `ceil(log(1e-6 (1 - gamma) / r_max) / log gamma)`, at least one step.
pub fn default_horizon(game: &MarkovGame) -> usize {
    let (lo, hi) = game.reward_bounds();
    let r_max = lo.abs().max(hi.abs());
    let gamma = game.gamma();
    if r_max == 0.0 || gamma == 0.0 {
        return 1;
    }
    let h = ((1e-6 * (1.0 - gamma) / r_max).ln() / gamma.ln()).ceil();
    h.max(1.0) as usize
}

/// Monte-Carlo estimate of `V^agent(mu)` by truncated rollouts. Test oracle only.
pub fn monte_carlo_value_oracle(
    game: &MarkovGame,
    policy: &ProductPolicy,
    agent: usize,
    num_episodes: usize,
    horizon: Option<usize>,
    seed: u64,
) -> MonteCarloEstimate {
    let horizon = horizon.unwrap_or_else(|| default_horizon(game));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = game.gamma();
    let n = game.num_states();
    let joint_dists: Vec<Vec<f64>> = (0..n).map(|s| policy.joint_distribution(game, s)).collect();

    let sample = |rng: &mut ChaCha8Rng, weights: &[f64]| -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        // round-off: fall back to the last index with positive mass
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    };

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..num_episodes {
        let mut s = sample(&mut rng, game.mu());
        let mut ret = 0.0;
        let mut discount = 1.0;
        for _ in 0..horizon {
            let joint = sample(&mut rng, &joint_dists[s]);
            ret += discount * game.reward(agent, s, joint);
            discount *= gamma;
            if discount == 0.0 {
                break;
            }
            s = sample(&mut rng, game.transition_row(s, joint));
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let k = num_episodes as f64;
    let mean = sum / k;
    let var = if num_episodes > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    MonteCarloEstimate {
        mean,
        stderr: (var / k).sqrt(),
        horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_game, GameSpec};

    fn bandit(gamma: f64) -> MarkovGame {
        build_game(GameSpec {
            num_agents: 1,
            action_counts: vec![2],
            num_states: 1,
            transition: vec![vec![vec![1.0], vec![1.0]]],
            rewards: vec![vec![vec![1.0, 0.0]]],
            potential: None,
            mu: vec![1.0],
            gamma,
        })
        .unwrap()
    }

    #[test]
    fn one_state_geometric_series() {
        let game = build_game(GameSpec {
            num_agents: 1,
            action_counts: vec![1],
            num_states: 1,
            transition: vec![vec![vec![1.0]]],
            rewards: vec![vec![vec![1.0]]],
            potential: None,
            mu: vec![1.0],
            gamma: 0.95,
        })
        .unwrap();
        let eval = evaluate(&game, &ProductPolicy::uniform(&game)).unwrap();
        assert!((eval.v[0][0] - 20.0).abs() < 1e-12);
        assert!((eval.q_local[0][0] - 20.0).abs() < 1e-12);
        assert!(eval.a_local[0][0].abs() < 1e-12);
        assert!((eval.d_mu[0] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn bandit_closed_form() {
        let game = bandit(0.0);
        let eval = evaluate(&game, &ProductPolicy::uniform(&game)).unwrap();
        assert!((eval.v[0][0] - 0.5).abs() < 1e-15);
        assert!((eval.a_local[0][0] - 0.5).abs() < 1e-15);
        assert!((eval.a_local[0][1] + 0.5).abs() < 1e-15);
        assert!((eval.d_mu[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn resolvent_identity_and_scalar() {
        let m = resolvent(&DMatrix::identity(3, 3), 0.5).unwrap();
        assert!((m.m.clone() - DMatrix::identity(3, 3) * 2.0).amax() < 1e-12);
        let m = resolvent(&DMatrix::from_element(1, 1, 1.0), 0.95).unwrap();
        assert!((m.m[(0, 0)] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_policy_selects_rows() {
        let spec = GameSpec {
            num_agents: 1,
            action_counts: vec![2],
            num_states: 2,
            transition: vec![
                vec![vec![0.2, 0.8], vec![0.6, 0.4]],
                vec![vec![1.0, 0.0], vec![0.3, 0.7]],
            ],
            rewards: vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
            potential: None,
            mu: vec![0.5, 0.5],
            gamma: 0.9,
        };
        let game = build_game(spec).unwrap();
        let pi = ProductPolicy::deterministic(&game, &[vec![1, 0]]).unwrap();
        let p = induced_transition(&game, &pi).unwrap();
        assert_eq!(p.row(0).iter().copied().collect::<Vec<_>>(), vec![0.6, 0.4]);
        assert_eq!(p.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let game = bandit(0.5);
        let other = build_game(GameSpec {
            num_agents: 1,
            action_counts: vec![3],
            num_states: 1,
            transition: vec![vec![vec![1.0]; 3]],
            rewards: vec![vec![vec![0.0; 3]]],
            potential: None,
            mu: vec![1.0],
            gamma: 0.5,
        })
        .unwrap();
        let pi = ProductPolicy::uniform(&other);
        assert!(matches!(evaluate(&game, &pi), Err(MpgError::DimensionMismatch(_))));
    }

    #[test]
    fn monte_carlo_deterministic_and_myopic_cases() {
        let game = build_game(GameSpec {
            num_agents: 1,
            action_counts: vec![1],
            num_states: 1,
            transition: vec![vec![vec![1.0]]],
            rewards: vec![vec![vec![1.0]]],
            potential: None,
            mu: vec![1.0],
            gamma: 0.95,
        })
        .unwrap();
        let pi = ProductPolicy::uniform(&game);
        let est = monte_carlo_value_oracle(&game, &pi, 0, 10, Some(500), 3);
        assert!((est.mean - 20.0).abs() < 1e-9);
        assert_eq!(est.stderr, 0.0);

        let game = bandit(0.0);
        let pi = ProductPolicy::uniform(&game);
        let est = monte_carlo_value_oracle(&game, &pi, 0, 20_000, None, 7);
        assert_eq!(est.horizon, 1);
        assert!((est.mean - 0.5).abs() < 4.0 * est.stderr);
    }

    #[test]
    fn default_horizon_formula() {
        let game = bandit(0.95);
        let expected = ((1e-6f64 * 0.05).ln() / 0.95f64.ln()).ceil() as usize;
        assert_eq!(default_horizon(&game), expected);
    }
}
