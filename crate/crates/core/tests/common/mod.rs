//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's evaluation, best-response or welfare code.
#![allow(dead_code)]

use mpg_lab::environments::random_game;
use mpg_lab::game::{deterministic_maps, PolicyParams};
use mpg_lab::{MarkovGame, ProductPolicy};

/// Local actions of a joint index, agent 0 most significant.
pub fn decode_joint(game: &MarkovGame, mut joint: usize) -> Vec<usize> {
    let counts = game.action_counts();
    let mut actions = vec![0; counts.len()];
    for i in (0..counts.len()).rev() {
        actions[i] = joint % counts[i];
        joint /= counts[i];
    }
    actions
}

pub fn joint_prob(game: &MarkovGame, policy: &ProductPolicy, s: usize, joint: usize) -> f64 {
    decode_joint(game, joint)
        .iter()
        .enumerate()
        .map(|(i, &a)| policy.prob(i, s, a))
        .product()
}

/// `(r_pi(s), P_pi(s, .))` for one reward row (agent index or the potential).
pub fn induced(
    game: &MarkovGame,
    policy: &ProductPolicy,
    reward: impl Fn(usize, usize) -> f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = game.num_states();
    let mut r = vec![0.0; n];
    let mut p = vec![vec![0.0; n]; n];
    for s in 0..n {
        for joint in 0..game.num_joint_actions() {
            let w = joint_prob(game, policy, s, joint);
            r[s] += w * reward(s, joint);
            for (t, q) in game.transition_row(s, joint).iter().enumerate() {
                p[s][t] += w * q;
            }
        }
    }
    (r, p)
}

/// Iterates `V <- r + gamma P V` until the sup-norm change drops below `tol`.
pub fn value_iteration(
    game: &MarkovGame,
    policy: &ProductPolicy,
    reward: impl Fn(usize, usize) -> f64,
    tol: f64,
) -> Vec<f64> {
    let (r, p) = induced(game, policy, reward);
    let n = r.len();
    let gamma = game.gamma();
    let mut v = vec![0.0; n];
    loop {
        let next: Vec<f64> = (0..n)
            .map(|s| r[s] + gamma * p[s].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if change < tol {
            return v;
        }
    }
}

pub fn agent_values(game: &MarkovGame, policy: &ProductPolicy, agent: usize) -> Vec<f64> {
    value_iteration(game, policy, |s, a| game.reward(agent, s, a), 1e-13)
}

pub fn potential_values(game: &MarkovGame, policy: &ProductPolicy) -> Vec<f64> {
    value_iteration(game, policy, |s, a| game.potential_row(s).unwrap()[a], 1e-13)
}

pub fn at_mu(game: &MarkovGame, v: &[f64]) -> f64 {
    game.mu().iter().zip(v).map(|(m, x)| m * x).sum()
}

/// Unnormalized discounted visitation by summing `gamma^t mu^T P^t`.
pub fn visitation_series(game: &MarkovGame, policy: &ProductPolicy) -> Vec<f64> {
    let (_, p) = induced(game, policy, |_, _| 0.0);
    let n = p.len();
    let mut row = game.mu().to_vec();
    let mut d = vec![0.0; n];
    let mut weight = 1.0;
    while weight > 1e-16 {
        for s in 0..n {
            d[s] += weight * row[s];
        }
        row = (0..n).map(|t| (0..n).map(|s| row[s] * p[s][t]).sum()).collect();
        weight *= game.gamma();
    }
    d
}

/// `max` over deterministic deviations of `agent` of `V^agent(mu)`, by enumeration.
pub fn brute_force_best_value(game: &MarkovGame, policy: &ProductPolicy, agent: usize) -> f64 {
    deterministic_maps(game.num_states(), game.num_actions(agent))
        .map(|map| {
            let dev = policy.with_agent_deterministic(agent, &map);
            at_mu(game, &agent_values(game, &dev, agent))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn brute_force_nash_gap(game: &MarkovGame, policy: &ProductPolicy) -> f64 {
    (0..game.num_agents())
        .map(|i| brute_force_best_value(game, policy, i) - at_mu(game, &agent_values(game, policy, i)))
        .fold(0.0, f64::max)
}

/// Max welfare over all deterministic product policies, by enumeration.
pub fn brute_force_welfare(game: &MarkovGame) -> f64 {
    let n = game.num_agents();
    let maps: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|i| deterministic_maps(game.num_states(), game.num_actions(i)).collect())
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; n];
    loop {
        let actions: Vec<Vec<usize>> = (0..n).map(|i| maps[i][idx[i]].clone()).collect();
        let policy = ProductPolicy::deterministic(game, &actions).unwrap();
        let w: f64 = (0..n).map(|i| at_mu(game, &agent_values(game, &policy, i))).sum();
        best = best.max(w);
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            idx[k] += 1;
            if idx[k] < maps[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Central finite difference of `f` at every coordinate of `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error with an absolute floor of one.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Softmax of raw logits, computed independently of the library.
pub fn softmax(game: &MarkovGame, params: &PolicyParams) -> ProductPolicy {
    let n = params.num_states();
    let tables = (0..params.num_agents())
        .map(|i| {
            let c = params.action_counts()[i];
            let mut out = Vec::with_capacity(n * c);
            for s in 0..n {
                let row = params.row(i, s);
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
                let z: f64 = e.iter().sum();
                out.extend(e.iter().map(|x| x / z));
            }
            out
        })
        .collect();
    ProductPolicy::from_tables(game, tables).unwrap()
}

/// Seeded small cooperative game (shared reward doubling as the potential).
pub fn small_cooperative(seed: u64, num_agents: usize, num_states: usize, actions: &[usize], gamma: f64) -> MarkovGame {
    random_game(seed, num_agents, num_states, actions, true, gamma).unwrap()
}
