//! Game generators: the multi-agent Coordination Game and random fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{MpgError, Result};
use crate::game::{build_game, GameSpec, MarkovGame};

/// Parameters of the Coordination Game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinationSpec {
    pub num_agents: usize,
    /// Probability that a local state ignores the agent's action.
    pub eps_trans: f64,
    pub gamma: f64,
}

impl CoordinationSpec {
    pub fn new(num_agents: usize) -> Self {
        CoordinationSpec {
            num_agents,
            eps_trans: 0.1,
            gamma: 0.95,
        }
    }
}

/// Team reward for a global state given as local bits (`false` is local state 0).
///
/// Balanced states (zero/one counts within the difference bound) pay 1 when
/// ones are the majority and 0 otherwise; unbalanced states pay 3 when zeros
/// dominate and 2 when ones do.
pub fn coordination_reward(bits: &[bool]) -> f64 {
    let n = bits.len();
    let bound = if n == 2 || n == 3 { 1 } else { 2 };
    let ones = bits.iter().filter(|&&b| b).count() as i64;
    let zeros = n as i64 - ones;
    if (zeros - ones).abs() <= bound {
        if zeros < ones {
            1.0
        } else {
            0.0
        }
    } else if zeros > ones {
        3.0
    } else {
        2.0
    }
}

/// Local bits of global state `s`; agent 0 is the most significant bit.
pub fn state_bits(s: usize, num_agents: usize) -> Vec<bool> {
    (0..num_agents).map(|i| (s >> (num_agents - 1 - i)) & 1 == 1).collect()
}

/// Builds the Coordination Game with `2^N` states and two actions per agent.
///
/// Each agent's next local state depends only on its own action:
/// `P(0 | a=0) = 1 - eps`, `P(0 | a=1) = eps`. The reward is shared, depends
/// only on the current state, and doubles as the potential.
pub fn coordination_game(spec: &CoordinationSpec) -> Result<MarkovGame> {
    let n = spec.num_agents;
    if n < 2 {
        return Err(MpgError::InvalidConfig(
            "coordination game needs at least 2 agents".into(),
        ));
    }
    if n > 12 {
        return Err(MpgError::InvalidConfig(
            "coordination game supports at most 12 agents".into(),
        ));
    }
    if !(spec.eps_trans > 0.0 && spec.eps_trans < 1.0) {
        return Err(MpgError::InvalidConfig(format!(
            "eps_trans must lie in (0, 1), got {}",
            spec.eps_trans
        )));
    }
    let num_states = 1usize << n;
    let num_joint = 1usize << n;
    let eps = spec.eps_trans;

    // next-state distribution depends only on the joint action
    let rows: Vec<Vec<f64>> = (0..num_joint)
        .map(|joint| {
            let actions = state_bits(joint, n);
            (0..num_states)
                .map(|next| {
                    state_bits(next, n)
                        .iter()
                        .zip(&actions)
                        .map(|(&one, &act)| {
                            let p_zero = if act { eps } else { 1.0 - eps };
                            if one {
                                1.0 - p_zero
                            } else {
                                p_zero
                            }
                        })
                        .product()
                })
                .collect()
        })
        .collect();
    let transition = vec![rows; num_states];
    let shared: Vec<Vec<f64>> = (0..num_states)
        .map(|s| vec![coordination_reward(&state_bits(s, n)); num_joint])
        .collect();

    build_game(GameSpec {
        num_agents: n,
        action_counts: vec![2; n],
        num_states,
        transition,
        rewards: vec![shared.clone(); n],
        potential: Some(shared),
        mu: vec![1.0 / num_states as f64; num_states],
        gamma: spec.gamma,
    })
}

/// Random test game: Dirichlet(1) transition rows, rewards uniform in `[0, 1]`,
/// uniform `mu`. Cooperative games share one reward tensor and use it as the potential.
pub fn random_game(
    seed: u64,
    num_agents: usize,
    num_states: usize,
    action_counts: &[usize],
    cooperative: bool,
    gamma: f64,
) -> Result<MarkovGame> {
    if action_counts.len() != num_agents {
        return Err(MpgError::ShapeMismatch(
            "action_counts length must equal num_agents".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_joint: usize = action_counts.iter().product();
    let transition = (0..num_states)
        .map(|_| {
            (0..num_joint)
                .map(|_| {
                    let raw: Vec<f64> = (0..num_states).map(|_| Exp1.sample(&mut rng)).collect();
                    let total: f64 = raw.iter().sum();
                    raw.into_iter().map(|x: f64| x / total).collect()
                })
                .collect()
        })
        .collect();
    let table = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..num_states)
            .map(|_| (0..num_joint).map(|_| rng.random::<f64>()).collect())
            .collect()
    };
    let (rewards, potential) = if cooperative {
        let shared = table(&mut rng);
        (vec![shared.clone(); num_agents], Some(shared))
    } else {
        ((0..num_agents).map(|_| table(&mut rng)).collect(), None)
    };
    build_game(GameSpec {
        num_agents,
        action_counts: action_counts.to_vec(),
        num_states,
        transition,
        rewards,
        potential,
        mu: vec![1.0 / num_states as f64; num_states],
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn two_agent_rewards() {
        assert_eq!(coordination_reward(&bits("00")), 3.0);
        assert_eq!(coordination_reward(&bits("01")), 0.0);
        assert_eq!(coordination_reward(&bits("10")), 0.0);
        assert_eq!(coordination_reward(&bits("11")), 2.0);
    }

    #[test]
    fn three_and_five_agent_rewards() {
        assert_eq!(coordination_reward(&bits("011")), 1.0);
        assert_eq!(coordination_reward(&bits("001")), 0.0);
        assert_eq!(coordination_reward(&bits("00000")), 3.0);
        assert_eq!(coordination_reward(&bits("00011")), 0.0);
    }

    #[test]
    fn transition_is_product_of_local_kernels() {
        let game = coordination_game(&CoordinationSpec::new(2)).unwrap();
        assert_eq!(game.num_states(), 4);
        assert_eq!(game.num_joint_actions(), 4);
        let joint = game.joint_index(&[0, 1]);
        assert!((game.transition_row(3, joint)[0] - 0.09).abs() < 1e-15);
        for s in 0..4 {
            for a in 0..4 {
                assert!((game.transition_row(s, a).iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        assert!(game.is_cooperative());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = CoordinationSpec::new(1);
        assert!(coordination_game(&spec).is_err());
        spec.num_agents = 2;
        spec.eps_trans = 1.0;
        assert!(coordination_game(&spec).is_err());
    }

    #[test]
    fn random_game_is_seeded() {
        let a = random_game(4, 2, 3, &[2, 3], false, 0.9).unwrap();
        let b = random_game(4, 2, 3, &[2, 3], false, 0.9).unwrap();
        let c = random_game(5, 2, 3, &[2, 3], false, 0.9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(!a.has_potential());
        let coop = random_game(4, 2, 3, &[2, 3], true, 0.9).unwrap();
        assert!(coop.is_cooperative() && coop.has_potential());
    }
}
