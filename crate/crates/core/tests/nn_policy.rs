mod common;

use mpg_lab::dynamics::{pg_gradient, run_dynamics, Algorithm, DynamicsConfig};
use mpg_lab::environments::{coordination_game, random_game, CoordinationSpec};
use mpg_lab::game::init_params;
use mpg_lab::nn::{
    init_mlp, mlp_forward, mlp_log_barrier_grad, mlp_objective, mlp_policy, mlp_policy_gradient, Activation,
    MlpPolicyParams,
};
use mpg_lab::MarkovGame;
use proptest::prelude::*;

fn coordination(n: usize) -> MarkovGame {
    coordination_game(&CoordinationSpec::new(n)).unwrap()
}

/// `Phi(mu)` plus the barrier of the network policy, through the independent
/// value-iteration oracle.
fn oracle_objective(game: &MarkovGame, params: &MlpPolicyParams, lambda: f64) -> f64 {
    let policy = mlp_policy(params);
    let potential = common::at_mu(game, &common::potential_values(game, &policy));
    let n = game.num_states() as f64;
    let barrier: f64 = (0..game.num_agents())
        .map(|i| {
            let c = game.num_actions(i) as f64;
            policy.agent_table(i).iter().map(|p| p.ln()).sum::<f64>() / (n * c) + c.ln()
        })
        .sum();
    potential + lambda * barrier
}

fn check_finite_differences(game: &MarkovGame, params: &MlpPolicyParams, lambda: f64) {
    let grad = mlp_log_barrier_grad(game, params, lambda).unwrap();
    let flat = params.flatten();
    for agent in 0..flat.len() {
        let fd = common::central_difference(
            |x| {
                let mut table = flat.clone();
                table[agent] = x.to_vec();
                oracle_objective(game, &params.with_flat(&table).unwrap(), lambda)
            },
            &flat[agent],
            1e-5,
        );
        for (k, (a, b)) in grad[agent].iter().zip(&fd).enumerate() {
            assert!(common::rel_err(*a, *b) < 1e-5, "agent {agent} weight {k}: {a} vs {b}");
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let game = coordination(2);
    for seed in 0..4 {
        let params = init_mlp(seed, &game, 4, Activation::Tanh);
        check_finite_differences(&game, &params, 0.0);
    }
    // nonzero biases keep every ReLU pre-activation off its kink
    for seed in 0..4 {
        let mut relu = init_mlp(seed, &game, 4, Activation::Relu);
        for layers in &mut relu.agents {
            for (k, b) in layers.b1.iter_mut().chain(layers.b2.iter_mut()).enumerate() {
                *b = 0.1 + 0.03 * k as f64;
            }
        }
        check_finite_differences(&game, &relu, 0.0);
    }
}

#[test]
fn regularized_gradient_matches_finite_differences() {
    let game = random_game(5, 2, 3, &[2, 3], true, 0.9).unwrap();
    for seed in 0..3 {
        let params = init_mlp(seed, &game, 3, Activation::Tanh);
        check_finite_differences(&game, &params, 0.5);
        let lambda0 = mlp_log_barrier_grad(&game, &params, 0.0).unwrap();
        assert_eq!(lambda0, mlp_policy_gradient(&game, &params).unwrap());
    }
}

#[test]
fn uniform_output_has_no_barrier_gradient() {
    let game = coordination(2);
    let params = MlpPolicyParams::zeros(&game, 4, Activation::Relu);
    let plain = mlp_policy_gradient(&game, &params).unwrap();
    let barrier = mlp_log_barrier_grad(&game, &params, 3.0).unwrap();
    assert_eq!(plain, barrier);
    assert!((mlp_objective(&game, &params, 3.0).unwrap() - mlp_objective(&game, &params, 0.0).unwrap()).abs() < 1e-12);
}

#[test]
fn identity_network_reduces_to_the_tabular_gradient() {
    let game = coordination(2);
    let n = game.num_states();
    let logits = init_params(4, &game);
    let mut params = MlpPolicyParams::zeros(&game, n, Activation::Identity);
    for (i, layers) in params.agents.iter_mut().enumerate() {
        for k in 0..n {
            layers.w1[k * n + k] = 1.0;
            layers.w2[k * n + k] = 1.0;
        }
        // w3 is |A| x width; column s holds the logits of state s
        for s in 0..n {
            for a in 0..2 {
                layers.w3[a * n + s] = logits.get(i, s, a);
            }
        }
    }
    for i in 0..2 {
        for s in 0..n {
            let expected = mpg_lab::game::softmax_row(logits.row(i, s));
            let got = mlp_forward(&params, i, s);
            for (a, b) in expected.iter().zip(&got) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }
    let tabular = pg_gradient(&game, &logits).unwrap();
    let mlp = mlp_policy_gradient(&game, &params).unwrap();
    let w3_offset = n * n + n + n * n + n;
    for i in 0..2 {
        for s in 0..n {
            for a in 0..2 {
                let got = mlp[i][w3_offset + a * n + s];
                assert!((got - tabular[i][s * 2 + a]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn one_action_agents_have_zero_gradient() {
    let game = random_game(1, 2, 3, &[1, 1], true, 0.9).unwrap();
    let grad = mlp_policy_gradient(&game, &init_mlp(0, &game, 3, Activation::Relu)).unwrap();
    assert!(grad.iter().flatten().all(|g| g.abs() < 1e-12));
}

#[test]
fn nn_pg_converges_on_coordination() {
    let game = coordination(2);
    let config = DynamicsConfig {
        max_iters: 400,
        stride: 400,
        ..DynamicsConfig::new(Algorithm::NnPg)
    };
    for seed in 0..3 {
        let record = run_dynamics(&game, &DynamicsConfig { seed, ..config.clone() }).unwrap();
        assert!(record.rows.last().unwrap().nash_gap < 0.05, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn outputs_are_simplex_points(seed in any::<u64>(), width in 1usize..6, scale in 0.1f64..20.0) {
        let game = coordination(2);
        let base = init_mlp(seed, &game, width, Activation::Relu);
        let scaled: Vec<Vec<f64>> = base.flatten().iter().map(|t| t.iter().map(|x| x * scale).collect()).collect();
        let params = base.with_flat(&scaled).unwrap();
        for i in 0..2 {
            for s in 0..4 {
                let p = mlp_forward(&params, i, s);
                prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
