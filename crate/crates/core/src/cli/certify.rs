use anyhow::Result;
use mpg_lab::game::{init_params, softmax_policy, verify_potential};
use mpg_lab::metrics::{
    certified_frontier, default_visitation_policies, estimate_visitation_ratio_m, fit_reward_smoothness,
    fit_transition_nu, npg_br_inner_iterations, optimal_welfare, optimal_welfare_brute_force, theorem_iteration_bounds,
    verify_potential_below_welfare, verify_reward_transition_smoothness, PolicyPairs,
};
use mpg_lab::{MarkovGame, MpgError, ProductPolicy};
use serde::Serialize;
use serde_json::{json, Value};

use super::config::CertifyConfig;
use super::output;

const POTENTIAL_TRIALS: u64 = 8;

/// A successful section serializes its value; a failed one becomes
/// `{"error": {"kind", "message"}}`.
fn section<T: Serialize>(result: mpg_lab::Result<T>) -> Result<Value> {
    Ok(match result {
        Ok(value) => serde_json::to_value(value)?,
        Err(err) => error_value(&err),
    })
}

fn error_value(err: &MpgError) -> Value {
    json!({ "error": { "kind": err.kind(), "message": err.to_string() } })
}

fn potential_section(game: &MarkovGame, seed: u64) -> Result<Value> {
    if !game.has_potential() {
        return Ok(json!({ "status": "absent" }));
    }
    let mut trials = vec![ProductPolicy::uniform(game)];
    trials.extend((0..POTENTIAL_TRIALS).map(|k| softmax_policy(&init_params(seed.wrapping_add(k), game))));
    let verdict = section(verify_potential(game, &trials))?;
    Ok(json!({ "status": "present", "trial_policies": trials.len(), "check": verdict }))
}

fn counting_premise_section(game: &MarkovGame, pairs: &mpg_lab::Result<PolicyPairs>) -> Result<Value> {
    match pairs {
        Ok(p) if game.has_potential() => section(verify_potential_below_welfare(game, &p.policies)),
        Ok(_) => Ok(json!({ "status": "absent" })),
        Err(err) => Ok(error_value(err)),
    }
}

fn smoothness_section(
    game: &MarkovGame,
    config: &CertifyConfig,
    pairs: &mpg_lab::Result<PolicyPairs>,
) -> Result<Value> {
    let pairs = match pairs {
        Ok(p) => p,
        Err(err) => return Ok(error_value(err)),
    };
    Ok(match certified_frontier(game, &config.alpha_grid, pairs) {
        Ok(frontier) => json!({ "policy_set": pairs.descriptor, "frontier": frontier }),
        Err(err) => error_value(&err),
    })
}

fn reward_transition_section(game: &MarkovGame, pairs: &mpg_lab::Result<PolicyPairs>) -> Result<Value> {
    let pairs = match pairs {
        Ok(p) => p,
        Err(err) => return Ok(error_value(err)),
    };
    let kappa = 1.0;
    let result = fit_reward_smoothness(game, pairs).and_then(|fit| {
        let nu = fit_transition_nu(game, kappa, pairs)?;
        verify_reward_transition_smoothness(game, fit.lambda_r, fit.mu_r, kappa, nu, pairs)
    });
    section(result)
}

pub fn cmd_certify(config: &CertifyConfig) -> Result<()> {
    let game = config.game.load()?;
    let welfare = if config.brute_force {
        optimal_welfare_brute_force(&game)
    } else {
        optimal_welfare(&game)
    };
    let visitation = default_visitation_policies(&game, config.seed)
        .and_then(|policies| estimate_visitation_ratio_m(&game, &policies));
    let bounds = match &visitation {
        Ok(m) => section(theorem_iteration_bounds(&game, config.epsilon, m.value))?,
        Err(err) => error_value(err),
    };
    let pairs = PolicyPairs::default_for(&game, config.seed);

    let mut report = json!({
        "game": {
            "source": config.game,
            "num_agents": game.num_agents(),
            "num_states": game.num_states(),
            "action_counts": game.action_counts(),
            "gamma": game.gamma(),
            "has_potential": game.has_potential(),
            "cooperative": game.is_cooperative(),
        },
        "welfare": section(welfare)?,
        "potential": potential_section(&game, config.seed)?,
        "smoothness": smoothness_section(&game, config, &pairs)?,
        "potential_below_welfare": counting_premise_section(&game, &pairs)?,
        "visitation_ratio": section(visitation)?,
        "iteration_bounds": {
            "epsilon": config.epsilon,
            "npg_br_inner_iterations": npg_br_inner_iterations(game.gamma(), config.epsilon),
            "bounds": bounds,
        },
    });
    if config.reward_transition {
        report["reward_transition"] = reward_transition_section(&game, &pairs)?;
    }

    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &config.out {
        Some(path) => output::write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
