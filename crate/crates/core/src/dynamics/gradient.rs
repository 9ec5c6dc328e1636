use crate::error::{MpgError, Result};
use crate::eval::{evaluate, EvalResult};
use crate::game::{softmax_policy, MarkovGame, PolicyParams, ProductPolicy};

/// Per-agent table shaped like [`PolicyParams`].
pub type ParamTable = Vec<Vec<f64>>;

/// `d(s) pi^i(a|s) A^i(s, a)` for every `(i, s, a)`, from an existing evaluation.
pub fn pg_gradient_from(policy: &ProductPolicy, eval: &EvalResult) -> ParamTable {
    (0..policy.num_agents())
        .map(|i| {
            let c = policy.action_counts()[i];
            policy
                .agent_table(i)
                .iter()
                .zip(&eval.a_local[i])
                .enumerate()
                .map(|(k, (p, adv))| eval.d_mu[k / c] * p * adv)
                .collect()
        })
        .collect()
}

/// Exact softmax policy gradient `dPhi(mu) / dtheta^i_{s,a} = d^pi_mu(s) pi^i(a|s) A^i(s, a)`
/// with the unnormalized visitation measure.
pub fn pg_gradient(game: &MarkovGame, params: &PolicyParams) -> Result<ParamTable> {
    let policy = softmax_policy(params);
    let eval = evaluate(game, &policy)?;
    Ok(pg_gradient_from(&policy, &eval))
}

/// One simultaneous gradient-ascent step for all agents.
pub fn pg_step(game: &MarkovGame, params: &PolicyParams, eta: f64) -> Result<PolicyParams> {
    let grad = pg_gradient(game, params)?;
    Ok(params.add_scaled(&grad, eta))
}

/// `lambda * sum_i (mean_{s,a} log pi^i(a|s) + log |A^i|)`, i.e. minus the
/// summed KL divergences from uniform play, averaged over states.
pub fn log_barrier_penalty(policy: &ProductPolicy, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let n = policy.num_states() as f64;
    (0..policy.num_agents())
        .map(|i| {
            let c = policy.action_counts()[i] as f64;
            let mean_log: f64 = policy.agent_table(i).iter().map(|p| p.ln()).sum::<f64>() / (n * c);
            mean_log + c.ln()
        })
        .sum::<f64>()
        * lambda
}

/// Gradient of [`log_barrier_penalty`] with respect to the logits:
/// `(lambda / |S|) (1 / |A^i| - pi^i(a|s))`.
pub fn log_barrier_penalty_grad(policy: &ProductPolicy, lambda: f64) -> ParamTable {
    let n = policy.num_states() as f64;
    (0..policy.num_agents())
        .map(|i| {
            let c = policy.action_counts()[i] as f64;
            policy
                .agent_table(i)
                .iter()
                .map(|p| lambda / n * (1.0 / c - p))
                .collect()
        })
        .collect()
}

/// Value and gradient of `L(theta) = Phi_theta(mu) + log_barrier_penalty`.
pub fn log_barrier_objective_grad(game: &MarkovGame, params: &PolicyParams, lambda: f64) -> Result<(f64, ParamTable)> {
    if !(lambda >= 0.0) {
        return Err(MpgError::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let policy = softmax_policy(params);
    let eval = evaluate(game, &policy)?;
    let phi = eval.phi_mu.ok_or(MpgError::MissingPotential)?;
    let mut grad = pg_gradient_from(&policy, &eval);
    if lambda > 0.0 {
        let reg = log_barrier_penalty_grad(&policy, lambda);
        for (g, r) in grad.iter_mut().zip(&reg) {
            for (x, y) in g.iter_mut().zip(r) {
                *x += y;
            }
        }
    }
    Ok((phi + log_barrier_penalty(&policy, lambda), grad))
}

/// Euclidean norm over all entries of a per-agent table.
pub fn table_norm(table: &[Vec<f64>]) -> f64 {
    table.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}
