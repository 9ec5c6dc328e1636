//! Natural policy gradient in its soft-policy-iteration form, the
//! pseudoinverse Fisher oracle, and the non-concurrent NPG-BR round.

use nalgebra::{DMatrix, DVector};

use super::gradient::{pg_gradient_from, ParamTable};
use crate::error::{MpgError, Result};
use crate::eval::{evaluate, EvalResult};
use crate::game::{softmax_policy, MarkovGame, PolicyParams, ProductPolicy};

/// `theta^i += eta A^i(s, a)` for every agent at once.
pub fn npg_step(game: &MarkovGame, params: &PolicyParams, eta: f64) -> Result<PolicyParams> {
    let eval = evaluate(game, &softmax_policy(params))?;
    Ok(params.add_scaled(&eval.a_local, eta))
}

/// The multiplicative-weights form of the same update:
/// `pi^i(a|s) exp(eta A^i(s,a)) / Z^i(s)`.
pub fn npg_policy_multiplicative(game: &MarkovGame, params: &PolicyParams, eta: f64) -> Result<ProductPolicy> {
    let policy = softmax_policy(params);
    let eval = evaluate(game, &policy)?;
    let tables = (0..game.num_agents())
        .map(|i| {
            let c = game.num_actions(i);
            let mut table = Vec::with_capacity(c * game.num_states());
            for s in 0..game.num_states() {
                let row = policy.row(i, s);
                let adv = &eval.a_local[i][s * c..(s + 1) * c];
                // shift by the row max so exp never overflows; cancels in Z
                let shift = adv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = row
                    .iter()
                    .zip(adv)
                    .map(|(p, a)| p * (eta * (a - shift)).exp())
                    .collect();
                let z: f64 = weights.iter().sum();
                table.extend(weights.into_iter().map(|w| w / z));
            }
            table
        })
        .collect();
    ProductPolicy::from_tables(game, tables)
}

/// `(F^i)^+ grad_{theta^i} V^i` assembled explicitly, for validating [`npg_step`].
///
/// `F^i` uses the normalized visitation `(1 - gamma) d` and the result is
/// scaled by `(1 - gamma)`, which makes it equal to the advantage projected onto
/// the per-state zero-sum subspace. Pseudoinverse by SVD with cutoff
/// `1e-10 * sigma_max`. Intended for small instances.
pub fn fisher_npg_oracle(game: &MarkovGame, params: &PolicyParams, agent: usize) -> Result<Vec<f64>> {
    if agent >= game.num_agents() {
        return Err(MpgError::DimensionMismatch(format!("agent {agent} out of range")));
    }
    let policy = softmax_policy(params);
    let eval = evaluate(game, &policy)?;
    Ok(fisher_direction(game, &policy, &eval, agent))
}

fn fisher_direction(game: &MarkovGame, policy: &ProductPolicy, eval: &EvalResult, agent: usize) -> Vec<f64> {
    let n = game.num_states();
    let c = game.num_actions(agent);
    let dim = n * c;
    let gamma = game.gamma();
    let mut fisher = DMatrix::<f64>::zeros(dim, dim);
    for s in 0..n {
        let weight = (1.0 - gamma) * eval.d_mu[s];
        let row = policy.row(agent, s);
        for a in 0..c {
            // score vector of log pi(a|s): e_a - pi(.|s) on the block of state s
            let mut score = DVector::<f64>::zeros(dim);
            for b in 0..c {
                score[s * c + b] = -row[b];
            }
            score[s * c + a] += 1.0;
            fisher += (&score * score.transpose()) * (weight * row[a]);
        }
    }
    let grad = DVector::from_vec(pg_gradient_from(policy, eval)[agent].clone());

    let svd = fisher.svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-10 * sigma_max;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut direction = DVector::<f64>::zeros(dim);
    for (k, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > cutoff {
            let coeff = u.column(k).dot(&grad) / sigma;
            direction += v_t.row(k).transpose() * coeff;
        }
    }
    direction.iter().map(|x| x * (1.0 - gamma)).collect()
}

/// Outcome of one NPG-BR round.
#[derive(Clone, Debug)]
pub struct NpgBrOutcome {
    pub params: PolicyParams,
    /// The committed agent, `None` when no candidate improved the potential.
    pub agent: Option<usize>,
    /// Largest candidate gain in `Phi(mu)`.
    pub gain: f64,
    pub gains: Vec<f64>,
}

/// `Phi(mu)` when the game has a potential, otherwise the agent's own value.
fn objective(eval: &EvalResult, agent: usize) -> f64 {
    eval.phi_mu.unwrap_or(eval.v_mu[agent])
}

/// One outer round of NPG-BR.
///
/// Every agent independently runs `k` unit-step soft policy iterations
/// against the frozen others; only the agent with the largest potential gain
/// is committed (lowest index on ties), and only if that gain is positive.
pub fn npg_br_round(game: &MarkovGame, params: &PolicyParams, k: usize) -> Result<NpgBrOutcome> {
    if k == 0 {
        return Err(MpgError::InvalidConfig("K must be at least 1".into()));
    }
    let base = evaluate(game, &softmax_policy(params))?;
    let mut candidates = Vec::with_capacity(game.num_agents());
    let mut gains = Vec::with_capacity(game.num_agents());
    for i in 0..game.num_agents() {
        let (candidate, eval) = soft_policy_iteration(game, params, i, k)?;
        gains.push(objective(&eval, i) - objective(&base, i));
        candidates.push(candidate);
    }
    let mut best = 0;
    for (i, &g) in gains.iter().enumerate() {
        if g > gains[best] {
            best = i;
        }
    }
    let gain = gains[best];
    if gain > 0.0 {
        let mut next = params.clone();
        next.agent_mut(best).copy_from_slice(candidates[best].agent(best));
        Ok(NpgBrOutcome {
            params: next,
            agent: Some(best),
            gain,
            gains,
        })
    } else {
        Ok(NpgBrOutcome {
            params: params.clone(),
            agent: None,
            gain,
            gains,
        })
    }
}

/// `k` steps of `theta^i += A^i` with the other agents frozen. Returns the
/// final parameters and their evaluation.
pub fn soft_policy_iteration(
    game: &MarkovGame,
    params: &PolicyParams,
    agent: usize,
    k: usize,
) -> Result<(PolicyParams, EvalResult)> {
    let mut current = params.clone();
    let mut eval = evaluate(game, &softmax_policy(&current))?;
    for _ in 0..k {
        for (t, a) in current.agent_mut(agent).iter_mut().zip(&eval.a_local[agent]) {
            *t += a;
        }
        eval = evaluate(game, &softmax_policy(&current))?;
    }
    Ok((current, eval))
}

/// Removes the per-state mean from a flat agent table (projection onto the
/// directions softmax can see).
pub fn center_per_state(table: &[f64], num_actions: usize) -> Vec<f64> {
    table
        .chunks(num_actions)
        .flat_map(|row| {
            let mean = row.iter().sum::<f64>() / num_actions as f64;
            row.iter().map(move |x| x - mean)
        })
        .collect()
}

/// Advantage tables, for callers that need the raw NPG direction.
pub fn advantage_tables(game: &MarkovGame, params: &PolicyParams) -> Result<ParamTable> {
    Ok(evaluate(game, &softmax_policy(params))?.a_local)
}
