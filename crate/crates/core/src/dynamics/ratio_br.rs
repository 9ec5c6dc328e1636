//! Maximum-gain epsilon-ratio best-response dynamics.

use serde::{Deserialize, Serialize};

use crate::best_response::best_response;
use crate::error::{MpgError, Result};
use crate::eval::evaluate;
use crate::game::{softmax_policy, MarkovGame, PolicyParams};

/// Logit placed on the chosen action when a deterministic best response is
/// embedded in a softmax table; every other logit is zero.
pub const DETERMINISTIC_LOGIT: f64 = 27.631021115928547; // ln(1e12)

/// Direction of the epsilon-ratio-Nash test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioConvention {
    /// `V^i(pi) >= (1 - eps) max_dev V^i`, i.e. `BR^i / V^i - 1 <= eps / (1 - eps)`.
    #[default]
    Conventional,
    /// `max_dev V^i <= (1 - eps) V^i`, requiring the best deviation to fall below the current value.
    Reversed,
}

impl RatioConvention {
    /// Whether an agent with current value `value` and best-response value
    /// `br` passes the ratio test.
    pub fn satisfied(self, value: f64, br: f64, epsilon: f64) -> bool {
        match self {
            RatioConvention::Conventional => br / value - 1.0 <= epsilon / (1.0 - epsilon) + 1e-12,
            RatioConvention::Reversed => br <= (1.0 - epsilon) * value + 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RatioBrOutcome {
    pub params: PolicyParams,
    /// Agent moved to its best response, `None` once the policy is ratio-Nash.
    pub agent: Option<usize>,
    pub is_ratio_nash: bool,
    /// `BR^i(mu) - V^i(mu)` per agent.
    pub gains: Vec<f64>,
}

/// One round: stop if the policy is epsilon-ratio-Nash, otherwise move the
/// agent with the largest absolute gain (lowest index on ties) to its exact
/// deterministic best response.
pub fn max_gain_ratio_br_round(
    game: &MarkovGame,
    params: &PolicyParams,
    epsilon: f64,
    convention: RatioConvention,
) -> Result<RatioBrOutcome> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(MpgError::InvalidConfig(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let policy = softmax_policy(params);
    let eval = evaluate(game, &policy)?;
    let mut gains = Vec::with_capacity(game.num_agents());
    let mut responses = Vec::with_capacity(game.num_agents());
    let mut all_satisfied = true;
    for i in 0..game.num_agents() {
        let value = eval.v_mu[i];
        if value <= 0.0 {
            return Err(MpgError::NonPositiveValue(format!("V^{i}(mu) = {value}")));
        }
        let br = best_response(game, &policy, i)?;
        all_satisfied &= convention.satisfied(value, br.value_mu, epsilon);
        gains.push(br.value_mu - value);
        responses.push(br.policy);
    }
    if all_satisfied {
        return Ok(RatioBrOutcome {
            params: params.clone(),
            agent: None,
            is_ratio_nash: true,
            gains,
        });
    }
    let mut best = 0;
    for (i, &g) in gains.iter().enumerate() {
        if g > gains[best] {
            best = i;
        }
    }
    let mut next = params.clone();
    let c = game.num_actions(best);
    for (s, &a) in responses[best].iter().enumerate() {
        for b in 0..c {
            next.set(best, s, b, if a == b { DETERMINISTIC_LOGIT } else { 0.0 });
        }
    }
    Ok(RatioBrOutcome {
        params: next,
        agent: Some(best),
        is_ratio_nash: false,
        gains,
    })
}
