use crate::best_response::best_response;
use crate::error::{MpgError, Result};
use crate::eval::evaluate;
use crate::game::{MarkovGame, ProductPolicy};

/// Per-agent current and best-response values at `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationValues {
    pub values: Vec<f64>,
    pub best_responses: Vec<f64>,
}

impl DeviationValues {
    /// `BR^i(mu) - V^i(mu)` per agent.
    pub fn gaps(&self) -> Vec<f64> {
        self.best_responses
            .iter()
            .zip(&self.values)
            .map(|(b, v)| b - v)
            .collect()
    }
}

/// Exact `V^i(mu)` and `max_{pi'^i} V^i_{pi'^i, pi^-i}(mu)` for every agent.
pub fn deviation_values(game: &MarkovGame, policy: &ProductPolicy) -> Result<DeviationValues> {
    let eval = evaluate(game, policy)?;
    let best_responses = (0..game.num_agents())
        .map(|i| best_response(game, policy, i).map(|br| br.value_mu))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationValues {
        values: eval.v_mu,
        best_responses,
    })
}

/// `max_i (BR^i(mu) - V^i(mu))`, clamped at zero.
pub fn nash_gap(game: &MarkovGame, policy: &ProductPolicy) -> Result<f64> {
    Ok(nash_gap_from(&deviation_values(game, policy)?))
}

pub fn nash_gap_from(dev: &DeviationValues) -> f64 {
    dev.gaps().into_iter().fold(0.0, f64::max)
}

/// `max_i (1 - V^i(mu) / BR^i(mu))`, clamped at zero: the smallest epsilon
/// for which the policy is epsilon-ratio-Nash.
pub fn ratio_nash_gap(game: &MarkovGame, policy: &ProductPolicy) -> Result<f64> {
    ratio_nash_gap_from(&deviation_values(game, policy)?)
}

pub fn ratio_nash_gap_from(dev: &DeviationValues) -> Result<f64> {
    let mut gap = 0.0f64;
    for (i, (&v, &br)) in dev.values.iter().zip(&dev.best_responses).enumerate() {
        if v <= 0.0 {
            return Err(MpgError::NonPositiveValue(format!("V^{i}(mu) = {v}")));
        }
        gap = gap.max(1.0 - v / br);
    }
    Ok(gap)
}
