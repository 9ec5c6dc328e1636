use serde::{Deserialize, Serialize};

use super::smoothness::PolicyPairs;
use crate::error::{MpgError, Result};
use crate::eval::{induced_transition, resolvent};
use crate::game::{MarkovGame, ProductPolicy};

/// Deterministic policy sets above this size are left out of the default set.
pub const MAX_DETERMINISTIC_VISITATION_SET: f64 = 4096.0;
pub const RANDOM_VISITATION_POLICIES: usize = 100;

/// Empirical `max_{pi, pi'} || d^pi_mu / d^pi'_mu ||_inf` over a finite policy set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitationRatio {
    pub value: f64,
    /// Always true: the maximum over a subset of policies bounds M from below.
    pub lower_bound: bool,
    pub policy_count: usize,
}

/// Discounted visitation `mu^T (I - gamma P_pi)^{-1}`.
pub fn visitation(game: &MarkovGame, policy: &ProductPolicy) -> Result<Vec<f64>> {
    Ok(resolvent(&induced_transition(game, policy)?, game.gamma())?.apply_left(game.mu()))
}

/// Max over ordered pairs of `max_s d^pi(s) / d^pi'(s)`.
pub fn estimate_visitation_ratio_m(game: &MarkovGame, policies: &[ProductPolicy]) -> Result<VisitationRatio> {
    if policies.is_empty() {
        return Err(MpgError::InvalidConfig("policy set is empty".into()));
    }
    let n = game.num_states();
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut lo = vec![f64::INFINITY; n];
    for policy in policies {
        let d = visitation(game, policy)?;
        for (s, &x) in d.iter().enumerate() {
            if x <= 0.0 {
                return Err(MpgError::ZeroVisitation { state: s, value: x });
            }
            hi[s] = hi[s].max(x);
            lo[s] = lo[s].min(x);
        }
    }
    // the pairwise maximum separates per state: max_s max_pi d / min_pi' d
    let value = hi.iter().zip(&lo).map(|(h, l)| h / l).fold(1.0, f64::max);
    Ok(VisitationRatio {
        value,
        lower_bound: true,
        policy_count: policies.len(),
    })
}

/// All deterministic product policies when at most
/// [`MAX_DETERMINISTIC_VISITATION_SET`] exist, plus
/// [`RANDOM_VISITATION_POLICIES`] seeded random mixed policies.
pub fn default_visitation_policies(game: &MarkovGame, seed: u64) -> Result<Vec<ProductPolicy>> {
    let mut policies = if game.deterministic_policy_count() <= MAX_DETERMINISTIC_VISITATION_SET {
        PolicyPairs::deterministic_policies(game, MAX_DETERMINISTIC_VISITATION_SET)?
    } else {
        Vec::new()
    };
    policies.extend(PolicyPairs::random_policies(game, RANDOM_VISITATION_POLICIES, seed));
    Ok(policies)
}
