//! Closed-form iteration and counting bounds.

use serde::{Deserialize, Serialize};

use crate::error::{MpgError, Result};
use crate::game::MarkovGame;

/// Sufficient iteration counts for a target Nash-gap `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationBounds {
    /// Log-barrier PG with `lambda = epsilon / (2M)` and `eta = 1 / beta_lambda`.
    pub t_logbarrier: f64,
    /// NPG-BR inner-loop length `ceil(4 / ((1 - gamma)^2 epsilon))`.
    pub k_npgbr: f64,
    /// Total NPG-BR inner steps, read as `(Phi_max - Phi_min) (2 / epsilon) K`.
    pub t_npgbr: f64,
}

/// Bounds for `game`, using its potential range.
pub fn theorem_iteration_bounds(game: &MarkovGame, epsilon: f64, m: f64) -> Result<IterationBounds> {
    let (lo, hi) = game.potential_bounds().ok_or(MpgError::MissingPotential)?;
    Ok(iteration_bounds_for(
        game.num_agents(),
        game.num_states(),
        game.max_actions(),
        game.gamma(),
        hi - lo,
        epsilon,
        m,
    ))
}

pub fn iteration_bounds_for(
    num_agents: usize,
    num_states: usize,
    max_actions: usize,
    gamma: f64,
    phi_range: f64,
    epsilon: f64,
    m: f64,
) -> IterationBounds {
    let n = num_agents as f64;
    let s = num_states as f64;
    let a2 = (max_actions as f64).powi(2);
    let t_logbarrier = 328.0 * n * m * m * s * s * a2 * phi_range / ((1.0 - gamma).powi(3) * epsilon * epsilon)
        + 32.0 * n * m * s * a2 * phi_range / epsilon;
    let k_npgbr = npg_br_inner_iterations(gamma, epsilon);
    IterationBounds {
        t_logbarrier,
        k_npgbr,
        t_npgbr: phi_range * (2.0 / epsilon) * k_npgbr,
    }
}

/// `ceil(4 / ((1 - gamma)^2 epsilon))`.
pub fn npg_br_inner_iterations(gamma: f64, epsilon: f64) -> f64 {
    // the tiny slack absorbs round-off in products such as 0.05^2 * 0.01
    let raw = 4.0 / ((1.0 - gamma).powi(2) * epsilon);
    (raw * (1.0 - 1e-12)).ceil()
}

/// Welfare threshold `alpha / ((1 + beta)(1 + sigma)) V_*(mu)` separating good from bad policies.
pub fn good_policy_threshold(alpha: f64, beta: f64, sigma: f64, optimal_welfare: f64) -> f64 {
    alpha / ((1.0 + beta) * (1.0 + sigma)) * optimal_welfare
}

/// Upper bound on the number of bad policies along `T` rounds of maximum-gain
/// epsilon-ratio best response:
/// `(ln(Phi_max / Phi_0) - T ln(1 / (1 - epsilon))) / ln rho`,
/// `rho = (1 - epsilon)(1 + sigma (1 + beta) / N)`.
pub fn ratio_br_bad_count_bound(
    phi_0: f64,
    phi_max: f64,
    rounds: usize,
    epsilon: f64,
    sigma: f64,
    beta: f64,
    num_agents: usize,
) -> f64 {
    let rho = (1.0 - epsilon) * (1.0 + sigma * (1.0 + beta) / num_agents as f64);
    ((phi_max / phi_0).ln() - rounds as f64 * (1.0 / (1.0 - epsilon)).ln()) / rho.ln()
}

/// The NPG-BR analogue, with per-round growth `1 + epsilon / (2 (1 - gamma))`
/// for good policies.
pub fn npg_br_bad_count_bound(
    phi_0: f64,
    phi_max: f64,
    rounds: usize,
    epsilon: f64,
    gamma: f64,
    sigma: f64,
    beta: f64,
    num_agents: usize,
) -> f64 {
    let good = 1.0 + epsilon / (2.0 * (1.0 - gamma));
    let rho = (1.0 + sigma * (1.0 + beta) / num_agents as f64) / good;
    ((phi_max / phi_0).ln() - rounds as f64 * good.ln()) / rho.ln()
}

/// POA guaranteed for epsilon-ratio-Nash policies of an (alpha, beta)-smooth game.
pub fn ratio_nash_poa_bound(alpha: f64, beta: f64, epsilon: f64) -> f64 {
    (1.0 - epsilon) * alpha / (1.0 + (1.0 - epsilon) * beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_instance() {
        let b = iteration_bounds_for(1, 1, 1, 0.0, 1.0, 1.0, 1.0);
        assert!((b.t_logbarrier - 360.0).abs() < 1e-9);
    }

    #[test]
    fn inner_loop_length() {
        assert_eq!(npg_br_inner_iterations(0.95, 0.01), 160_000.0);
        assert_eq!(npg_br_inner_iterations(0.9, 0.5), 800.0);
        let b = iteration_bounds_for(2, 4, 2, 0.95, 60.0, 0.01, 1.0);
        assert_eq!(b.k_npgbr, 160_000.0);
        assert!((b.t_npgbr - 60.0 * 200.0 * 160_000.0).abs() < 1e-3);
    }

    #[test]
    fn halving_epsilon_quadruples_first_term() {
        let first = |eps: f64| {
            let b = iteration_bounds_for(2, 4, 2, 0.9, 3.0, eps, 2.0);
            b.t_logbarrier - 32.0 * 2.0 * 2.0 * 4.0 * 4.0 * 3.0 / eps
        };
        assert!((first(0.05) / first(0.1) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn poa_bound_arithmetic() {
        assert!((ratio_nash_poa_bound(1.0, 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((ratio_nash_poa_bound(0.5, 1.0, 0.5) - 0.25 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn counting_bound_matches_direct_inequality() {
        // m bad rounds with growth g_bad and T - m good ones with 1/(1-eps) must fit in Phi_max / Phi_0
        let (phi0, phimax, t, eps, sigma, beta, n) = (1.0, 50.0, 10, 0.05, 0.5, 0.3, 2);
        let bound = ratio_br_bad_count_bound(phi0, phimax, t, eps, sigma, beta, n);
        let g_bad: f64 = 1.0 + sigma * (1.0 + beta) / n as f64;
        let g_good: f64 = 1.0 / (1.0 - eps);
        for m in 0..=t {
            let feasible = phi0 * g_bad.powi(m as i32) * g_good.powi((t - m) as i32) <= phimax;
            assert_eq!(feasible, (m as f64) <= bound + 1e-12, "m = {m}");
        }
    }
}
