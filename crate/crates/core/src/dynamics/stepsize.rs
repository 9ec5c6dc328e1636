use crate::error::{MpgError, Result};
use crate::game::MarkovGame;

/// Largest step size covered by the asymptotic-convergence guarantee for
/// simultaneous softmax PG:
/// `min((1-gamma) / (N max(5, sqrt N) (Phi_max - Phi_min)), 4 (1-gamma)^3 / (41 N))`.
pub fn safe_pg_stepsize(game: &MarkovGame) -> Result<f64> {
    let (lo, hi) = game.potential_bounds().ok_or(MpgError::MissingPotential)?;
    Ok(safe_pg_stepsize_for(game.num_agents(), game.gamma(), lo, hi))
}

pub fn safe_pg_stepsize_for(num_agents: usize, gamma: f64, phi_min: f64, phi_max: f64) -> f64 {
    let n = num_agents as f64;
    let range = phi_max - phi_min;
    let first = if range > 0.0 {
        (1.0 - gamma) / (n * 5f64.max(n.sqrt()) * range)
    } else {
        f64::INFINITY
    };
    let second = 4.0 * (1.0 - gamma).powi(3) / (41.0 * n);
    first.min(second)
}

/// Smoothness bound of the log-barrier objective:
/// `41 N / (4 (1-gamma)^3) + 2 lambda N / |S|`.
pub fn beta_lambda(game: &MarkovGame, lambda: f64) -> f64 {
    beta_lambda_for(game.num_agents(), game.num_states(), game.gamma(), lambda)
}

pub fn beta_lambda_for(num_agents: usize, num_states: usize, gamma: f64, lambda: f64) -> f64 {
    let n = num_agents as f64;
    41.0 * n / (4.0 * (1.0 - gamma).powi(3)) + 2.0 * lambda * n / num_states as f64
}
