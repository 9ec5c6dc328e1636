//! Learning dynamics: tabular and neural policy gradient, natural policy
//! gradient, NPG best response, and maximum-gain ratio best response.

pub mod adam;
pub mod gradient;
pub mod npg;
pub mod ratio_br;
pub mod run;
pub mod stepsize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MpgError, Result};
use crate::nn::Activation;

pub use adam::{adam_step, AdamState};
pub use gradient::{
    log_barrier_objective_grad, log_barrier_penalty, log_barrier_penalty_grad, pg_gradient, pg_gradient_from, pg_step,
    table_norm, ParamTable,
};
pub use npg::{
    advantage_tables, center_per_state, fisher_npg_oracle, npg_br_round, npg_policy_multiplicative, npg_step,
    soft_policy_iteration, NpgBrOutcome,
};
pub use ratio_br::{max_gain_ratio_br_round, RatioBrOutcome, RatioConvention, DETERMINISTIC_LOGIT};
pub use run::{run_dynamics, run_dynamics_from, run_dynamics_with, PolicyState, RunRecord, RunRow, UpdatedAgent};
pub use stepsize::{beta_lambda, beta_lambda_for, safe_pg_stepsize, safe_pg_stepsize_for};

/// Which dynamic to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Simultaneous tabular softmax policy gradient (regularized when `lambda > 0`).
    Pg,
    /// Policy gradient on the log-barrier regularized objective; identical to
    /// `Pg` with the same `lambda`.
    PgLogbarrier,
    /// Simultaneous natural policy gradient (soft policy iteration).
    Npg,
    /// Non-concurrent NPG committing only the maximum-gain agent.
    NpgBr,
    /// Maximum-gain epsilon-ratio best response with exact best responses.
    MaxGainBr,
    /// Policy gradient on MLP policies.
    NnPg,
    /// Adam on MLP policies.
    NnAdam,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Pg,
        Algorithm::PgLogbarrier,
        Algorithm::Npg,
        Algorithm::NpgBr,
        Algorithm::MaxGainBr,
        Algorithm::NnPg,
        Algorithm::NnAdam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pg => "pg",
            Algorithm::PgLogbarrier => "pg_logbarrier",
            Algorithm::Npg => "npg",
            Algorithm::NpgBr => "npg_br",
            Algorithm::MaxGainBr => "max_gain_br",
            Algorithm::NnPg => "nn_pg",
            Algorithm::NnAdam => "nn_adam",
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(self, Algorithm::NnPg | Algorithm::NnAdam)
    }

    /// Whether the log-barrier coefficient applies.
    pub fn accepts_lambda(self) -> bool {
        matches!(
            self,
            Algorithm::Pg | Algorithm::PgLogbarrier | Algorithm::NnPg | Algorithm::NnAdam
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = MpgError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL.into_iter().find(|a| a.name() == key).ok_or_else(|| {
            let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            MpgError::InvalidConfig(format!(
                "unknown algorithm '{s}' (expected one of {})",
                names.join(", ")
            ))
        })
    }
}

/// Settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub algorithm: Algorithm,
    pub eta: f64,
    /// Log-barrier coefficient; 0 disables the regularizer.
    pub lambda: f64,
    /// Inner soft-policy-iteration steps of NPG-BR.
    pub k: usize,
    pub max_iters: u64,
    /// Ratio-Nash target of the maximum-gain best-response dynamic.
    pub epsilon: f64,
    pub seed: u64,
    /// Metrics are recorded every `stride` iterations and at the last one.
    pub stride: u64,
    pub ratio_convention: RatioConvention,
    pub activation: Activation,
    /// Hidden width of MLP policies; `None` uses the number of states.
    pub width: Option<usize>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            algorithm: Algorithm::Pg,
            eta: 0.1,
            lambda: 0.0,
            k: 1,
            max_iters: 400,
            epsilon: 0.01,
            seed: 0,
            stride: 1,
            ratio_convention: RatioConvention::Conventional,
            activation: Activation::Relu,
            width: None,
        }
    }
}

impl DynamicsConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        DynamicsConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MpgError::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be a positive finite number, got {}", self.eta));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.lambda > 0.0 && !self.algorithm.accepts_lambda() {
            return bad(format!("lambda is not used by algorithm {}", self.algorithm));
        }
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.width == Some(0) {
            return bad("MLP width must be at least 1".into());
        }
        Ok(())
    }
}
