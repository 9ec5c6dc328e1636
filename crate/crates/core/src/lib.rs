//! Exact-arithmetic laboratory for policy-gradient dynamics in Markov
//! potential games.
//!
//! Games are small and tabular, so every quantity (values, visitation,
//! gradients, best responses, Nash-gaps, price of anarchy) is computed
//! exactly with dense linear algebra rather than estimated from samples.

pub mod best_response;
pub mod dynamics;
pub mod environments;
pub mod error;
pub mod eval;
pub mod game;
pub mod metrics;
pub mod nn;

pub use error::{MpgError, Result};
pub use game::{build_game, GameSpec, MarkovGame, PolicyParams, ProductPolicy};
