//! Equilibrium, efficiency and smoothness measurements.

pub mod bounds;
pub mod nash;
pub mod smoothness;
pub mod visitation;
pub mod welfare;

pub use bounds::{
    good_policy_threshold, iteration_bounds_for, npg_br_bad_count_bound, npg_br_inner_iterations,
    ratio_br_bad_count_bound, ratio_nash_poa_bound, theorem_iteration_bounds, IterationBounds,
};
pub use nash::{deviation_values, nash_gap, nash_gap_from, ratio_nash_gap, ratio_nash_gap_from, DeviationValues};
pub use smoothness::{
    certified_frontier, fit_reward_smoothness, fit_smoothness_frontier, fit_transition_nu,
    verify_potential_below_welfare, verify_reward_transition_smoothness, verify_smoothness, CheckOutcome,
    FrontierPoint, PolicyPairs, RewardSmoothnessFit, RewardTransitionCertificate, SmoothnessCertificate, Verdict,
    WorstCase,
};
pub use visitation::{default_visitation_policies, estimate_visitation_ratio_m, visitation, VisitationRatio};
pub use welfare::{optimal_welfare, optimal_welfare_brute_force, poa, poa_from_welfare, WelfareMethod, WelfareOptimum};
