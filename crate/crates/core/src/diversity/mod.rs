//! Group-coverage diversity, marginal gains, and their compiled potentials.
//!
//! Every family measures `D(S) = sum_i h(|G_i ∩ S|)` over its own groups:
//! labels present, label transitions on edges, Hamming balls around
//! labelings, or uniformly labeled regions. [`DiversityModel::compile`]
//! turns the weighted gain `lambda * (d(y | S) + p(y))` into a
//! [`HopAugmentation`](crate::inference::HopAugmentation).
//!
//! Hamming-ball families optimize a lower bound on the union increment;
//! [`DiversityModel::exact_gain`] returns the true increment for small `n`.

mod coverage;
mod envelope;
mod families;
mod hamming;
mod model;

pub use coverage::{coverage_gain, coverage_value, ConcaveH};
pub use envelope::{compile_upper_envelope, UpperEnvelope};
pub use families::{
    check_regions, compile_hamming_factors, compile_label_cost, compile_region_rewards,
    compile_transition, covered_regions, divmbest_augment, divmbest_gain, hamming_lb_gain,
    label_cost_gain, labels_present, realized_transitions, region_consistency_gain,
    transition_gain, HammingMode,
};
pub use hamming::{
    ball_intersection_by_distance, ball_intersection_by_distance_f64, ball_intersection_size,
    hamming_ball_size, hamming_ball_size_f64, hamming_exact_gain, hamming_union_size,
};
pub use model::{Costs, DiversityModel, Family, GroupState, Parsimony, DEFAULT_GAMMA, DEFAULT_PARSIMONY};
