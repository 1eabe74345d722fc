//! Greedy construction of diverse lists.
//!
//! Step `t` compiles the diversity gain relative to the first `t - 1` picks
//! into high-order potentials and solves the augmented MAP problem. Lists may
//! repeat labelings. Every step's exact marginal gain and, on small
//! instances, the best achievable gain are kept in a [`GreedyTrace`].

mod combine;
mod driver;
mod list;

pub use combine::{combine_concat, concat_quotas, grid_search_linear, random_baseline, rescore};
pub use driver::{
    auto_backend, combine_linear, greedy_diverse, solve_augmented, Backend, Fault, GreedyOptions,
    GreedyTrace, TraceStep,
};
pub use list::{exact_list_objective, list_objective, Solution, SolutionList};

#[cfg(test)]
mod tests;
