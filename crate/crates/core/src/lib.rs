//! Diverse M-best structured prediction by greedy submodular maximization.
//!
//! A list of labelings is built one item at a time. Each step maximizes the
//! relevance of a labeling (a factor-graph score) plus a weighted diversity
//! gain relative to the items already chosen. Diversity is measured as
//! concave coverage of groups of labelings, and every gain compiles into a
//! high-order potential, so each greedy step is a MAP problem:
//!
//! | family | groups | potential | solver |
//! |---|---|---|---|
//! | label cost | labels present | label reward | α-expansion |
//! | label transition | adjacent label pairs | cooperative cut | exact / ICM |
//! | Hamming ball | balls around labelings | cardinality | max-product |
//! | region consistency | uniform regions | upper envelope | exact / ICM |
//!
//! [`theory`] checks the approximation guarantees against exhaustive
//! optima and [`eval`] runs oracle-accuracy benchmarks on synthetic grids.

pub mod diversity;
pub mod error;
pub mod eval;
pub mod factor_graph;
pub mod greedy;
pub mod inference;
pub mod theory;

pub use error::{Error, Result};
pub use factor_graph::{shift_nonnegative, FactorGraph, Labeling, PairwiseFactor, PairwiseForm};
