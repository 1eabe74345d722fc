//! MAP solvers for plain and HOP-augmented factor graphs.

mod binary;
pub mod cardinality;
pub mod exact;
pub mod expansion;
pub mod graphcut;
pub mod hop;
pub mod local_search;
pub mod maxflow;
pub mod message_passing;

pub use cardinality::cardinality_messages;
pub use exact::{enum_cap_from_env, for_each_labeling, map_exact, map_exact_by, DEFAULT_ENUM_CAP, ENUM_CAP_ENV};
pub use expansion::{best_expansion_move, map_alpha_expansion, map_alpha_expansion_from, ExpansionOptions};
pub use graphcut::map_graphcut_binary;
pub use hop::{uniform_label, CardinalityFactor, HopAugmentation, HopTerm};
pub use local_search::local_search;
pub use maxflow::{max_flow, FlowNetwork, MaxFlow};
pub use message_passing::{map_with_cardinality, MessagePassingOptions};
