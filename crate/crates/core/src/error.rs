use thiserror::Error;

use crate::factor_graph::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),
    #[error("invalid factor graph: {}", format_violations(.0))]
    InvalidGraph(Vec<Violation>),
    #[error("search space too large: {states} states exceeds cap {cap}")]
    TooLarge { states: String, cap: u128 },
    #[error("pairwise factor on ({0}, {1}) is not submodular in energy form")]
    NotSubmodular(usize, usize),
    #[error("graph cut requires exactly 2 labels, got {0}")]
    WrongArity(usize),
    #[error("unsupported factor: {0}")]
    UnsupportedFactor(String),
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error("previous-solution list is empty")]
    EmptyList,
    #[error("invalid regions: {0}")]
    InvalidRegions(String),
    #[error("list {list} has {have} items, needs {need}")]
    TooFew { list: usize, have: usize, need: usize },
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("bound not verifiable: {0}")]
    NotVerifiable(String),
    #[error("degenerate instance: optimum equals minimum ({0})")]
    Degenerate(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("greedy step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            other => Error::Step {
                step,
                source: Box::new(other),
            },
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
