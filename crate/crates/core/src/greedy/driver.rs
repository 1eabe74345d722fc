use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diversity::{DiversityModel, GroupState};
use crate::error::{Error, Result};
use crate::factor_graph::{FactorGraph, Labeling};
use crate::inference::{
    local_search, map_alpha_expansion_from, map_exact, map_exact_by, map_graphcut_binary,
    map_with_cardinality, ExpansionOptions, HopAugmentation, MessagePassingOptions, DEFAULT_ENUM_CAP,
};

use super::list::SolutionList;

/// MAP solver used for a greedy step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Auto,
    Exact,
    Expansion,
    GraphCut,
    MessagePassing,
    LocalSearch,
}

impl Backend {
    pub const ALL: [Backend; 6] = [
        Backend::Auto,
        Backend::Exact,
        Backend::Expansion,
        Backend::GraphCut,
        Backend::MessagePassing,
        Backend::LocalSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Auto => "auto",
            Backend::Exact => "exact",
            Backend::Expansion => "expansion",
            Backend::GraphCut => "graph_cut",
            Backend::MessagePassing => "message_passing",
            Backend::LocalSearch => "local_search",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown backend '{s}'"))
    }
}

/// Test hook that sabotages the greedy for negative controls.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Pick the worst labeling each step and report zero slack.
    WorstPickNoSlack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOptions {
    pub backend: Backend,
    /// Cap for exhaustive MAP.
    pub enum_cap: u128,
    /// `Auto` uses exhaustive MAP up to this many labelings.
    pub exact_limit: u128,
    /// The exact best gain is traced up to this many labelings.
    pub trace_limit: u128,
    pub message_passing: MessagePassingOptions,
    pub expansion: ExpansionOptions,
    pub local_sweeps: usize,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions {
            backend: Backend::Auto,
            enum_cap: DEFAULT_ENUM_CAP,
            exact_limit: 1 << 20,
            trace_limit: 1 << 16,
            message_passing: MessagePassingOptions::default(),
            expansion: ExpansionOptions::default(),
            local_sweeps: 100,
            fault: None,
        }
    }
}

impl GreedyOptions {
    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

/// Per-step record of the achieved and best marginal gain of the exact
/// objective `F(a | S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub backend: Backend,
    pub achieved: f64,
    pub best: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub alpha: f64,
    pub steps: Vec<TraceStep>,
}

impl GreedyTrace {
    /// `sum_t epsilon_t`, if every step was traced.
    pub fn total_slack(&self) -> Option<f64> {
        self.steps.iter().map(|s| s.epsilon).sum()
    }
}

/// Picks the MAP solver for `aug` on `graph`.
///
/// Exhaustive when small; otherwise the structured solver matching the
/// potential kinds, falling back to local search when `allow_local`.
pub fn auto_backend(
    graph: &FactorGraph,
    aug: &HopAugmentation,
    options: &GreedyOptions,
    allow_local: bool,
) -> Result<Backend> {
    if graph.state_count().is_some_and(|c| c <= options.exact_limit) {
        return Ok(Backend::Exact);
    }
    let (_, labels, cards, rest) = aug.split(graph.num_vars, graph.num_labels);
    let has_labels = labels.iter().any(|&r| r != 0.0);
    let potts = graph.is_potts();
    Ok(match (has_labels, !cards.is_empty(), rest.is_empty()) {
        (false, false, true) if graph.num_labels == 2 && potts => Backend::GraphCut,
        (false, false, true) if potts => Backend::Expansion,
        (false, _, true) => Backend::MessagePassing,
        (true, false, true) if potts => Backend::Expansion,
        _ if allow_local => Backend::LocalSearch,
        _ => {
            return Err(Error::UnsupportedCombination(
                "no structured solver handles this mix of potentials".into(),
            ))
        }
    })
}

fn unsupported(backend: Backend) -> Error {
    Error::UnsupportedCombination(format!("{backend} cannot handle the compiled potentials"))
}

/// Maximizes `score + aug` with the given backend. `starts` seed local search.
pub fn solve_augmented(
    graph: &FactorGraph,
    aug: &HopAugmentation,
    backend: Backend,
    options: &GreedyOptions,
    starts: &[Labeling],
) -> Result<Labeling> {
    aug.validate(graph.num_vars, graph.num_labels)?;
    let (node, labels, cards, rest) = aug.split(graph.num_vars, graph.num_labels);
    let no_labels = labels.iter().all(|&r| r == 0.0);
    let y = match backend {
        Backend::Auto => unreachable!("resolved before dispatch"),
        Backend::Exact => map_exact(graph, aug, options.enum_cap)?.0,
        Backend::Expansion => {
            if !cards.is_empty() || !rest.is_empty() {
                return Err(unsupported(backend));
            }
            map_alpha_expansion_from(graph, &labels, Some(&node), None, options.expansion)?.0
        }
        Backend::GraphCut => {
            if !no_labels || !cards.is_empty() || !rest.is_empty() {
                return Err(unsupported(backend));
            }
            map_graphcut_binary(graph, Some(&node))?.0
        }
        Backend::MessagePassing => {
            if !no_labels || !rest.is_empty() {
                return Err(unsupported(backend));
            }
            map_with_cardinality(graph, &cards, Some(&node), options.message_passing)?.0
        }
        Backend::LocalSearch => {
            let objective = |y: &[usize]| graph.score_unchecked(y) + aug.evaluate_slice(y);
            let mut init = graph.unary_argmax();
            let mut init_value = objective(&init.0);
            let relaxed = graph
                .is_potts()
                .then(|| map_alpha_expansion_from(graph, &labels, Some(&node), None, options.expansion).ok())
                .flatten()
                .map(|r| r.0);
            for s in starts.iter().chain(relaxed.as_ref()) {
                let v = objective(&s.0);
                if v > init_value {
                    init = s.clone();
                    init_value = v;
                }
            }
            local_search(graph, |y| aug.evaluate_slice(y), &init, options.local_sweeps)?.0
        }
    };
    Ok(y)
}

/// One weighted diversity term of a greedy objective.
struct Term<'a> {
    model: &'a DiversityModel,
    weight: f64,
    state: GroupState,
}

impl Term<'_> {
    fn exact(&self, graph: &FactorGraph, y: &[usize]) -> f64 {
        self.weight
            * self.model.lambda
            * (self.model.exact_gain(graph, &self.state, y) + self.model.parsimony(graph, y))
    }
}

/// Greedy list building: each step maximizes `r(y) + lambda * (d(y | S) + p(y))`.
pub fn greedy_diverse(
    graph: &FactorGraph,
    model: &DiversityModel,
    m: usize,
    options: &GreedyOptions,
) -> Result<(SolutionList, GreedyTrace)> {
    model.validate(graph)?;
    let config = json!({ "model": model, "M": m, "backend": options.backend });
    run(graph, &[(model, 1.0)], m, options, true, config)
}

/// ⊕: each step maximizes `r(y) + sum_j w_j * lambda_j * (d_j(y | S) + p_j(y))`.
///
/// The stored gain of each pick is the whole weighted sum, with list
/// `lambda = 1`.
pub fn combine_linear(
    graph: &FactorGraph,
    models: &[(DiversityModel, f64)],
    m: usize,
    options: &GreedyOptions,
) -> Result<(SolutionList, GreedyTrace)> {
    for (model, w) in models {
        model.validate(graph)?;
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidConfig(format!("weight must be finite and >= 0, got {w}")));
        }
    }
    let config = json!({
        "combine": "linear",
        "models": models.iter().map(|(mo, w)| json!({"model": mo, "weight": w})).collect::<Vec<_>>(),
        "M": m,
        "backend": options.backend,
    });
    let terms: Vec<(&DiversityModel, f64)> = models.iter().map(|(mo, w)| (mo, *w)).collect();
    run(graph, &terms, m, options, false, config)
}

fn run(
    graph: &FactorGraph,
    models: &[(&DiversityModel, f64)],
    m: usize,
    options: &GreedyOptions,
    single: bool,
    config: serde_json::Value,
) -> Result<(SolutionList, GreedyTrace)> {
    if m == 0 {
        return Err(Error::InvalidConfig("M must be at least 1".into()));
    }
    let mut terms: Vec<Term> = models
        .iter()
        .map(|&(model, weight)| Term {
            model,
            weight,
            state: model.empty_state(graph),
        })
        .collect();
    let lambda = if single { models[0].0.lambda } else { 1.0 };
    let mut list = SolutionList::new(lambda, config);
    let mut trace = GreedyTrace {
        alpha: 1.0,
        steps: Vec::new(),
    };
    let traceable = graph.state_count().is_some_and(|c| c <= options.trace_limit);
    for t in 1..=m {
        let step = || -> Result<(Labeling, Backend)> {
            let mut aug = HopAugmentation::none();
            for term in &terms {
                let mut part = term.model.compile(graph, &term.state)?;
                part.scale(term.weight);
                aug.extend(part);
            }
            if let Some(Fault::WorstPickNoSlack) = options.fault {
                let (y, _) = map_exact_by(graph, options.enum_cap, |y| {
                    -2.0 * graph.score_unchecked(y) - aug.evaluate_slice(y)
                })?;
                return Ok((y, Backend::Exact));
            }
            let backend = match options.backend {
                Backend::Auto => auto_backend(graph, &aug, options, single)?,
                b => b,
            };
            let starts = list.labels();
            Ok((solve_augmented(graph, &aug, backend, options, &starts)?, backend))
        };
        let (y, backend) = step().map_err(|e| e.at_step(t))?;

        let relevance = graph.score_unchecked(&y.0);
        let achieved = relevance + terms.iter().map(|term| term.exact(graph, &y.0)).sum::<f64>();
        let (best, epsilon) = if traceable {
            let (_, best) = map_exact_by(graph, options.enum_cap, |a| {
                terms.iter().map(|term| term.exact(graph, a)).sum()
            })
            .map_err(|e| e.at_step(t))?;
            let eps = match options.fault {
                Some(Fault::WorstPickNoSlack) => 0.0,
                None => (best - achieved).max(0.0),
            };
            (Some(best), Some(eps))
        } else {
            (None, None)
        };
        trace.steps.push(TraceStep {
            step: t,
            backend,
            achieved,
            best,
            epsilon,
        });

        if single {
            let model = terms[0].model;
            let gain = model.gain(graph, &terms[0].state, &y.0);
            list.push(y.clone(), relevance, gain, model.parsimony(graph, &y.0));
        } else {
            let gain: f64 = terms
                .iter()
                .map(|term| term.weight * term.model.weighted_gain(graph, &term.state, &y.0))
                .sum();
            list.push(y.clone(), relevance, gain, 0.0);
        }
        for term in &mut terms {
            term.model.observe(graph, &mut term.state, &y);
        }
    }
    Ok((list, trace))
}
