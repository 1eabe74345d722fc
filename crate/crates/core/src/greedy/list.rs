use serde::{Deserialize, Serialize};

use crate::diversity::DiversityModel;
use crate::factor_graph::{FactorGraph, Labeling};

/// One greedy pick with its contribution to `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub labels: Labeling,
    pub relevance: f64,
    /// Diversity gain `d(y | S)` at the time of the pick.
    pub gain: f64,
    #[serde(default)]
    pub parsimony: f64,
    /// Cumulative objective after this pick.
    #[serde(rename = "F")]
    pub f: f64,
}

/// An ordered list of labelings, `F(S^t) = F(S^{t-1}) + r + lambda * (d + p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionList {
    pub solutions: Vec<Solution>,
    pub lambda: f64,
    #[serde(default)]
    pub config: serde_json::Value,
}

impl SolutionList {
    pub fn new(lambda: f64, config: serde_json::Value) -> Self {
        SolutionList {
            solutions: Vec::new(),
            lambda,
            config,
        }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn labels(&self) -> Vec<Labeling> {
        self.solutions.iter().map(|s| s.labels.clone()).collect()
    }

    pub fn value(&self) -> f64 {
        self.solutions.last().map_or(0.0, |s| s.f)
    }

    pub fn push(&mut self, labels: Labeling, relevance: f64, gain: f64, parsimony: f64) {
        let f = self.value() + relevance + self.lambda * (gain + parsimony);
        self.solutions.push(Solution {
            labels,
            relevance,
            gain,
            parsimony,
            f,
        });
    }

    /// The first `m` picks.
    pub fn prefix(&self, m: usize) -> SolutionList {
        SolutionList {
            solutions: self.solutions[..m.min(self.len())].to_vec(),
            lambda: self.lambda,
            config: self.config.clone(),
        }
    }

    /// Largest gap between the stored cumulative `F` and a from-scratch
    /// recomputation of `R(S) + lambda * (D(S) + P(S))` at every prefix.
    pub fn recompute_error(&self, graph: &FactorGraph, model: &DiversityModel) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 1..=self.len() {
            let items: Vec<Labeling> = self.solutions[..t].iter().map(|s| s.labels.clone()).collect();
            let f = list_objective(graph, model, &items);
            worst = worst.max((f - self.solutions[t - 1].f).abs());
        }
        worst
    }
}

/// `R(S) + lambda * (D(S) + P(S))` of the optimized objective.
pub fn list_objective(graph: &FactorGraph, model: &DiversityModel, items: &[Labeling]) -> f64 {
    let state = model.state_from(graph, items);
    let r: f64 = items.iter().map(|y| graph.score_unchecked(&y.0)).sum();
    let p: f64 = items.iter().map(|y| model.parsimony(graph, &y.0)).sum();
    r + model.lambda * (model.value(graph, &state) + p)
}

/// Same with the exact diversity (union of balls for set-mode Hamming).
pub fn exact_list_objective(graph: &FactorGraph, model: &DiversityModel, items: &[Labeling]) -> f64 {
    let state = model.state_from(graph, items);
    let r: f64 = items.iter().map(|y| graph.score_unchecked(&y.0)).sum();
    let p: f64 = items.iter().map(|y| model.parsimony(graph, &y.0)).sum();
    r + model.lambda * (model.exact_value(graph, &state) + p)
}
