//! Pairwise factor graphs over labeled base variables.
//!
//! A [`FactorGraph`] holds unary and pairwise log-potential tables over `n`
//! variables sharing one label space `0..L`. Scores are maximized; backends
//! that minimize energies negate internally.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One joint assignment of every base variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn new(labels: Vec<usize>) -> Self {
        Labeling(labels)
    }

    pub fn constant(n: usize, label: usize) -> Self {
        Labeling(vec![label; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of positions where the two labelings disagree.
    pub fn hamming(&self, other: &Labeling) -> usize {
        hamming(&self.0, &other.0)
    }

    /// Decodes the `index`-th labeling of `[L]^n` in lexicographic order
    /// (variable 0 most significant).
    pub fn from_index(mut index: u128, n: usize, num_labels: usize) -> Self {
        let mut labels = vec![0; n];
        for slot in labels.iter_mut().rev() {
            *slot = (index % num_labels as u128) as usize;
            index /= num_labels as u128;
        }
        Labeling(labels)
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PairwiseForm {
    /// Reward `w >= 0` when both endpoints take the same label.
    Potts { w: f64 },
    /// Full `L x L` table indexed `[label of u][label of v]`.
    Table { scores: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseFactor {
    pub u: usize,
    pub v: usize,
    #[serde(flatten)]
    pub form: PairwiseForm,
}

impl PairwiseFactor {
    pub fn potts(u: usize, v: usize, w: f64) -> Self {
        PairwiseFactor {
            u,
            v,
            form: PairwiseForm::Potts { w },
        }
    }

    pub fn table(u: usize, v: usize, scores: Vec<Vec<f64>>) -> Self {
        PairwiseFactor {
            u,
            v,
            form: PairwiseForm::Table { scores },
        }
    }

    #[inline]
    pub fn score(&self, lu: usize, lv: usize) -> f64 {
        match &self.form {
            PairwiseForm::Potts { w } => {
                if lu == lv {
                    *w
                } else {
                    0.0
                }
            }
            PairwiseForm::Table { scores } => scores[lu][lv],
        }
    }

    /// Dense `L x L` score table.
    pub fn dense(&self, num_labels: usize) -> Vec<Vec<f64>> {
        (0..num_labels)
            .map(|a| (0..num_labels).map(|b| self.score(a, b)).collect())
            .collect()
    }

    fn min_score(&self, num_labels: usize) -> f64 {
        match &self.form {
            PairwiseForm::Potts { w } if num_labels > 1 => w.min(0.0),
            PairwiseForm::Potts { w } => *w,
            PairwiseForm::Table { scores } => scores
                .iter()
                .flatten()
                .copied()
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn max_score(&self) -> f64 {
        match &self.form {
            PairwiseForm::Potts { w } => w.max(0.0),
            PairwiseForm::Table { scores } => scores
                .iter()
                .flatten()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// A structural problem found by [`FactorGraph::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorGraph {
    pub num_vars: usize,
    pub num_labels: usize,
    pub unaries: Vec<Vec<f64>>,
    #[serde(default)]
    pub pairwise: Vec<PairwiseFactor>,
}

impl FactorGraph {
    /// Builds a graph and rejects it if any invariant is violated.
    pub fn new(
        num_labels: usize,
        unaries: Vec<Vec<f64>>,
        pairwise: Vec<PairwiseFactor>,
    ) -> Result<Self> {
        let graph = FactorGraph {
            num_vars: unaries.len(),
            num_labels,
            unaries,
            pairwise,
        };
        graph.checked()
    }

    pub fn zeros(num_vars: usize, num_labels: usize) -> Self {
        FactorGraph {
            num_vars,
            num_labels,
            unaries: vec![vec![0.0; num_labels]; num_vars],
            pairwise: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Returns `self` if [`validate`](Self::validate) finds nothing.
    pub fn checked(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidGraph(v))
        }
    }

    /// Checks every structural invariant and reports each violation.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |location: String, message: &str| {
            out.push(Violation {
                location,
                message: message.to_string(),
            })
        };
        if self.num_vars == 0 {
            bad("graph".into(), "num_vars must be positive");
        }
        if self.num_labels == 0 {
            bad("graph".into(), "num_labels must be positive");
        }
        if self.unaries.len() != self.num_vars {
            bad("unaries".into(), "row count differs from num_vars");
        }
        for (i, row) in self.unaries.iter().enumerate() {
            if row.len() != self.num_labels {
                bad(format!("unaries[{i}]"), "row length differs from num_labels");
            }
            if row.iter().any(|x| !x.is_finite()) {
                bad(format!("unaries[{i}]"), "non-finite score");
            }
        }
        let mut seen = HashSet::new();
        for (k, f) in self.pairwise.iter().enumerate() {
            let loc = format!("pairwise[{k}] ({}, {})", f.u, f.v);
            if f.u >= self.num_vars || f.v >= self.num_vars {
                bad(loc.clone(), "endpoint out of range");
            }
            if f.u == f.v {
                bad(loc.clone(), "endpoints must be distinct");
            }
            if !seen.insert((f.u.min(f.v), f.u.max(f.v))) {
                bad(loc.clone(), "duplicate pair");
            }
            match &f.form {
                PairwiseForm::Potts { w } => {
                    if !w.is_finite() {
                        bad(loc.clone(), "non-finite score");
                    } else if *w < 0.0 {
                        bad(loc.clone(), "potts weight must be nonnegative");
                    }
                }
                PairwiseForm::Table { scores } => {
                    if scores.len() != self.num_labels
                        || scores.iter().any(|r| r.len() != self.num_labels)
                    {
                        bad(loc.clone(), "table must be num_labels x num_labels");
                    }
                    if scores.iter().flatten().any(|x| !x.is_finite()) {
                        bad(loc.clone(), "non-finite score");
                    }
                }
            }
        }
        out
    }

    /// Errors unless `y` has one in-range label per variable.
    pub fn check_labeling(&self, y: &Labeling) -> Result<()> {
        if y.len() != self.num_vars {
            return Err(Error::InvalidLabeling(format!(
                "length {} but graph has {} variables",
                y.len(),
                self.num_vars
            )));
        }
        if let Some((i, l)) = y.0.iter().enumerate().find(|(_, &l)| l >= self.num_labels) {
            return Err(Error::InvalidLabeling(format!(
                "variable {i} has label {l}, only {} labels",
                self.num_labels
            )));
        }
        Ok(())
    }

    /// Relevance `r(y)`: the sum of every unary and pairwise score at `y`.
    pub fn evaluate_score(&self, y: &Labeling) -> Result<f64> {
        self.check_labeling(y)?;
        Ok(self.score_unchecked(&y.0))
    }

    #[inline]
    pub fn score_unchecked(&self, y: &[usize]) -> f64 {
        let mut s = 0.0;
        for (row, &l) in self.unaries.iter().zip(y) {
            s += row[l];
        }
        for f in &self.pairwise {
            s += f.score(y[f.u], y[f.v]);
        }
        s
    }

    /// Undirected edge list of the pairwise factors.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.pairwise.iter().map(|f| (f.u, f.v)).collect()
    }

    /// Neighbour lists: for each variable, `(factor index, other endpoint)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.num_vars];
        for (k, f) in self.pairwise.iter().enumerate() {
            adj[f.u].push((k, f.v));
            adj[f.v].push((k, f.u));
        }
        adj
    }

    /// `L^n`, or `None` if it does not fit in 128 bits.
    pub fn state_count(&self) -> Option<u128> {
        (self.num_labels as u128).checked_pow(self.num_vars as u32)
    }

    /// Upper minus lower bound of the score over all labelings.
    pub fn score_range(&self) -> f64 {
        let mut range = 0.0;
        for row in &self.unaries {
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            range += hi - lo;
        }
        for f in &self.pairwise {
            range += f.max_score() - f.min_score(self.num_labels);
        }
        range
    }

    pub fn is_potts(&self) -> bool {
        self.pairwise
            .iter()
            .all(|f| matches!(f.form, PairwiseForm::Potts { .. }))
    }

    /// Per-variable unary argmax (ties to the smallest label).
    pub fn unary_argmax(&self) -> Labeling {
        Labeling(self.unaries.iter().map(|row| argmax(row)).collect())
    }
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Adds a constant so that every labeling scores at least zero.
///
/// The constant is minus the sum of each factor's minimum entry and is folded
/// into the unary table of variable 0, so the argmax is unchanged. Returns the
/// shifted graph and the applied offset.
pub fn shift_nonnegative(graph: &FactorGraph) -> (FactorGraph, f64) {
    let mut total_min = 0.0;
    for row in &graph.unaries {
        total_min += row.iter().copied().fold(f64::INFINITY, f64::min);
    }
    for f in &graph.pairwise {
        total_min += f.min_score(graph.num_labels);
    }
    let offset = -total_min;
    let mut shifted = graph.clone();
    if offset != 0.0 {
        if let Some(row) = shifted.unaries.first_mut() {
            for x in row.iter_mut() {
                *x += offset;
            }
        }
    }
    (shifted, offset)
}
