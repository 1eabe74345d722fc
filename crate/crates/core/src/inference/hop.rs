//! High-order potentials added on top of a factor graph's score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_graph::{hamming, Labeling};

/// A factor whose value depends only on the Hamming distance to a reference.
///
/// Scores `weight * value_table[ham(reference, y)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityFactor {
    pub reference: Labeling,
    pub value_table: Vec<f64>,
    pub weight: f64,
}

impl CardinalityFactor {
    pub fn new(reference: Labeling, value_table: Vec<f64>, weight: f64) -> Result<Self> {
        let f = CardinalityFactor {
            reference,
            value_table,
            weight,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.value_table.len() != self.reference.len() + 1 {
            return Err(Error::InvalidFactor(format!(
                "value table has {} entries, expected {}",
                self.value_table.len(),
                self.reference.len() + 1
            )));
        }
        if self.value_table.iter().any(|x| !x.is_finite()) || !self.weight.is_finite() {
            return Err(Error::InvalidFactor("non-finite value".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, y: &[usize]) -> f64 {
        self.weight * self.value_table[hamming(&self.reference.0, y)]
    }
}

/// One additive high-order term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HopTerm {
    /// `rewards[l]` is earned once if any variable takes label `l`.
    LabelReward { rewards: Vec<f64> },
    /// `rewards[a][b]` (`a < b`) is earned once if some edge joins labels `a` and `b`.
    TransitionReward {
        edges: Vec<(usize, usize)>,
        rewards: Vec<Vec<f64>>,
    },
    Cardinality { factors: Vec<CardinalityFactor> },
    /// Per-variable, per-label additive scores (n x L).
    NodeAdditive { table: Vec<Vec<f64>> },
    /// `rewards[r][l]` is earned if every variable of region `r` takes label `l`.
    RegionReward {
        regions: Vec<Vec<usize>>,
        rewards: Vec<Vec<f64>>,
    },
}

impl HopTerm {
    pub fn evaluate(&self, y: &[usize]) -> f64 {
        match self {
            HopTerm::LabelReward { rewards } => {
                let mut present = vec![false; rewards.len()];
                for &l in y {
                    present[l] = true;
                }
                present
                    .iter()
                    .zip(rewards)
                    .filter(|(p, _)| **p)
                    .map(|(_, r)| r)
                    .sum()
            }
            HopTerm::TransitionReward { edges, rewards } => {
                let l = rewards.len();
                let mut seen = vec![false; l * l];
                let mut total = 0.0;
                for &(u, v) in edges {
                    let (a, b) = (y[u].min(y[v]), y[u].max(y[v]));
                    if a != b && !seen[a * l + b] {
                        seen[a * l + b] = true;
                        total += rewards[a][b];
                    }
                }
                total
            }
            HopTerm::Cardinality { factors } => factors.iter().map(|f| f.value(y)).sum(),
            HopTerm::NodeAdditive { table } => {
                table.iter().zip(y).map(|(row, &l)| row[l]).sum()
            }
            HopTerm::RegionReward { regions, rewards } => regions
                .iter()
                .zip(rewards)
                .map(|(region, row)| match uniform_label(region, y) {
                    Some(l) => row[l],
                    None => 0.0,
                })
                .sum(),
        }
    }

    fn validate(&self, n: usize, num_labels: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFactor(m));
        match self {
            HopTerm::LabelReward { rewards } if rewards.len() != num_labels => {
                bad(format!("label reward needs {num_labels} entries"))
            }
            HopTerm::TransitionReward { edges, rewards } => {
                if rewards.len() != num_labels || rewards.iter().any(|r| r.len() != num_labels) {
                    return bad(format!("transition reward must be {num_labels}x{num_labels}"));
                }
                if edges.iter().any(|&(u, v)| u >= n || v >= n) {
                    return bad("transition edge out of range".into());
                }
                Ok(())
            }
            HopTerm::Cardinality { factors } => {
                for f in factors {
                    f.validate()?;
                    if f.reference.len() != n {
                        return bad("cardinality reference length mismatch".into());
                    }
                }
                Ok(())
            }
            HopTerm::NodeAdditive { table }
                if table.len() != n || table.iter().any(|r| r.len() != num_labels) =>
            {
                bad(format!("node additive table must be {n}x{num_labels}"))
            }
            HopTerm::RegionReward { regions, rewards } => {
                if regions.len() != rewards.len()
                    || rewards.iter().any(|r| r.len() != num_labels)
                    || regions.iter().flatten().any(|&i| i >= n)
                {
                    return bad("malformed region reward".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// The label shared by every variable of `region`, if any.
pub fn uniform_label(region: &[usize], y: &[usize]) -> Option<usize> {
    let first = y[*region.first()?];
    region.iter().all(|&i| y[i] == first).then_some(first)
}

/// A sum of high-order terms plus a constant, added to the relevance score.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HopAugmentation {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<HopTerm>,
}

impl HopAugmentation {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        HopAugmentation {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn from_term(term: HopTerm) -> Self {
        HopAugmentation {
            constant: 0.0,
            terms: vec![term],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, y: &Labeling) -> f64 {
        self.evaluate_slice(&y.0)
    }

    pub fn evaluate_slice(&self, y: &[usize]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.evaluate(y)).sum::<f64>()
    }

    pub fn validate(&self, n: usize, num_labels: usize) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.validate(n, num_labels))
    }

    /// Merges another augmentation into this one.
    pub fn extend(&mut self, other: HopAugmentation) {
        self.constant += other.constant;
        self.terms.extend(other.terms);
    }

    /// Multiplies every term by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.constant *= factor;
        for t in &mut self.terms {
            match t {
                HopTerm::LabelReward { rewards } => rewards.iter_mut().for_each(|x| *x *= factor),
                HopTerm::TransitionReward { rewards, .. } | HopTerm::RegionReward { rewards, .. } => {
                    rewards.iter_mut().flatten().for_each(|x| *x *= factor)
                }
                HopTerm::Cardinality { factors } => factors.iter_mut().for_each(|f| f.weight *= factor),
                HopTerm::NodeAdditive { table } => table.iter_mut().flatten().for_each(|x| *x *= factor),
            }
        }
    }

    /// Sum of all node-additive tables, if every term is node-additive.
    pub fn as_node_additive(&self, n: usize, num_labels: usize) -> Option<Vec<Vec<f64>>> {
        let mut out = vec![vec![0.0; num_labels]; n];
        for t in &self.terms {
            let HopTerm::NodeAdditive { table } = t else {
                return None;
            };
            for (o, r) in out.iter_mut().zip(table) {
                for (a, b) in o.iter_mut().zip(r) {
                    *a += b;
                }
            }
        }
        Some(out)
    }

    /// Splits into (node-additive sum, label rewards sum, everything else).
    pub(crate) fn split(
        &self,
        n: usize,
        num_labels: usize,
    ) -> (Vec<Vec<f64>>, Vec<f64>, Vec<CardinalityFactor>, Vec<HopTerm>) {
        let mut node = vec![vec![0.0; num_labels]; n];
        let mut labels = vec![0.0; num_labels];
        let mut cards = Vec::new();
        let mut rest = Vec::new();
        for t in &self.terms {
            match t {
                HopTerm::NodeAdditive { table } => {
                    for (o, r) in node.iter_mut().zip(table) {
                        for (a, b) in o.iter_mut().zip(r) {
                            *a += b;
                        }
                    }
                }
                HopTerm::LabelReward { rewards } => {
                    for (a, b) in labels.iter_mut().zip(rewards) {
                        *a += b;
                    }
                }
                HopTerm::Cardinality { factors } => cards.extend(factors.iter().cloned()),
                other => rest.push(other.clone()),
            }
        }
        (node, labels, cards, rest)
    }
}
