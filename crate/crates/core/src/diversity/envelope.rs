//! Region consistency as a pairwise problem with switch variables.
//!
//! Each region gets one auxiliary variable over `L + 1` states: a label `q`
//! or an off state. State `q` earns the region's reward for `q` and is
//! coupled to every region variable by a large penalty unless that variable
//! also takes `q`. Base variables get the extra state too, with a penalty
//! that rules it out.

use crate::error::Result;
use crate::factor_graph::{FactorGraph, Labeling, PairwiseFactor};
use crate::inference::{local_search, map_exact_by};

use super::coverage::ConcaveH;
use super::families::check_regions;

#[derive(Debug, Clone, PartialEq)]
pub struct UpperEnvelope {
    /// Base variables first, then one switch per region; `L + 1` labels.
    pub graph: FactorGraph,
    pub num_base: usize,
    pub penalty: f64,
}

impl UpperEnvelope {
    pub fn off_state(&self) -> usize {
        self.graph.num_labels - 1
    }

    pub fn base_labeling(&self, extended: &Labeling) -> Labeling {
        Labeling(extended.0[..self.num_base].to_vec())
    }

    /// Extends a base labeling with the best switch states.
    pub fn extend(&self, y: &Labeling) -> Labeling {
        let mut out = y.0.clone();
        for r in 0..self.graph.num_vars - self.num_base {
            let aux = self.num_base + r;
            let mut best = (self.off_state(), 0.0);
            for q in 0..self.off_state() {
                out.push(q);
                let s = self.switch_score(&out, aux);
                out.pop();
                if s > best.1 {
                    best = (q, s);
                }
            }
            out.push(best.0);
        }
        Labeling(out)
    }

    fn switch_score(&self, z: &[usize], aux: usize) -> f64 {
        let q = z[aux];
        let mut s = self.graph.unaries[aux][q];
        for f in self.graph.pairwise.iter().filter(|f| f.v == aux) {
            s += f.score(z[f.u], q);
        }
        s
    }

    /// Exhaustive maximization; returns the base labeling and its objective.
    pub fn solve_exact(&self, cap: u128) -> Result<(Labeling, f64)> {
        let (z, s) = map_exact_by(&self.graph, cap, |_| 0.0)?;
        Ok((self.base_labeling(&z), s))
    }

    /// Single-flip local search started from `init` (a base labeling).
    pub fn solve_local(&self, init: &Labeling, max_sweeps: usize) -> Result<(Labeling, f64)> {
        let start = self.extend(init);
        let (z, s) = local_search(&self.graph, |_| 0.0, &start, max_sweeps)?;
        Ok((self.base_labeling(&z), s))
    }
}

/// Builds the switch reduction of `score(y) + lambda * region gain`.
///
/// `covered` holds the `(region, label)` counts, indexed `r * L + l`.
pub fn compile_upper_envelope(
    graph: &FactorGraph,
    regions: &[Vec<usize>],
    covered: &[usize],
    h: ConcaveH,
    lambda: f64,
) -> Result<UpperEnvelope> {
    check_regions(regions, graph.num_vars)?;
    let l = graph.num_labels;
    let off = l;
    let n = graph.num_vars;
    let mu = |r: usize, q: usize| lambda * h.marginal(covered[r * l + q]);
    let reward_bound: f64 = (0..regions.len())
        .map(|r| (0..l).map(|q| mu(r, q)).fold(0.0, f64::max))
        .sum();
    let penalty = 1.0 + graph.score_range() + reward_bound;

    let mut unaries: Vec<Vec<f64>> = graph
        .unaries
        .iter()
        .map(|row| {
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let mut row = row.clone();
            row.push(lo - penalty);
            row
        })
        .collect();
    let mut pairwise: Vec<PairwiseFactor> = graph
        .pairwise
        .iter()
        .map(|f| {
            let dense = f.dense(l);
            let lo = dense.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let scores = (0..=l)
                .map(|a| (0..=l).map(|b| if a < l && b < l { dense[a][b] } else { lo }).collect())
                .collect();
            PairwiseFactor::table(f.u, f.v, scores)
        })
        .collect();
    for (r, region) in regions.iter().enumerate() {
        let aux = n + r;
        unaries.push((0..=l).map(|q| if q == off { 0.0 } else { mu(r, q) }).collect());
        for &i in region {
            let scores = (0..=l)
                .map(|a| {
                    (0..=l)
                        .map(|q| if q == off || a == q { 0.0 } else { -penalty })
                        .collect()
                })
                .collect();
            pairwise.push(PairwiseFactor::table(i, aux, scores));
        }
    }
    let extended = FactorGraph::new(l + 1, unaries, pairwise)?;
    Ok(UpperEnvelope {
        graph: extended,
        num_base: n,
        penalty,
    })
}
