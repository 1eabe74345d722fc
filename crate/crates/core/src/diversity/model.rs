use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_graph::{hamming, FactorGraph, Labeling};
use crate::inference::HopAugmentation;

use super::coverage::{coverage_gain, coverage_value, ConcaveH};
use super::families::*;
use super::hamming::{hamming_ball_size_f64, hamming_exact_gain, hamming_union_size};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LabelCost,
    LabelTransition,
    HammingBallSet,
    HammingBallSmooth,
    Divmbest,
    RegionConsistency,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::LabelCost,
        Family::LabelTransition,
        Family::HammingBallSet,
        Family::HammingBallSmooth,
        Family::Divmbest,
        Family::RegionConsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::LabelCost => "label_cost",
            Family::LabelTransition => "label_transition",
            Family::HammingBallSet => "hamming_ball_set",
            Family::HammingBallSmooth => "hamming_ball_smooth",
            Family::Divmbest => "divmbest",
            Family::RegionConsistency => "region_consistency",
        }
    }

    /// Families whose diversity is a concave coverage of explicit groups.
    pub fn is_coverage(self) -> bool {
        !matches!(self, Family::HammingBallSmooth | Family::Divmbest)
    }

    /// The optimized gain equals the exact coverage increment.
    pub fn gain_is_exact(self) -> bool {
        matches!(
            self,
            Family::LabelCost | Family::LabelTransition | Family::RegionConsistency
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown diversity family '{s}'"))
    }
}

/// Per-label or per-pair parsimony costs: one shared value or a full table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Costs {
    Uniform(f64),
    PerLabel(Vec<f64>),
    PerPair(Vec<Vec<f64>>),
}

impl Costs {
    fn label_costs(&self, num_labels: usize) -> Result<Vec<f64>> {
        match self {
            Costs::Uniform(c) => Ok(vec![*c; num_labels]),
            Costs::PerLabel(v) if v.len() == num_labels => Ok(v.clone()),
            _ => Err(Error::InvalidConfig(format!(
                "label parsimony needs a number or {num_labels} entries"
            ))),
        }
    }

    fn pair_costs(&self, num_labels: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Costs::Uniform(c) => Ok(vec![vec![*c; num_labels]; num_labels]),
            Costs::PerPair(t) if t.len() == num_labels && t.iter().all(|r| r.len() == num_labels) => {
                Ok(t.clone())
            }
            _ => Err(Error::InvalidConfig(format!(
                "transition parsimony needs a number or a {num_labels}x{num_labels} table"
            ))),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Costs::Uniform(c) => c.is_finite(),
            Costs::PerLabel(v) => v.iter().all(|c| c.is_finite()),
            Costs::PerPair(t) => t.iter().flatten().all(|c| c.is_finite()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parsimony {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Costs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Costs>,
}

/// A diversity family with its parameters.
///
/// Only the fields used by `family` are set; see [`DiversityModel::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct DiversityModel {
    pub family: Family,
    pub h: ConcaveH,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "k", skip_serializing_if = "Option::is_none")]
    pub radius_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parsimony: Option<Parsimony>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_constant_b: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    family: Family,
    h: Option<ConcaveH>,
    lambda: Option<f64>,
    gamma: Option<f64>,
    k: Option<usize>,
    parsimony: Option<Parsimony>,
    regions: Option<Vec<Vec<usize>>>,
    ball_constant_b: Option<f64>,
}

pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_PARSIMONY: f64 = -1.0;

impl TryFrom<RawConfig> for DiversityModel {
    type Error = String;

    fn try_from(raw: RawConfig) -> std::result::Result<Self, String> {
        let mut m = DiversityModel::new(raw.family);
        if let Some(h) = raw.h {
            m.h = h;
        }
        if let Some(lambda) = raw.lambda {
            m.lambda = lambda;
        }
        let misplaced = |field: &str| Err(format!("'{field}' does not apply to {}", raw.family));
        match (raw.gamma, raw.family) {
            (Some(g), Family::HammingBallSmooth) => m.gamma = Some(g),
            (Some(_), _) => return misplaced("gamma"),
            _ => {}
        }
        match (raw.k, raw.family) {
            (Some(k), Family::HammingBallSet) => m.radius_k = Some(k),
            (Some(_), _) => return misplaced("k"),
            _ => {}
        }
        match (raw.ball_constant_b, raw.family) {
            (Some(b), Family::HammingBallSet) => m.ball_constant_b = Some(b),
            (Some(_), _) => return misplaced("ball_constant_b"),
            _ => {}
        }
        match (raw.regions, raw.family) {
            (Some(r), Family::RegionConsistency) => m.regions = Some(r),
            (Some(_), _) => return misplaced("regions"),
            (None, Family::RegionConsistency) => return Err("region_consistency needs 'regions'".into()),
            _ => {}
        }
        if let Some(p) = raw.parsimony {
            match raw.family {
                Family::LabelCost if p.transition.is_none() => {
                    m.parsimony = Some(Parsimony {
                        label: Some(p.label.unwrap_or(Costs::Uniform(DEFAULT_PARSIMONY))),
                        transition: None,
                    })
                }
                Family::LabelTransition if p.label.is_none() => {
                    m.parsimony = Some(Parsimony {
                        label: None,
                        transition: Some(p.transition.unwrap_or(Costs::Uniform(DEFAULT_PARSIMONY))),
                    })
                }
                _ => return misplaced("parsimony"),
            }
        }
        m.check_parameters().map_err(|e| e.to_string())?;
        Ok(m)
    }
}

/// Coverage counters plus the list they were built from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupState {
    /// Family-specific counts: per label, per label pair `a * L + b`, or per
    /// `(region, label)`; empty for the Hamming and DivMBest families.
    pub counts: Vec<usize>,
    pub items: Vec<Labeling>,
}

impl GroupState {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl DiversityModel {
    /// A model with default parameters for `family` and `lambda = 1`.
    pub fn new(family: Family) -> Self {
        let mut m = DiversityModel {
            family,
            h: ConcaveH::Count,
            lambda: 1.0,
            gamma: None,
            radius_k: None,
            parsimony: None,
            regions: None,
            ball_constant_b: None,
        };
        match family {
            Family::LabelCost => {
                m.parsimony = Some(Parsimony {
                    label: Some(Costs::Uniform(DEFAULT_PARSIMONY)),
                    transition: None,
                })
            }
            Family::LabelTransition => {
                m.parsimony = Some(Parsimony {
                    label: None,
                    transition: Some(Costs::Uniform(DEFAULT_PARSIMONY)),
                })
            }
            Family::HammingBallSet => m.radius_k = Some(1),
            Family::HammingBallSmooth => m.gamma = Some(DEFAULT_GAMMA),
            Family::RegionConsistency => m.regions = Some(Vec::new()),
            Family::Divmbest => {}
        }
        m
    }

    pub fn label_cost(h: ConcaveH, lambda: f64) -> Self {
        DiversityModel::new(Family::LabelCost).with_h(h).with_lambda(lambda)
    }

    pub fn label_transition(h: ConcaveH, lambda: f64) -> Self {
        DiversityModel::new(Family::LabelTransition).with_h(h).with_lambda(lambda)
    }

    pub fn hamming_set(k: usize, lambda: f64) -> Self {
        let mut m = DiversityModel::new(Family::HammingBallSet).with_lambda(lambda);
        m.radius_k = Some(k);
        m
    }

    pub fn hamming_smooth(gamma: f64, lambda: f64) -> Self {
        let mut m = DiversityModel::new(Family::HammingBallSmooth).with_lambda(lambda);
        m.gamma = Some(gamma);
        m
    }

    pub fn divmbest(lambda: f64) -> Self {
        DiversityModel::new(Family::Divmbest).with_lambda(lambda)
    }

    pub fn region_consistency(regions: Vec<Vec<usize>>, h: ConcaveH, lambda: f64) -> Self {
        let mut m = DiversityModel::new(Family::RegionConsistency).with_h(h).with_lambda(lambda);
        m.regions = Some(regions);
        m
    }

    pub fn with_h(mut self, h: ConcaveH) -> Self {
        self.h = h;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Replaces the family's parsimony costs (label or transition).
    pub fn with_costs(mut self, costs: Costs) -> Self {
        match self.family {
            Family::LabelCost => {
                self.parsimony = Some(Parsimony {
                    label: Some(costs),
                    transition: None,
                })
            }
            Family::LabelTransition => {
                self.parsimony = Some(Parsimony {
                    label: None,
                    transition: Some(costs),
                })
            }
            _ => {}
        }
        self
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn check_parameters(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidConfig(format!("gamma must be positive, got {g}")));
            }
        }
        if let Some(b) = self.ball_constant_b {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::InvalidConfig(format!("ball constant must be >= 0, got {b}")));
            }
        }
        let p = self.parsimony.as_ref();
        if p.and_then(|p| p.label.as_ref()).is_some_and(|c| !c.is_finite())
            || p.and_then(|p| p.transition.as_ref()).is_some_and(|c| !c.is_finite())
        {
            return Err(Error::InvalidConfig("parsimony costs must be finite".into()));
        }
        Ok(())
    }

    /// Checks parameters and their compatibility with `graph`.
    pub fn validate(&self, graph: &FactorGraph) -> Result<()> {
        self.check_parameters()?;
        match self.family {
            Family::LabelCost => {
                self.label_costs(graph.num_labels)?;
            }
            Family::LabelTransition => {
                self.pair_costs(graph.num_labels)?;
            }
            Family::HammingBallSet => {
                let k = self.radius_k.unwrap_or(1);
                if k > graph.num_vars {
                    return Err(Error::InvalidConfig(format!(
                        "radius {k} exceeds {} variables",
                        graph.num_vars
                    )));
                }
            }
            Family::RegionConsistency => check_regions(self.regions(), graph.num_vars)?,
            _ => {}
        }
        Ok(())
    }

    fn regions(&self) -> &[Vec<usize>] {
        self.regions.as_deref().unwrap_or(&[])
    }

    fn label_costs(&self, num_labels: usize) -> Result<Vec<f64>> {
        match self.parsimony.as_ref().and_then(|p| p.label.as_ref()) {
            Some(c) => c.label_costs(num_labels),
            None => Ok(vec![0.0; num_labels]),
        }
    }

    fn pair_costs(&self, num_labels: usize) -> Result<Vec<Vec<f64>>> {
        match self.parsimony.as_ref().and_then(|p| p.transition.as_ref()) {
            Some(c) => c.pair_costs(num_labels),
            None => Ok(vec![vec![0.0; num_labels]; num_labels]),
        }
    }

    pub fn hamming_mode(&self, graph: &FactorGraph) -> Option<HammingMode> {
        match self.family {
            Family::HammingBallSet => {
                let k = self.radius_k.unwrap_or(1);
                let b = self
                    .ball_constant_b
                    .unwrap_or_else(|| hamming_ball_size_f64(graph.num_vars, graph.num_labels, k));
                Some(HammingMode::Set { k, b })
            }
            Family::HammingBallSmooth => Some(HammingMode::Smooth {
                gamma: self.gamma.unwrap_or(DEFAULT_GAMMA),
            }),
            _ => None,
        }
    }

    fn num_counters(&self, graph: &FactorGraph) -> usize {
        let l = graph.num_labels;
        match self.family {
            Family::LabelCost => l,
            Family::LabelTransition => l * l,
            Family::RegionConsistency => self.regions().len() * l,
            _ => 0,
        }
    }

    /// Counter ids `y` increments (empty for non-counter families).
    pub fn member_groups(&self, graph: &FactorGraph, y: &[usize]) -> Vec<usize> {
        let l = graph.num_labels;
        match self.family {
            Family::LabelCost => labels_present(y, l),
            Family::LabelTransition => realized_transitions(y, &graph.edges(), l),
            Family::RegionConsistency => covered_regions(y, self.regions(), l),
            _ => Vec::new(),
        }
    }

    pub fn empty_state(&self, graph: &FactorGraph) -> GroupState {
        GroupState {
            counts: vec![0; self.num_counters(graph)],
            items: Vec::new(),
        }
    }

    pub fn observe(&self, graph: &FactorGraph, state: &mut GroupState, y: &Labeling) {
        for g in self.member_groups(graph, &y.0) {
            state.counts[g] += 1;
        }
        state.items.push(y.clone());
    }

    /// State built from scratch from a list.
    pub fn state_from(&self, graph: &FactorGraph, items: &[Labeling]) -> GroupState {
        let mut s = self.empty_state(graph);
        items.iter().for_each(|y| self.observe(graph, &mut s, y));
        s
    }

    /// The optimized diversity gain `d(y | S)` (unweighted, no parsimony).
    pub fn gain(&self, graph: &FactorGraph, state: &GroupState, y: &[usize]) -> f64 {
        match self.family {
            Family::LabelCost | Family::LabelTransition | Family::RegionConsistency => {
                coverage_gain(&self.member_groups(graph, y), &state.counts, self.h)
            }
            Family::HammingBallSet | Family::HammingBallSmooth => {
                let mode = self.hamming_mode(graph).expect("hamming family");
                hamming_lb_gain(y, &state.items, graph.num_labels, mode)
            }
            Family::Divmbest => divmbest_gain(y, &state.items),
        }
    }

    /// Modular parsimony `p(y)` (unweighted).
    pub fn parsimony(&self, graph: &FactorGraph, y: &[usize]) -> f64 {
        let l = graph.num_labels;
        match self.family {
            Family::LabelCost => {
                let c = self.label_costs(l).unwrap_or_else(|_| vec![0.0; l]);
                labels_present(y, l).into_iter().map(|a| c[a]).sum()
            }
            Family::LabelTransition => {
                let c = self.pair_costs(l).unwrap_or_else(|_| vec![vec![0.0; l]; l]);
                realized_transitions(y, &graph.edges(), l)
                    .into_iter()
                    .map(|id| c[id / l][id % l])
                    .sum()
            }
            _ => 0.0,
        }
    }

    /// `lambda * (gain + parsimony)` at `y`.
    pub fn weighted_gain(&self, graph: &FactorGraph, state: &GroupState, y: &[usize]) -> f64 {
        self.lambda * (self.gain(graph, state, y) + self.parsimony(graph, y))
    }

    /// Compiles `lambda * (gain + parsimony)` into high-order potentials.
    pub fn compile(&self, graph: &FactorGraph, state: &GroupState) -> Result<HopAugmentation> {
        let l = graph.num_labels;
        let lambda = self.lambda;
        Ok(match self.family {
            Family::LabelCost => compile_label_cost(&state.counts, self.h, lambda, &self.label_costs(l)?),
            Family::LabelTransition => compile_transition(
                &graph.edges(),
                &state.counts,
                l,
                self.h,
                lambda,
                &self.pair_costs(l)?,
            ),
            Family::HammingBallSet | Family::HammingBallSmooth => {
                let mode = self.hamming_mode(graph).expect("hamming family");
                if state.items.is_empty() {
                    HopAugmentation::constant(lambda * mode.ball_constant(0))
                } else {
                    compile_hamming_factors(&state.items, l, mode, lambda)?
                }
            }
            Family::Divmbest => divmbest_augment(graph.num_vars, l, &state.items, lambda),
            Family::RegionConsistency => {
                compile_region_rewards(self.regions(), &state.counts, l, self.h, lambda)
            }
        })
    }

    /// `D(S)` of the optimized objective, from the state's counters or list.
    pub fn value(&self, graph: &FactorGraph, state: &GroupState) -> f64 {
        let items = &state.items;
        let pairs = || (0..items.len()).flat_map(|j| (0..j).map(move |i| (i, j)));
        match self.family {
            Family::LabelCost | Family::LabelTransition | Family::RegionConsistency => {
                coverage_value(&state.counts, self.h)
            }
            Family::HammingBallSet | Family::HammingBallSmooth => {
                let mode = self.hamming_mode(graph).expect("hamming family");
                let n = graph.num_vars;
                let overlap: f64 = pairs()
                    .map(|(i, j)| mode.overlap(n, graph.num_labels, items[i].hamming(&items[j])))
                    .sum();
                match mode {
                    HammingMode::Set { b, .. } => items.len() as f64 * b - overlap,
                    HammingMode::Smooth { .. } => pairs().count() as f64 - overlap,
                }
            }
            Family::Divmbest => pairs().map(|(i, j)| items[i].hamming(&items[j]) as f64).sum(),
        }
    }

    /// Exact coverage gain: the union increment for set-mode Hamming balls
    /// (enumerates the ball around `y`), otherwise the optimized gain.
    pub fn exact_gain(&self, graph: &FactorGraph, state: &GroupState, y: &[usize]) -> f64 {
        match self.family {
            Family::HammingBallSet => {
                let k = self.radius_k.unwrap_or(1);
                let centers: Vec<&[usize]> = state.items.iter().map(|s| s.as_slice()).collect();
                hamming_exact_gain(y, &centers, graph.num_labels, k) as f64
            }
            _ => self.gain(graph, state, y),
        }
    }

    /// Exact `D(S)`: the union size for set-mode Hamming balls.
    pub fn exact_value(&self, graph: &FactorGraph, state: &GroupState) -> f64 {
        match self.family {
            Family::HammingBallSet => {
                let centers: Vec<&[usize]> = state.items.iter().map(|s| s.as_slice()).collect();
                hamming_union_size(&centers, graph.num_vars, graph.num_labels, self.radius_k.unwrap_or(1)) as f64
            }
            _ => self.value(graph, state),
        }
    }

    /// Groups covered by `y` in the exact objective, as ids. For set-mode
    /// Hamming balls these are the indices of the ball's points in `[L]^n`.
    /// `None` for the pairwise families.
    pub fn exact_groups(&self, graph: &FactorGraph, y: &[usize]) -> Option<Vec<usize>> {
        match self.family {
            Family::HammingBallSet => {
                let k = self.radius_k.unwrap_or(1);
                let l = graph.num_labels;
                let mut ids = Vec::new();
                crate::inference::for_each_labeling(graph.num_vars, l, |z| {
                    if hamming(z, y) <= k {
                        ids.push(z.iter().fold(0usize, |acc, &x| acc * l + x));
                    }
                });
                Some(ids)
            }
            Family::HammingBallSmooth | Family::Divmbest => None,
            _ => Some(self.member_groups(graph, y)),
        }
    }

    /// Pairwise diversity `D({a, b})` for the pairwise families.
    pub fn pair_value(&self, a: &[usize], b: &[usize]) -> Option<f64> {
        match self.family {
            Family::HammingBallSmooth => {
                Some(1.0 - (-self.gamma.unwrap_or(DEFAULT_GAMMA) * hamming(a, b) as f64).exp())
            }
            Family::Divmbest => Some(hamming(a, b) as f64),
            _ => None,
        }
    }

    /// True when `D` is monotone submodular over lists.
    pub fn is_submodular(&self) -> bool {
        self.family.is_coverage()
    }

}
