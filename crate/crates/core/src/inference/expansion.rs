//! α-expansion for Potts graphs with per-label rewards.
//!
//! Each label `l` present in the labeling earns `label_reward[l]` once.
//! Inside an expansion move, a nonpositive reward (a label cost) is encoded
//! exactly with one auxiliary node. A positive reward makes the move energy
//! non-submodular; it is dropped to obtain a cut-solvable lower bound and the
//! move is then solved exactly by best-first branching on the violated terms.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::factor_graph::{FactorGraph, Labeling};

use super::binary::BinaryEnergy;

const IMPROVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    pub max_sweeps: usize,
    /// Cut evaluations allowed per move before returning the best move found.
    pub node_cap: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            max_sweeps: 100,
            node_cap: 4096,
        }
    }
}

struct Problem<'a> {
    graph: &'a FactorGraph,
    rewards: &'a [f64],
    additive: Option<&'a [Vec<f64>]>,
}

impl Problem<'_> {
    fn unary(&self, i: usize, l: usize) -> f64 {
        self.graph.unaries[i][l] + self.additive.map_or(0.0, |a| a[i][l])
    }

    fn score(&self, y: &[usize]) -> f64 {
        let mut present = vec![false; self.graph.num_labels];
        let mut s = 0.0;
        for (i, &l) in y.iter().enumerate() {
            present[l] = true;
            s += self.unary(i, l);
        }
        for f in &self.graph.pairwise {
            s += f.score(y[f.u], y[f.v]);
        }
        s + present
            .iter()
            .zip(self.rewards)
            .filter(|(p, _)| **p)
            .map(|(_, r)| r)
            .sum::<f64>()
    }
}

/// A positive reward whose presence the relaxation assumes.
#[derive(Debug, Clone)]
enum PositiveTerm {
    /// Label currently on `vars`; lost if every one of them switches.
    Vacate { vars: Vec<usize>, reward: f64 },
    /// Label α, absent now; earned only if some variable switches.
    Activate { vars: Vec<usize>, reward: f64 },
}

impl PositiveTerm {
    fn reward(&self) -> f64 {
        match self {
            PositiveTerm::Vacate { reward, .. } | PositiveTerm::Activate { reward, .. } => *reward,
        }
    }

    fn violated(&self, x: &[bool]) -> bool {
        match self {
            PositiveTerm::Vacate { vars, .. } => vars.iter().all(|&i| x[i]),
            PositiveTerm::Activate { vars, .. } => vars.iter().all(|&i| !x[i]),
        }
    }
}

struct Node {
    bound: f64,
    fixed: Vec<Option<bool>>,
    resolved: Vec<bool>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on bound
        other.bound.total_cmp(&self.bound)
    }
}

/// Best α-expansion move from `y`: returns the moved labeling and its score.
fn expansion_move(p: &Problem, y: &[usize], alpha: usize, node_cap: usize) -> (Vec<usize>, f64) {
    let g = p.graph;
    let n = g.num_vars;
    let mut base = BinaryEnergy::new(n);
    let mut present: Vec<Vec<usize>> = vec![Vec::new(); g.num_labels];
    for (i, &l) in y.iter().enumerate() {
        present[l].push(i);
        if l == alpha {
            let e = -p.unary(i, alpha);
            base.add_unary(i, e, e);
            base.fix(i, true);
        } else {
            base.add_unary(i, -p.unary(i, l), -p.unary(i, alpha));
        }
    }
    for f in &g.pairwise {
        let (a, b) = (y[f.u], y[f.v]);
        let s = |la, lb| -f.score(la, lb);
        base.add_pairwise(f.u, f.v, s(a, b), s(a, alpha), s(alpha, b), s(alpha, alpha))
            .expect("potts expansion moves are submodular");
    }
    let mut constant = 0.0;
    let mut positive = Vec::new();
    for (l, vars) in present.iter().enumerate() {
        let r = p.rewards[l];
        if l == alpha || vars.is_empty() {
            continue;
        }
        if r <= 0.0 {
            // cost -r unless every holder switches to alpha
            let z = base.add_node();
            base.add_unary(z, -r, 0.0);
            for &i in vars {
                base.add_not_and(i, z, 1.0 - r);
            }
        } else {
            constant -= r;
            positive.push(PositiveTerm::Vacate {
                vars: vars.clone(),
                reward: r,
            });
        }
    }
    let r_alpha = p.rewards[alpha];
    if !present[alpha].is_empty() {
        constant -= r_alpha;
    } else if r_alpha <= 0.0 {
        let z = base.add_node();
        base.add_unary(z, 0.0, -r_alpha);
        for i in 0..n {
            base.add_not_and(z, i, 1.0 - r_alpha);
        }
    } else {
        constant -= r_alpha;
        positive.push(PositiveTerm::Activate {
            vars: (0..n).collect(),
            reward: r_alpha,
        });
    }

    let apply = |x: &[bool]| -> Vec<usize> {
        y.iter()
            .enumerate()
            .map(|(i, &l)| if x[i] { alpha } else { l })
            .collect()
    };

    let mut best_labels = y.to_vec();
    let mut best_energy = -p.score(y);
    let solve = |fixed: &[Option<bool>]| {
        let mut e = base.clone();
        for (i, f) in fixed.iter().enumerate() {
            if let Some(v) = f {
                e.fix(i, *v);
            }
        }
        e.minimize()
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        fixed: vec![None; n],
        resolved: vec![false; positive.len()],
    });
    let mut evaluations = 0;
    while let Some(node) = heap.pop() {
        if node.bound >= best_energy - IMPROVE_TOL || evaluations >= node_cap {
            break;
        }
        evaluations += 1;
        let (x, e) = solve(&node.fixed);
        let paid: f64 = positive
            .iter()
            .zip(&node.resolved)
            .filter(|(_, r)| **r)
            .map(|(t, _)| t.reward())
            .sum();
        let bound = e + constant + paid;
        if bound >= best_energy - IMPROVE_TOL {
            continue;
        }
        let x = &x[..n];
        let labels = apply(x);
        let true_energy = -p.score(&labels);
        if true_energy < best_energy {
            best_energy = true_energy;
            best_labels = labels;
        }
        let Some(k) = positive
            .iter()
            .enumerate()
            .position(|(k, t)| !node.resolved[k] && t.violated(x))
        else {
            continue;
        };
        let (vars, all_value) = match &positive[k] {
            PositiveTerm::Vacate { vars, .. } => (vars, true),
            PositiveTerm::Activate { vars, .. } => (vars, false),
        };
        // branch: the term stays violated (all vars take `all_value`)
        let mut fixed = node.fixed.clone();
        if vars.iter().all(|&i| fixed[i] != Some(!all_value)) {
            vars.iter().for_each(|&i| fixed[i] = Some(all_value));
            let mut resolved = node.resolved.clone();
            resolved[k] = true;
            heap.push(Node {
                bound,
                fixed,
                resolved,
            });
        }
        // branches: first var (in order) breaking the violation
        let mut prefix = node.fixed.clone();
        for &i in vars {
            if prefix[i] == Some(all_value) {
                continue;
            }
            let mut fixed = prefix.clone();
            fixed[i] = Some(!all_value);
            heap.push(Node {
                bound,
                fixed,
                resolved: node.resolved.clone(),
            });
            prefix[i] = Some(all_value);
        }
    }
    let score = p.score(&best_labels);
    (best_labels, score)
}

/// Local optimum of `score + additive + label rewards` under α-expansion
/// moves, starting from the per-variable argmax of unary plus additive.
pub fn map_alpha_expansion(
    graph: &FactorGraph,
    label_reward: &[f64],
    node_additive: Option<&[Vec<f64>]>,
) -> Result<(Labeling, f64)> {
    map_alpha_expansion_from(graph, label_reward, node_additive, None, ExpansionOptions::default())
}

pub fn map_alpha_expansion_from(
    graph: &FactorGraph,
    label_reward: &[f64],
    node_additive: Option<&[Vec<f64>]>,
    init: Option<&Labeling>,
    options: ExpansionOptions,
) -> Result<(Labeling, f64)> {
    let p = check(graph, label_reward, node_additive)?;
    let mut y = match init {
        Some(y) => {
            graph.check_labeling(y)?;
            y.0.clone()
        }
        None => (0..graph.num_vars)
            .map(|i| {
                let row: Vec<f64> = (0..graph.num_labels).map(|l| p.unary(i, l)).collect();
                crate::factor_graph::argmax(&row)
            })
            .collect(),
    };
    let mut score = p.score(&y);
    for _ in 0..options.max_sweeps {
        let mut changed = false;
        for alpha in 0..graph.num_labels {
            let (cand, s) = expansion_move(&p, &y, alpha, options.node_cap);
            if s > score + IMPROVE_TOL {
                y = cand;
                score = s;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok((Labeling(y), score))
}

/// Best single α-expansion move from `y` (exposed for verification).
pub fn best_expansion_move(
    graph: &FactorGraph,
    label_reward: &[f64],
    node_additive: Option<&[Vec<f64>]>,
    y: &Labeling,
    alpha: usize,
) -> Result<(Labeling, f64)> {
    let p = check(graph, label_reward, node_additive)?;
    graph.check_labeling(y)?;
    let (labels, s) = expansion_move(&p, &y.0, alpha, usize::MAX);
    Ok((Labeling(labels), s))
}

fn check<'a>(
    graph: &'a FactorGraph,
    label_reward: &'a [f64],
    node_additive: Option<&'a [Vec<f64>]>,
) -> Result<Problem<'a>> {
    if !graph.is_potts() {
        return Err(Error::UnsupportedFactor(
            "alpha-expansion requires potts pairwise factors".into(),
        ));
    }
    if graph.num_labels < 2 {
        return Err(Error::WrongArity(graph.num_labels));
    }
    if label_reward.len() != graph.num_labels {
        return Err(Error::InvalidFactor(format!(
            "label reward needs {} entries",
            graph.num_labels
        )));
    }
    if let Some(add) = node_additive {
        if add.len() != graph.num_vars || add.iter().any(|r| r.len() != graph.num_labels) {
            return Err(Error::InvalidFactor("node additive table has wrong shape".into()));
        }
    }
    Ok(Problem {
        graph,
        rewards: label_reward,
        additive: node_additive,
    })
}
