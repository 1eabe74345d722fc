//! Executable checks of the approximation guarantees.
//!
//! * Lemma 1: uniformly random lists do poorly on a planted worst case.
//! * Lemma 2: greedy with per-step slack `eps_t` achieves
//!   `(1 - e^{-alpha}) F(S*) - sum_t eps_t`.
//! * Lemma 3: on a function shifted by its minimum, greedy's relative
//!   error is bounded by `1 - 1/e`.
//!
//! [`exhaustive_opt_set`] and [`exhaustive_opt_list`] provide the optima.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diversity::{ConcaveH, Costs, DiversityModel, Family};
use crate::error::{Error, Result};
use crate::factor_graph::{shift_nonnegative, FactorGraph, Labeling, PairwiseFactor};
use crate::greedy::{exact_list_objective, greedy_diverse, Backend, Fault, GreedyOptions, GreedyTrace};
use crate::inference::for_each_labeling;

const SLACK: f64 = 1e-9;

/// `F(S) = |S ∩ R| + epsilon * min(|S \ R|, 1)` over the ground set `0..n`,
/// with `R = {0, ..., m - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseInstance {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
}

impl WorstCaseInstance {
    pub fn new(n: usize, m: usize, epsilon: f64) -> Result<Self> {
        if m > n || n == 0 {
            return Err(Error::InvalidConfig(format!("need 1 <= N and M <= N, got N={n}, M={m}")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(WorstCaseInstance { n, m, epsilon })
    }

    pub fn in_planted(&self, e: usize) -> bool {
        e < self.m
    }

    /// `max_{|S| <= M} F(S)`.
    pub fn optimum(&self) -> f64 {
        let planted = self.m as f64;
        if self.m < self.n && self.m >= 1 {
            planted.max(planted - 1.0 + self.epsilon)
        } else {
            planted
        }
    }
}

pub fn worst_case_value(set: &[usize], inst: &WorstCaseInstance) -> f64 {
    let hits = set.iter().filter(|&&e| inst.in_planted(e)).count();
    let outside = set.len() - hits;
    hits as f64 + inst.epsilon * outside.min(1) as f64
}

/// `C(n, k)` in floating point.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E[F(S)] = M^2 / N + epsilon * (1 - 1 / C(N, M))` for a uniform M-subset.
pub fn expected_random_value(inst: &WorstCaseInstance) -> f64 {
    let (n, m) = (inst.n as f64, inst.m as f64);
    m * m / n + inst.epsilon * (1.0 - 1.0 / binomial(inst.n, inst.m))
}

/// Average of `F` over every M-subset, if there are at most `limit`.
pub fn exhaustive_random_value(inst: &WorstCaseInstance, limit: f64) -> Option<f64> {
    if binomial(inst.n, inst.m) > limit {
        return None;
    }
    let mut hits_total: u64 = 0;
    let mut impure: u64 = 0;
    let mut count: u64 = 0;
    for_each_subset(inst.n, inst.m, |s| {
        let hits = s.iter().filter(|&&e| inst.in_planted(e)).count();
        hits_total += hits as u64;
        impure += u64::from(hits < s.len());
        count += 1;
    });
    Some((hits_total as f64 + inst.epsilon * impure as f64) / count as f64)
}

fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub instance: WorstCaseInstance,
    pub analytic: f64,
    pub exhaustive: Option<f64>,
    pub empirical_mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub optimum: f64,
    /// `(M / N + epsilon / M) * M`.
    pub bound: f64,
    /// `M / N * optimum`, the epsilon-free form.
    pub bound_without_epsilon: f64,
    pub within_tolerance: bool,
    pub exhaustive_matches: bool,
    pub bound_holds: bool,
    pub pass: bool,
}

/// Monte Carlo and (when small) exhaustive checks of the random-list value.
pub fn verify_lemma1(inst: &WorstCaseInstance, num_samples: usize, seed: u64) -> Result<Lemma1Report> {
    if num_samples < 1000 {
        return Err(Error::InvalidConfig("lemma 1 needs at least 1000 samples".into()));
    }
    let analytic = expected_random_value(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..num_samples {
        let s = sample(&mut rng, inst.n, inst.m).into_vec();
        let v = worst_case_value(&s, inst);
        sum += v;
        sum_sq += v * v;
    }
    let k = num_samples as f64;
    let mean = sum / k;
    let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
    let std_error = (var / k).sqrt();
    let within_tolerance = (mean - analytic).abs() <= 4.0 * std_error + 1e-12;
    let exhaustive = exhaustive_random_value(inst, 1e6);
    let exhaustive_matches = exhaustive.is_none_or(|e| (e - analytic).abs() <= 1e-12);
    let m = inst.m as f64;
    let bound = (m / inst.n as f64 + if inst.m > 0 { inst.epsilon / m } else { 0.0 }) * m;
    let bound_holds = analytic <= bound + 1e-12;
    let bound_without_epsilon = m / inst.n as f64 * inst.optimum();
    Ok(Lemma1Report {
        instance: *inst,
        analytic,
        exhaustive,
        empirical_mean: mean,
        std_error,
        samples: num_samples,
        optimum: inst.optimum(),
        bound,
        bound_without_epsilon,
        within_tolerance,
        exhaustive_matches,
        bound_holds,
        pass: within_tolerance && exhaustive_matches && bound_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub achieved: f64,
    pub required: f64,
    pub margin: f64,
    pub pass: bool,
}

/// `F_achieved >= (1 - e^{-alpha}) F_opt - sum_t eps_t`, with slack 1e-9.
pub fn verify_lemma2(trace: &GreedyTrace, f_opt: f64, f_achieved: f64) -> Result<BoundCheck> {
    let slack = trace.total_slack().ok_or_else(|| {
        Error::NotVerifiable("trace has steps without an exact best gain".into())
    })?;
    let required = (1.0 - (-trace.alpha).exp()) * f_opt - slack;
    let margin = f_achieved - required;
    Ok(BoundCheck {
        achieved: f_achieved,
        required,
        margin,
        pass: margin >= -SLACK,
    })
}

/// `(F_achieved - F_min) / (F_opt - F_min) >= alpha`.
pub fn verify_lemma3(f_achieved: f64, f_opt: f64, f_min: f64, alpha: f64) -> Result<BoundCheck> {
    if f_opt - f_min <= 0.0 {
        return Err(Error::Degenerate(f_opt));
    }
    let ratio = (f_achieved - f_min) / (f_opt - f_min);
    Ok(BoundCheck {
        achieved: ratio,
        required: alpha,
        margin: ratio - alpha,
        pass: ratio >= alpha - SLACK,
    })
}

pub const DEFAULT_COMBINATION_CAP: u128 = 10_000_000;

/// Best list found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exhaustive {
    pub items: Vec<Labeling>,
    pub value: f64,
    pub evaluated: u128,
}

fn binomial_u128(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Precomputed item values and diversity structure over `[L]^n`.
struct Ground {
    items: Vec<Labeling>,
    base: Vec<f64>,
    lambda: f64,
    kind: GroundKind,
}

enum GroundKind {
    Coverage { groups: Vec<Vec<usize>>, num_groups: usize, h: ConcaveH },
    Pairwise { model: DiversityModel },
}

impl Ground {
    fn build(graph: &FactorGraph, model: &DiversityModel) -> Self {
        let mut items = Vec::new();
        for_each_labeling(graph.num_vars, graph.num_labels, |y| items.push(Labeling(y.to_vec())));
        let base = items
            .iter()
            .map(|y| graph.score_unchecked(&y.0) + model.lambda * model.parsimony(graph, &y.0))
            .collect();
        let kind = match items.first().and_then(|y| model.exact_groups(graph, &y.0)) {
            Some(_) => {
                let groups: Vec<Vec<usize>> = items
                    .iter()
                    .map(|y| model.exact_groups(graph, &y.0).expect("coverage family"))
                    .collect();
                let num_groups = groups.iter().flatten().max().map_or(0, |&g| g + 1);
                let h = if model.family == Family::HammingBallSet { ConcaveH::Count } else { model.h };
                GroundKind::Coverage { groups, num_groups, h }
            }
            None => GroundKind::Pairwise { model: model.clone() },
        };
        Ground {
            items,
            base,
            lambda: model.lambda,
            kind,
        }
    }
}

struct Search<'a> {
    ground: &'a Ground,
    m: usize,
    multiset: bool,
    exact_size: bool,
    counts: Vec<usize>,
    chosen: Vec<usize>,
    best: (f64, Vec<usize>),
    evaluated: u128,
}

impl Search<'_> {
    fn gain(&mut self, i: usize) -> f64 {
        let g = self.ground;
        let d = match &g.kind {
            GroundKind::Coverage { groups, h, .. } => groups[i].iter().map(|&k| h.marginal(self.counts[k])).sum(),
            GroundKind::Pairwise { model } => self
                .chosen
                .iter()
                .map(|&j| model.pair_value(&g.items[i].0, &g.items[j].0).expect("pairwise family"))
                .sum::<f64>(),
        };
        g.base[i] + g.lambda * d
    }

    fn push(&mut self, i: usize) {
        if let GroundKind::Coverage { groups, .. } = &self.ground.kind {
            groups[i].iter().for_each(|&k| self.counts[k] += 1);
        }
        self.chosen.push(i);
    }

    fn pop(&mut self) {
        let i = self.chosen.pop().expect("nonempty");
        if let GroundKind::Coverage { groups, .. } = &self.ground.kind {
            groups[i].iter().for_each(|&k| self.counts[k] -= 1);
        }
    }

    fn visit(&mut self, value: f64) {
        self.evaluated += 1;
        if (!self.exact_size || self.chosen.len() == self.m) && value > self.best.0 {
            self.best = (value, self.chosen.clone());
        }
    }

    fn dfs(&mut self, start: usize, value: f64) {
        self.visit(value);
        if self.chosen.len() == self.m {
            return;
        }
        for i in start..self.ground.items.len() {
            let v = value + self.gain(i);
            self.push(i);
            self.dfs(if self.multiset { i } else { i + 1 }, v);
            self.pop();
        }
    }
}

fn exhaustive(
    graph: &FactorGraph,
    model: &DiversityModel,
    m: usize,
    multiset: bool,
    cap: u128,
) -> Result<Exhaustive> {
    model.validate(graph)?;
    let size = graph.state_count().filter(|&c| c <= 1 << 24).ok_or(Error::TooLarge {
        states: format!("{}^{}", graph.num_labels, graph.num_vars),
        cap,
    })?;
    let combos = if multiset {
        binomial_u128(size + m as u128 - 1, m as u128)
    } else {
        (0..=m as u128).try_fold(0u128, |acc, j| acc.checked_add(binomial_u128(size, j)?))
    };
    match combos {
        Some(c) if c <= cap => {}
        other => {
            return Err(Error::TooLarge {
                states: other.map_or("overflow".into(), |c| c.to_string()),
                cap,
            })
        }
    }
    let ground = Ground::build(graph, model);
    let num_groups = match &ground.kind {
        GroundKind::Coverage { num_groups, .. } => *num_groups,
        GroundKind::Pairwise { .. } => 0,
    };
    let new_search = || Search {
        ground: &ground,
        m,
        multiset,
        exact_size: multiset,
        counts: vec![0; num_groups],
        chosen: Vec::new(),
        best: (f64::NEG_INFINITY, Vec::new()),
        evaluated: 0,
    };
    // the empty list, then one subtree per first element
    let mut root = new_search();
    root.visit(0.0);
    let branches: Vec<((f64, Vec<usize>), u128)> = if m == 0 {
        Vec::new()
    } else {
        (0..ground.items.len())
            .into_par_iter()
            .map(|i| {
                let mut s = new_search();
                let v = s.gain(i);
                s.push(i);
                s.dfs(if multiset { i } else { i + 1 }, v);
                (s.best, s.evaluated)
            })
            .collect()
    };
    let mut best = root.best;
    let mut evaluated = root.evaluated;
    for (b, e) in branches {
        evaluated += e;
        if b.0 > best.0 {
            best = b;
        }
    }
    Ok(Exhaustive {
        items: best.1.iter().map(|&i| ground.items[i].clone()).collect(),
        value: best.0,
        evaluated,
    })
}

/// `max F(S)` over sets of at most `m` distinct labelings, under the exact
/// diversity. Ties go to the lexicographically first set of indices.
pub fn exhaustive_opt_set(graph: &FactorGraph, model: &DiversityModel, m: usize, cap: u128) -> Result<Exhaustive> {
    exhaustive(graph, model, m, false, cap)
}

/// `max F(S)` over lists of exactly `m` labelings, repeats allowed.
pub fn exhaustive_opt_list(graph: &FactorGraph, model: &DiversityModel, m: usize, cap: u128) -> Result<Exhaustive> {
    exhaustive(graph, model, m, true, cap)
}

/// Randomized small-instance suite for the greedy guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSuiteConfig {
    pub instances: usize,
    pub seed: u64,
    pub families: Vec<Family>,
    pub max_vars: usize,
    pub max_m: usize,
    #[serde(skip)]
    pub fault: Option<Fault>,
}

impl Default for BoundSuiteConfig {
    fn default() -> Self {
        BoundSuiteConfig {
            instances: 100,
            seed: 0,
            families: vec![
                Family::LabelCost,
                Family::LabelTransition,
                Family::RegionConsistency,
                Family::HammingBallSet,
            ],
            max_vars: 8,
            max_m: 4,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCase {
    pub index: usize,
    pub family: Family,
    pub num_vars: usize,
    pub m: usize,
    pub lambda: f64,
    pub greedy: f64,
    pub opt_list: f64,
    pub opt_set: f64,
    /// `F(greedy) / F(opt_list)`.
    pub ratio: f64,
    pub nemhauser: bool,
    pub lemma2: BoundCheck,
    /// Only for families whose greedy steps maximize the exact gain.
    pub lemma3: Option<BoundCheck>,
    pub total_slack: f64,
}

impl BoundCase {
    pub fn pass(&self) -> bool {
        self.nemhauser_applies().is_none_or(|_| self.nemhauser)
            && self.lemma2.pass
            && self.lemma3.as_ref().is_none_or(|c| c.pass)
    }

    fn nemhauser_applies(&self) -> Option<()> {
        self.family.gain_is_exact().then_some(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSuiteReport {
    pub cases: Vec<BoundCase>,
    pub nemhauser_checked: usize,
    pub nemhauser_passed: usize,
    pub lemma2_passed: usize,
    pub lemma3_checked: usize,
    pub lemma3_passed: usize,
    pub min_ratio: f64,
    pub pass: bool,
}

/// A random chain or 2-row grid with Potts couplings and mixed-sign unaries.
pub fn random_small_graph(rng: &mut ChaCha8Rng, n: usize, num_labels: usize) -> FactorGraph {
    let unaries = (0..n)
        .map(|_| (0..num_labels).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let cols = if n >= 4 && rng.random_bool(0.5) { n.div_ceil(2) } else { n };
    let mut pairwise = Vec::new();
    for i in 0..n {
        if (i + 1) % cols != 0 && i + 1 < n {
            pairwise.push(PairwiseFactor::potts(i, i + 1, rng.random_range(0.0..0.6)));
        }
        if i + cols < n {
            pairwise.push(PairwiseFactor::potts(i, i + cols, rng.random_range(0.0..0.6)));
        }
    }
    FactorGraph::new(num_labels, unaries, pairwise).expect("generated graph is valid")
}

fn suite_model(family: Family, rng: &mut ChaCha8Rng, n: usize) -> DiversityModel {
    let lambda = rng.random_range(0.2..2.0);
    let h = ConcaveH::ALL[rng.random_range(0..3)];
    match family {
        Family::LabelCost => DiversityModel::label_cost(h, lambda).with_costs(Costs::Uniform(0.0)),
        Family::LabelTransition => DiversityModel::label_transition(h, lambda).with_costs(Costs::Uniform(0.0)),
        Family::RegionConsistency => {
            let cut = rng.random_range(1..n);
            DiversityModel::region_consistency(vec![(0..cut).collect(), (cut..n).collect()], h, lambda)
        }
        Family::HammingBallSet => DiversityModel::hamming_set(rng.random_range(1..=2.min(n)), lambda),
        Family::HammingBallSmooth => DiversityModel::hamming_smooth(rng.random_range(0.1..1.0), lambda),
        Family::Divmbest => DiversityModel::divmbest(lambda),
    }
}

/// Runs exact-backend greedy on random binary instances and checks the
/// `(1 - 1/e)` guarantee against the best list, Lemma 2 with the traced
/// slack, and Lemma 3 on the unshifted scores.
pub fn run_bound_suite(config: &BoundSuiteConfig) -> Result<BoundSuiteReport> {
    if config.families.is_empty() {
        return Err(Error::InvalidConfig("bound suite needs at least one family".into()));
    }
    let bound = 1.0 - (-1.0f64).exp();
    let cases = (0..config.instances)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9E37_79B9).wrapping_add(index as u64));
            let family = config.families[index % config.families.len()];
            let m = rng.random_range(1..=config.max_m.max(1));
            // keeps the exhaustive search within the combination cap
            let max_n = match m {
                1 | 2 => config.max_vars,
                3 => config.max_vars.min(8),
                _ => config.max_vars.min(6),
            };
            let n = rng.random_range(2..=max_n.max(2));
            let raw = random_small_graph(&mut rng, n, 2);
            let (graph, offset) = shift_nonnegative(&raw);
            let model = suite_model(family, &mut rng, n);
            let options = GreedyOptions {
                backend: Backend::Exact,
                trace_limit: u128::MAX,
                fault: config.fault,
                ..GreedyOptions::default()
            };
            let (list, trace) = greedy_diverse(&graph, &model, m, &options)?;
            let greedy = exact_list_objective(&graph, &model, &list.labels());
            let opt_list = exhaustive_opt_list(&graph, &model, m, DEFAULT_COMBINATION_CAP)?.value;
            let opt_set = exhaustive_opt_set(&graph, &model, m, DEFAULT_COMBINATION_CAP)?.value;
            let lemma2 = verify_lemma2(&trace, opt_list, greedy)?;
            let lemma3 = if family.gain_is_exact() {
                let (raw_list, _) = greedy_diverse(&raw, &model, m, &options)?;
                let achieved = exact_list_objective(&raw, &model, &raw_list.labels());
                let opt = exhaustive_opt_list(&raw, &model, m, DEFAULT_COMBINATION_CAP)?.value;
                let f_min = -(m as f64) * offset;
                match verify_lemma3(achieved, opt, f_min, bound) {
                    Ok(c) => Some(c),
                    Err(Error::Degenerate(_)) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            Ok(BoundCase {
                index,
                family,
                num_vars: n,
                m,
                lambda: model.lambda,
                greedy,
                opt_list,
                opt_set,
                ratio: if opt_list > 0.0 { greedy / opt_list } else { 1.0 },
                nemhauser: greedy >= bound * opt_list - SLACK,
                lemma2,
                lemma3,
                total_slack: trace.total_slack().unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let exact: Vec<&BoundCase> = cases.iter().filter(|c| c.family.gain_is_exact()).collect();
    let nemhauser_passed = exact.iter().filter(|c| c.nemhauser).count();
    let lemma2_passed = cases.iter().filter(|c| c.lemma2.pass).count();
    let lemma3_checked = cases.iter().filter(|c| c.lemma3.is_some()).count();
    let lemma3_passed = cases.iter().filter(|c| c.lemma3.as_ref().is_some_and(|l| l.pass)).count();
    let min_ratio = exact.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    let pass = cases.iter().all(BoundCase::pass);
    Ok(BoundSuiteReport {
        nemhauser_checked: exact.len(),
        nemhauser_passed,
        lemma2_passed,
        lemma3_checked,
        lemma3_passed,
        min_ratio,
        pass,
        cases,
    })
}
