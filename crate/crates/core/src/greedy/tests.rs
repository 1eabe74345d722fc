use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::diversity::{ConcaveH, Costs, DiversityModel};
use crate::error::Error;
use crate::factor_graph::{hamming, shift_nonnegative, FactorGraph, Labeling, PairwiseFactor};
use crate::inference::{for_each_labeling, map_exact_by, HopAugmentation, DEFAULT_ENUM_CAP};

fn chain(rng: &mut ChaCha8Rng, n: usize, l: usize) -> FactorGraph {
    let unaries = (0..n)
        .map(|_| (0..l).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let pairwise = (1..n)
        .map(|i| PairwiseFactor::potts(i - 1, i, rng.random_range(0.0..0.6)))
        .collect();
    FactorGraph::new(l, unaries, pairwise).unwrap()
}

fn models(n: usize, lambda: f64) -> Vec<DiversityModel> {
    vec![
        DiversityModel::label_cost(ConcaveH::Sqrt, lambda),
        DiversityModel::label_transition(ConcaveH::Count, lambda),
        DiversityModel::hamming_set(1, lambda),
        DiversityModel::hamming_smooth(0.5, lambda),
        DiversityModel::divmbest(lambda),
        DiversityModel::region_consistency(vec![(0..n / 2).collect(), (n / 2..n).collect()], ConcaveH::Log1p, lambda),
    ]
}

fn all_labelings(n: usize, l: usize) -> Vec<Labeling> {
    let mut out = Vec::new();
    for_each_labeling(n, l, |y| out.push(Labeling(y.to_vec())));
    out
}

/// Best exact objective over multisets of exactly `m` labelings.
fn brute_force_multiset(graph: &FactorGraph, model: &DiversityModel, m: usize) -> f64 {
    let ground = all_labelings(graph.num_vars, graph.num_labels);
    let mut idx = vec![0usize; m];
    let mut best = f64::NEG_INFINITY;
    loop {
        let items: Vec<Labeling> = idx.iter().map(|&i| ground[i].clone()).collect();
        best = best.max(exact_list_objective(graph, model, &items));
        let mut pos = m;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            if idx[pos] + 1 < ground.len() {
                idx[pos] += 1;
                let v = idx[pos];
                idx[pos..].iter_mut().for_each(|x| *x = v);
                break;
            }
        }
    }
}

#[test]
fn zero_lambda_repeats_the_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = chain(&mut rng, 5, 3);
    let (map, _) = map_exact_by(&g, DEFAULT_ENUM_CAP, |_| 0.0).unwrap();
    for m in [DiversityModel::divmbest(0.0), DiversityModel::hamming_smooth(0.3, 0.0)] {
        let (list, _) = greedy_diverse(&g, &m, 3, &GreedyOptions::default()).unwrap();
        assert!(list.labels().iter().all(|y| *y == map));
    }
}

#[test]
fn divmbest_walks_through_the_labels() {
    let g = FactorGraph::new(3, vec![vec![3.0, 2.0, 1.0]], vec![]).unwrap();
    let (list, _) = greedy_diverse(&g, &DiversityModel::divmbest(10.0), 3, &GreedyOptions::default()).unwrap();
    let labels: Vec<usize> = list.labels().iter().map(|y| y.0[0]).collect();
    assert_eq!(labels, vec![0, 1, 2]);
}

#[test]
fn stored_objective_matches_recomputation_and_prefixes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let (n, l) = (rng.random_range(2..6), rng.random_range(2..4));
        let g = chain(&mut rng, n, l);
        for m in models(n, rng.random_range(0.1..1.0)) {
            let (list, trace) = greedy_diverse(&g, &m, 4, &GreedyOptions::default()).unwrap();
            assert!(list.recompute_error(&g, &m) < 1e-9, "{}", m.family);
            assert_eq!(trace.steps.len(), 4);
            let (short, _) = greedy_diverse(&g, &m, 2, &GreedyOptions::default()).unwrap();
            assert_eq!(short.labels(), list.prefix(2).labels());
        }
    }
}

#[test]
fn exact_greedy_meets_the_bound_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let bound = 1.0 - (-1.0f64).exp();
    for trial in 0..24 {
        let n = rng.random_range(2..=4);
        let (g, _) = shift_nonnegative(&chain(&mut rng, n, 2));
        let m = [
            DiversityModel::label_cost(ConcaveH::Sqrt, 1.0).with_costs(Costs::Uniform(0.0)),
            DiversityModel::label_transition(ConcaveH::Count, 1.0).with_costs(Costs::Uniform(0.0)),
            DiversityModel::region_consistency(vec![vec![0, 1]], ConcaveH::Log1p, 1.0),
        ][trial % 3]
            .clone()
            .with_lambda(rng.random_range(0.5..3.0));
        let budget = rng.random_range(1..=3);
        let opts = GreedyOptions::default().with_backend(Backend::Exact);
        let (list, trace) = greedy_diverse(&g, &m, budget, &opts).unwrap();
        let opt = brute_force_multiset(&g, &m, budget);
        assert!(list.value() >= bound * opt - 1e-9, "{} < {bound} * {opt}", list.value());
        assert!(trace.steps.iter().all(|s| s.epsilon.unwrap() < 1e-9));
    }
}

#[test]
fn traced_slack_is_nonnegative_and_flags_approximate_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = chain(&mut rng, 6, 2);
    let m = DiversityModel::hamming_set(2, 0.5);
    let (list, trace) = greedy_diverse(&g, &m, 4, &GreedyOptions::default()).unwrap();
    assert_eq!(list.len(), 4);
    for s in &trace.steps {
        let (best, eps) = (s.best.unwrap(), s.epsilon.unwrap());
        assert!(eps >= 0.0 && best >= s.achieved - 1e-9);
    }
}

#[test]
fn large_lambda_forces_a_new_labeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = chain(&mut rng, 5, 2);
    let lambda = g.score_range() + 1.0;
    let (list, _) = greedy_diverse(&g, &DiversityModel::divmbest(lambda), 2, &GreedyOptions::default()).unwrap();
    assert_ne!(list.solutions[0].labels, list.solutions[1].labels);
}

#[test]
fn backend_errors_carry_the_step() {
    let g = FactorGraph::zeros(3, 3);
    let opts = GreedyOptions::default().with_backend(Backend::GraphCut);
    let err = greedy_diverse(&g, &DiversityModel::divmbest(1.0), 2, &opts).unwrap_err();
    assert_eq!(
        err,
        Error::Step {
            step: 1,
            source: Box::new(Error::WrongArity(3))
        }
    );
}

#[test]
fn auto_backend_follows_the_potential_kinds() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let big2 = chain(&mut rng, 30, 2);
    let big3 = chain(&mut rng, 30, 3);
    let opts = GreedyOptions::default();
    let picks = |g: &FactorGraph, m: &DiversityModel| {
        let state = m.state_from(g, &[g.unary_argmax()]);
        auto_backend(g, &m.compile(g, &state).unwrap(), &opts, true).unwrap()
    };
    assert_eq!(picks(&big2, &DiversityModel::divmbest(1.0)), Backend::GraphCut);
    assert_eq!(picks(&big3, &DiversityModel::divmbest(1.0)), Backend::Expansion);
    assert_eq!(picks(&big3, &DiversityModel::label_cost(ConcaveH::Count, 1.0)), Backend::Expansion);
    assert_eq!(picks(&big3, &DiversityModel::hamming_smooth(0.5, 1.0)), Backend::MessagePassing);
    assert_eq!(picks(&big3, &DiversityModel::label_transition(ConcaveH::Count, 1.0)), Backend::LocalSearch);
    let small = chain(&mut rng, 4, 3);
    assert_eq!(picks(&small, &DiversityModel::hamming_smooth(0.5, 1.0)), Backend::Exact);
    let mixed = {
        let s = vec![big3.unary_argmax()];
        let a = DiversityModel::label_cost(ConcaveH::Count, 1.0);
        let b = DiversityModel::hamming_smooth(0.5, 1.0);
        let mut aug = a.compile(&big3, &a.state_from(&big3, &s)).unwrap();
        aug.extend(b.compile(&big3, &b.state_from(&big3, &s)).unwrap());
        aug
    };
    assert!(matches!(
        auto_backend(&big3, &mixed, &opts, false),
        Err(Error::UnsupportedCombination(_))
    ));
}

#[test]
fn approximate_backends_produce_full_lists_on_larger_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = chain(&mut rng, 40, 3);
    for m in models(40, 0.3) {
        let (list, trace) = greedy_diverse(&g, &m, 3, &GreedyOptions::default()).unwrap();
        assert_eq!(list.len(), 3);
        assert!(trace.steps.iter().all(|s| s.epsilon.is_none() && s.backend != Backend::Exact));
        assert!(list.recompute_error(&g, &m) < 1e-6, "{}", m.family);
    }
}

#[test]
fn concat_splits_by_quota() {
    assert_eq!(concat_quotas(16, 3), vec![6, 5, 5]);
    assert_eq!(concat_quotas(4, 2), vec![2, 2]);
    assert_eq!(concat_quotas(5, 1), vec![5]);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = chain(&mut rng, 4, 2);
    let a = DiversityModel::divmbest(0.5);
    let b = DiversityModel::hamming_smooth(0.5, 1.0);
    let opts = GreedyOptions::default();
    let (la, _) = greedy_diverse(&g, &a, 4, &opts).unwrap();
    let (lb, _) = greedy_diverse(&g, &b, 4, &opts).unwrap();
    let single = combine_concat(&g, std::slice::from_ref(&la), 3, &a).unwrap();
    assert_eq!(single.labels(), la.prefix(3).labels());
    assert!((single.value() - la.prefix(3).value()).abs() < 1e-12);
    let both = combine_concat(&g, &[la.clone(), lb.clone()], 4, &a).unwrap();
    let expect: Vec<Labeling> = la.labels()[..2].iter().chain(&lb.labels()[..2]).cloned().collect();
    assert_eq!(both.labels(), expect);
    assert!(both.recompute_error(&g, &a) < 1e-9);
    assert_eq!(
        combine_concat(&g, &[la.prefix(1), lb], 4, &a),
        Err(Error::TooFew { list: 0, have: 1, need: 2 })
    );
}

#[test]
fn linear_combination_reduces_to_single_and_to_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let g = chain(&mut rng, 5, 2);
    let m = DiversityModel::hamming_smooth(0.5, 0.7);
    let opts = GreedyOptions::default();
    let (single, _) = greedy_diverse(&g, &m, 3, &opts).unwrap();
    let (lin, _) = combine_linear(&g, &[(m.clone(), 1.0)], 3, &opts).unwrap();
    assert_eq!(single.labels(), lin.labels());
    assert!((single.value() - lin.value()).abs() < 1e-9);
    let (zero, _) = combine_linear(&g, &[(m, 0.0), (DiversityModel::divmbest(1.0), 0.0)], 3, &opts).unwrap();
    let (map, _) = map_exact_by(&g, DEFAULT_ENUM_CAP, |_| 0.0).unwrap();
    assert!(zero.labels().iter().all(|y| *y == map));
}

#[test]
fn linear_combination_steps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let n = rng.random_range(2..=6);
        let g = chain(&mut rng, n, 2);
        let (w1, w2) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let gamma = 0.4;
        let pairs = vec![
            (DiversityModel::divmbest(1.0), w1),
            (DiversityModel::hamming_smooth(gamma, 1.0), w2),
        ];
        let (list, _) = combine_linear(&g, &pairs, 4, &GreedyOptions::default()).unwrap();
        let mut prev: Vec<Labeling> = Vec::new();
        for s in &list.solutions {
            let (y, _) = map_exact_by(&g, DEFAULT_ENUM_CAP, |y| {
                let d1: f64 = prev.iter().map(|p| hamming(&p.0, y) as f64).sum();
                let d2: f64 = prev.iter().map(|p| 1.0 - (-gamma * hamming(&p.0, y) as f64).exp()).sum();
                w1 * d1 + w2 * d2
            })
            .unwrap();
            assert_eq!(s.labels, y);
            prev.push(y);
        }
    }
}

#[test]
fn grid_search_picks_the_best_cell() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = chain(&mut rng, 4, 2);
    let models = vec![DiversityModel::divmbest(1.0)];
    let grid = vec![vec![0.0], vec![5.0], vec![0.1]];
    let distinct = |l: &SolutionList| {
        let mut ys = l.labels();
        ys.sort_by(|a, b| a.0.cmp(&b.0));
        ys.dedup();
        ys.len() as f64
    };
    let (w, list) = grid_search_linear(&g, &models, &grid, 2, &GreedyOptions::default(), distinct).unwrap();
    assert_eq!(w, vec![5.0]);
    assert_eq!(distinct(&list), 2.0);
}

#[test]
fn random_baseline_is_seeded_and_uniform() {
    let g = FactorGraph::zeros(1, 2);
    assert_eq!(random_baseline(&g, 5, 1), random_baseline(&g, 5, 1));
    let draws = 10_000;
    let ones: usize = (0..draws as u64).map(|s| random_baseline(&g, 1, s).solutions[0].labels.0[0]).sum();
    let sigma = (draws as f64 * 0.25).sqrt();
    assert!((ones as f64 - draws as f64 / 2.0).abs() < 3.0 * sigma);
    let list = random_baseline(&FactorGraph::zeros(4, 3), 50, 7);
    assert_eq!(list.len(), 50);
    assert_eq!(list.value(), 0.0);
}

#[test]
fn solution_list_json_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = chain(&mut rng, 4, 3);
    let m = DiversityModel::label_cost(ConcaveH::Sqrt, 0.4);
    let (list, _) = greedy_diverse(&g, &m, 3, &GreedyOptions::default()).unwrap();
    let text = serde_json::to_string(&list).unwrap();
    let back: SolutionList = serde_json::from_str(&text).unwrap();
    assert!(back.recompute_error(&g, &m) < 1e-9);
    assert!(text.contains("\"F\""));
    let _ = HopAugmentation::none();
}
