use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::diversity::DiversityModel;
use crate::error::{Error, Result};
use crate::factor_graph::{FactorGraph, Labeling};

use super::driver::{combine_linear, GreedyOptions};
use super::list::SolutionList;

/// How many items each of `k` lists contributes to a list of `m`:
/// `m / k` each, the remainder going to the earliest lists.
pub fn concat_quotas(m: usize, k: usize) -> Vec<usize> {
    (0..k).map(|j| m / k + usize::from(j < m % k)).collect()
}

/// ⊗: concatenates list prefixes and rescores them under `reference`.
pub fn combine_concat(
    graph: &FactorGraph,
    lists: &[SolutionList],
    m: usize,
    reference: &DiversityModel,
) -> Result<SolutionList> {
    if lists.is_empty() {
        return Err(Error::InvalidConfig("no lists to concatenate".into()));
    }
    let quotas = concat_quotas(m, lists.len());
    let mut items = Vec::with_capacity(m);
    for (j, (list, &need)) in lists.iter().zip(&quotas).enumerate() {
        if list.len() < need {
            return Err(Error::TooFew {
                list: j,
                have: list.len(),
                need,
            });
        }
        items.extend(list.solutions[..need].iter().map(|s| s.labels.clone()));
    }
    let config = json!({
        "combine": "concat",
        "quotas": quotas,
        "sources": lists.iter().map(|l| l.config.clone()).collect::<Vec<_>>(),
        "reference": reference,
    });
    Ok(rescore(graph, reference, &items, config))
}

/// Scores `items` in order under `model`.
pub fn rescore(
    graph: &FactorGraph,
    model: &DiversityModel,
    items: &[Labeling],
    config: serde_json::Value,
) -> SolutionList {
    let mut list = SolutionList::new(model.lambda, config);
    let mut state = model.empty_state(graph);
    for y in items {
        let gain = model.gain(graph, &state, &y.0);
        list.push(y.clone(), graph.score_unchecked(&y.0), gain, model.parsimony(graph, &y.0));
        model.observe(graph, &mut state, y);
    }
    list
}

/// Runs [`combine_linear`] for every weight vector in `grid` and keeps the
/// one with the highest `metric` (earliest on ties). Cells run in parallel.
pub fn grid_search_linear<F>(
    graph: &FactorGraph,
    models: &[DiversityModel],
    grid: &[Vec<f64>],
    m: usize,
    options: &GreedyOptions,
    metric: F,
) -> Result<(Vec<f64>, SolutionList)>
where
    F: Fn(&SolutionList) -> f64 + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty weight grid".into()));
    }
    let cells: Vec<(SolutionList, f64)> = grid
        .par_iter()
        .map(|weights| {
            if weights.len() != models.len() {
                return Err(Error::InvalidConfig("weight vector length mismatch".into()));
            }
            let pairs: Vec<(DiversityModel, f64)> =
                models.iter().cloned().zip(weights.iter().copied()).collect();
            let (list, _) = combine_linear(graph, &pairs, m, options)?;
            let score = metric(&list);
            Ok((list, score))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, cell) in cells.iter().enumerate() {
        if cell.1 > cells[best].1 {
            best = i;
        }
    }
    let list = cells.into_iter().nth(best).expect("nonempty grid").0;
    Ok((grid[best].clone(), list))
}

/// `m` labelings drawn uniformly and independently from `[L]^n`.
pub fn random_baseline(graph: &FactorGraph, m: usize, seed: u64) -> SolutionList {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut list = SolutionList::new(0.0, json!({"method": "random", "seed": seed, "M": m}));
    for _ in 0..m {
        let y = Labeling(
            (0..graph.num_vars)
                .map(|_| rng.random_range(0..graph.num_labels))
                .collect(),
        );
        let r = graph.score_unchecked(&y.0);
        list.push(y, r, 0.0, 0.0);
    }
    list
}
