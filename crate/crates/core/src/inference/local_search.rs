use crate::error::Result;
use crate::factor_graph::{FactorGraph, Labeling};

const IMPROVE_TOL: f64 = 1e-12;

/// Iterated conditional modes on `score(y) + gain(y)`.
///
/// Each sweep visits the variables in order and moves each to its best label
/// when that strictly improves the objective. Stops at a single-flip local
/// optimum or after `max_sweeps`. Returns the labeling and its objective.
pub fn local_search<F>(
    graph: &FactorGraph,
    mut gain: F,
    init: &Labeling,
    max_sweeps: usize,
) -> Result<(Labeling, f64)>
where
    F: FnMut(&[usize]) -> f64,
{
    graph.check_labeling(init)?;
    let mut y = init.0.clone();
    let mut current = graph.score_unchecked(&y) + gain(&y);
    for _ in 0..max_sweeps {
        let mut moved = false;
        for i in 0..graph.num_vars {
            let keep = y[i];
            let mut best = (keep, current);
            for l in 0..graph.num_labels {
                if l == keep {
                    continue;
                }
                y[i] = l;
                let s = graph.score_unchecked(&y) + gain(&y);
                if s > best.1 + IMPROVE_TOL {
                    best = (l, s);
                }
            }
            y[i] = best.0;
            if best.0 != keep {
                current = best.1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok((Labeling(y), current))
}
