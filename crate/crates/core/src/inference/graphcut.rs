use crate::error::{Error, Result};
use crate::factor_graph::{FactorGraph, Labeling};

use super::binary::BinaryEnergy;

/// Exact MAP for binary graphs whose pairwise scores satisfy
/// `s(0,0) + s(1,1) >= s(0,1) + s(1,0)`, via one minimum cut.
///
/// `node_additive`, when given, is an `n x 2` table added to the unaries.
/// The returned score is `evaluate_score + additive` at the labeling.
pub fn map_graphcut_binary(
    graph: &FactorGraph,
    node_additive: Option<&[Vec<f64>]>,
) -> Result<(Labeling, f64)> {
    if graph.num_labels != 2 {
        return Err(Error::WrongArity(graph.num_labels));
    }
    if let Some(add) = node_additive {
        if add.len() != graph.num_vars || add.iter().any(|r| r.len() != 2) {
            return Err(Error::InvalidFactor("node additive table must be n x 2".into()));
        }
    }
    let unary = |i: usize, l: usize| {
        graph.unaries[i][l] + node_additive.map_or(0.0, |a| a[i][l])
    };
    let mut energy = BinaryEnergy::new(graph.num_vars);
    for i in 0..graph.num_vars {
        energy.add_unary(i, -unary(i, 0), -unary(i, 1));
    }
    for f in &graph.pairwise {
        let s = |a, b| -f.score(a, b);
        energy
            .add_pairwise(f.u, f.v, s(0, 0), s(0, 1), s(1, 0), s(1, 1))
            .map_err(|_| Error::NotSubmodular(f.u, f.v))?;
    }
    let (x, _) = energy.minimize();
    let y = Labeling(x.into_iter().map(usize::from).collect());
    let score = graph.score_unchecked(&y.0)
        + (0..graph.num_vars).map(|i| node_additive.map_or(0.0, |a| a[i][y.0[i]])).sum::<f64>();
    Ok((y, score))
}
