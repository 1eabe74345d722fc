//! Synchronous damped max-product over unary, pairwise and cardinality factors.

use crate::error::{Error, Result};
use crate::factor_graph::{argmax, FactorGraph, Labeling};

use super::cardinality::cardinality_messages;
use super::hop::CardinalityFactor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessagePassingOptions {
    pub max_iters: usize,
    pub damping: f64,
    /// Stop once no message moves by more than this.
    pub tolerance: f64,
}

impl Default for MessagePassingOptions {
    fn default() -> Self {
        MessagePassingOptions {
            max_iters: 100,
            damping: 0.5,
            tolerance: 1e-9,
        }
    }
}

fn normalize(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_finite() {
        row.iter_mut().for_each(|x| *x -= m);
    }
}

/// Approximate MAP of `score + additive + sum of cardinality factors`.
///
/// Decodes the per-variable belief argmax after every iteration and returns
/// the best decode under the exact augmented score, so the result is never
/// worse than the first decode. No optimality guarantee on loopy graphs.
pub fn map_with_cardinality(
    graph: &FactorGraph,
    factors: &[CardinalityFactor],
    node_additive: Option<&[Vec<f64>]>,
    options: MessagePassingOptions,
) -> Result<(Labeling, f64)> {
    if options.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&options.damping) {
        return Err(Error::InvalidConfig("damping must lie in [0, 1)".into()));
    }
    let n = graph.num_vars;
    let l = graph.num_labels;
    for f in factors {
        f.validate()?;
        if f.reference.len() != n || f.reference.0.iter().any(|&r| r >= l) {
            return Err(Error::InvalidFactor("cardinality reference does not fit graph".into()));
        }
    }
    if let Some(add) = node_additive {
        if add.len() != n || add.iter().any(|r| r.len() != l) {
            return Err(Error::InvalidFactor("node additive table has wrong shape".into()));
        }
    }
    let local: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..l).map(|k| graph.unaries[i][k] + node_additive.map_or(0.0, |a| a[i][k])).collect())
        .collect();
    let tables: Vec<Vec<Vec<f64>>> = graph.pairwise.iter().map(|f| f.dense(l)).collect();
    let objective = |y: &[usize]| {
        graph.score_unchecked(y)
            + node_additive.map_or(0.0, |a| y.iter().enumerate().map(|(i, &k)| a[i][k]).sum())
            + factors.iter().map(|f| f.value(y)).sum::<f64>()
    };

    // pair_msgs[k] = (to u, to v)
    let mut pair_msgs: Vec<[Vec<f64>; 2]> = vec![[vec![0.0; l], vec![0.0; l]]; graph.pairwise.len()];
    let mut card_msgs: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; l]; n]; factors.len()];

    let beliefs = |pair_msgs: &[[Vec<f64>; 2]], card_msgs: &[Vec<Vec<f64>>]| {
        let mut b = local.clone();
        for (f, m) in graph.pairwise.iter().zip(pair_msgs) {
            for k in 0..l {
                b[f.u][k] += m[0][k];
                b[f.v][k] += m[1][k];
            }
        }
        for msgs in card_msgs {
            for (row, m) in b.iter_mut().zip(msgs) {
                row.iter_mut().zip(m).for_each(|(x, y)| *x += y);
            }
        }
        b
    };

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut consider = |b: &[Vec<f64>]| {
        let y: Vec<usize> = b.iter().map(|row| argmax(row)).collect();
        let s = objective(&y);
        if best.as_ref().is_none_or(|(_, bs)| s > *bs) {
            best = Some((y, s));
        }
    };

    let d = options.damping;
    for _ in 0..options.max_iters {
        let b = beliefs(&pair_msgs, &card_msgs);
        consider(&b);
        let mut change: f64 = 0.0;
        let mut new_pair = pair_msgs.clone();
        for (k, f) in graph.pairwise.iter().enumerate() {
            let from_u: Vec<f64> = (0..l).map(|a| b[f.u][a] - pair_msgs[k][0][a]).collect();
            let from_v: Vec<f64> = (0..l).map(|a| b[f.v][a] - pair_msgs[k][1][a]).collect();
            let mut to_v: Vec<f64> = (0..l)
                .map(|lv| (0..l).map(|lu| tables[k][lu][lv] + from_u[lu]).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let mut to_u: Vec<f64> = (0..l)
                .map(|lu| (0..l).map(|lv| tables[k][lu][lv] + from_v[lv]).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            normalize(&mut to_u);
            normalize(&mut to_v);
            for (side, fresh) in [(0, to_u), (1, to_v)] {
                for a in 0..l {
                    let v = (1.0 - d) * fresh[a] + d * pair_msgs[k][side][a];
                    change = change.max((v - pair_msgs[k][side][a]).abs());
                    new_pair[k][side][a] = v;
                }
            }
        }
        let mut new_card = card_msgs.clone();
        for (c, f) in factors.iter().enumerate() {
            let incoming: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let mut row: Vec<f64> = (0..l).map(|a| b[i][a] - card_msgs[c][i][a]).collect();
                    normalize(&mut row);
                    row
                })
                .collect();
            let mut out = cardinality_messages(f, &incoming)?;
            for (i, row) in out.iter_mut().enumerate() {
                normalize(row);
                for a in 0..l {
                    let v = (1.0 - d) * row[a] + d * card_msgs[c][i][a];
                    change = change.max((v - card_msgs[c][i][a]).abs());
                    new_card[c][i][a] = v;
                }
            }
        }
        pair_msgs = new_pair;
        card_msgs = new_card;
        if change < options.tolerance {
            break;
        }
    }
    consider(&beliefs(&pair_msgs, &card_msgs));
    let (y, s) = best.expect("at least one decode");
    Ok((Labeling(y), s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_graph::PairwiseFactor;
    use crate::inference::exact::{map_exact_by, DEFAULT_ENUM_CAP};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_chain(rng: &mut ChaCha8Rng, n: usize, l: usize) -> FactorGraph {
        let unaries = (0..n)
            .map(|_| (0..l).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let pw = (0..n - 1)
            .map(|i| {
                PairwiseFactor::table(
                    i,
                    i + 1,
                    (0..l).map(|_| (0..l).map(|_| rng.random_range(0.0..1.0)).collect()).collect(),
                )
            })
            .collect();
        FactorGraph::new(l, unaries, pw).unwrap()
    }

    #[test]
    fn exact_on_trees_without_cardinality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.random_range(2..=8);
            let g = random_chain(&mut rng, n, 3);
            let (_, s) = map_with_cardinality(&g, &[], None, MessagePassingOptions::default()).unwrap();
            let (_, exact) = map_exact_by(&g, DEFAULT_ENUM_CAP, |_| 0.0).unwrap();
            assert!((s - exact).abs() < 1e-9, "{s} vs {exact}");
        }
    }

    #[test]
    fn single_variable_with_cardinality_is_exact() {
        let g = FactorGraph::new(3, vec![vec![0.5, 0.0, 0.2]], vec![]).unwrap();
        let f = CardinalityFactor::new(Labeling(vec![0]), vec![0.0, 1.0], 1.0).unwrap();
        let (y, s) = map_with_cardinality(&g, &[f], None, MessagePassingOptions::default()).unwrap();
        assert_eq!(y.0, vec![2]);
        assert!((s - 1.2).abs() < 1e-12);
    }

    #[test]
    fn chain_with_two_cardinality_factors_is_near_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst: f64 = 1.0;
        for _ in 0..50 {
            let g = random_chain(&mut rng, 6, 2);
            let factors: Vec<CardinalityFactor> = (0..2)
                .map(|_| {
                    let r = Labeling((0..6).map(|_| rng.random_range(0..2)).collect());
                    let gamma = rng.random_range(0.1..1.0);
                    let table = (0..=6).map(|m| 1.0 - (-gamma * m as f64).exp()).collect();
                    CardinalityFactor::new(r, table, 1.0).unwrap()
                })
                .collect();
            let (_, s) =
                map_with_cardinality(&g, &factors, None, MessagePassingOptions::default()).unwrap();
            let (_, exact) = map_exact_by(&g, DEFAULT_ENUM_CAP, |y| {
                factors.iter().map(|f| f.value(y)).sum()
            })
            .unwrap();
            worst = worst.min(s / exact);
            assert!(s >= 0.95 * exact, "ratio {}", s / exact);
        }
        eprintln!("worst ratio {worst:.4}");
    }

    #[test]
    fn rejects_bad_options() {
        let g = FactorGraph::zeros(2, 2);
        let opts = MessagePassingOptions {
            damping: 1.0,
            ..Default::default()
        };
        assert!(map_with_cardinality(&g, &[], None, opts).is_err());
        let opts = MessagePassingOptions {
            max_iters: 0,
            ..Default::default()
        };
        assert!(map_with_cardinality(&g, &[], None, opts).is_err());
    }
}
