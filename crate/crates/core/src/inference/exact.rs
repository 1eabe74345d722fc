use crate::error::{Error, Result};
use crate::factor_graph::{FactorGraph, Labeling};

use super::hop::HopAugmentation;

/// Default cap on the number of labelings enumerated by exact solvers.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 24;

/// Environment variable overriding [`DEFAULT_ENUM_CAP`].
pub const ENUM_CAP_ENV: &str = "DIVSTRUCT_ENUM_CAP";

/// Reads the enumeration cap from the environment, falling back to the default.
pub fn enum_cap_from_env() -> u128 {
    std::env::var(ENUM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUM_CAP)
}

pub(crate) fn check_cap(graph: &FactorGraph, cap: u128) -> Result<u128> {
    match graph.state_count() {
        Some(states) if states <= cap => Ok(states),
        Some(states) => Err(Error::TooLarge {
            states: states.to_string(),
            cap,
        }),
        None => Err(Error::TooLarge {
            states: format!("{}^{}", graph.num_labels, graph.num_vars),
            cap,
        }),
    }
}

/// Exhaustive MAP of `score(y) + aug(y)`.
///
/// Ties go to the lexicographically smallest labeling.
pub fn map_exact(graph: &FactorGraph, aug: &HopAugmentation, cap: u128) -> Result<(Labeling, f64)> {
    aug.validate(graph.num_vars, graph.num_labels)?;
    map_exact_by(graph, cap, |y| aug.evaluate_slice(y))
}

/// Exhaustive maximizer of `score(y) + extra(y)` for an arbitrary `extra`.
pub fn map_exact_by<F>(graph: &FactorGraph, cap: u128, mut extra: F) -> Result<(Labeling, f64)>
where
    F: FnMut(&[usize]) -> f64,
{
    check_cap(graph, cap)?;
    let n = graph.num_vars;
    let l = graph.num_labels;
    let mut y = vec![0usize; n];
    let mut best = y.clone();
    let mut best_score = f64::NEG_INFINITY;
    loop {
        let s = graph.score_unchecked(&y) + extra(&y);
        if s > best_score {
            best_score = s;
            best.copy_from_slice(&y);
        }
        // odometer, last variable fastest => lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return Ok((Labeling(best), best_score));
            }
            i -= 1;
            y[i] += 1;
            if y[i] < l {
                break;
            }
            y[i] = 0;
        }
    }
}

/// Calls `visit` on every labeling in lexicographic order.
pub fn for_each_labeling<F>(n: usize, num_labels: usize, mut visit: F)
where
    F: FnMut(&[usize]),
{
    let mut y = vec![0usize; n];
    loop {
        visit(&y);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            y[i] += 1;
            if y[i] < num_labels {
                break;
            }
            y[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_graph::PairwiseFactor;
    use crate::inference::hop::{CardinalityFactor, HopTerm};

    #[test]
    fn single_variable_argmax() {
        let g = FactorGraph::new(3, vec![vec![0.0, 5.0, 2.0]], vec![]).unwrap();
        let (y, s) = map_exact(&g, &HopAugmentation::none(), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(y.0, vec![1]);
        assert_eq!(s, 5.0);
    }

    #[test]
    fn potts_tie_breaks_lexicographically() {
        let g = FactorGraph::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![PairwiseFactor::potts(0, 1, 10.0)],
        )
        .unwrap();
        let (y, s) = map_exact(&g, &HopAugmentation::none(), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(y.0, vec![0, 0]);
        assert_eq!(s, 11.0);
        let again = map_exact(&g, &HopAugmentation::none(), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(again.0, y);
        assert_eq!(again.1.to_bits(), s.to_bits());
    }

    #[test]
    fn cap_is_enforced() {
        let g = FactorGraph::zeros(10, 2);
        assert!(matches!(
            map_exact(&g, &HopAugmentation::none(), 1000),
            Err(Error::TooLarge { .. })
        ));
        let huge = FactorGraph::zeros(200, 3);
        assert!(matches!(
            map_exact(&huge, &HopAugmentation::none(), DEFAULT_ENUM_CAP),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn cardinality_augmented_map_matches_listing() {
        let g = FactorGraph::new(
            2,
            vec![vec![0.4, -0.1], vec![0.2, 0.7], vec![-0.3, 0.1]],
            vec![
                PairwiseFactor::table(0, 1, vec![vec![0.5, -0.2], vec![0.1, 0.3]]),
                PairwiseFactor::potts(1, 2, 0.25),
            ],
        )
        .unwrap();
        let f = CardinalityFactor::new(Labeling(vec![1, 1, 0]), vec![0.0, 0.9, 1.1, 0.2], 1.0).unwrap();
        let aug = HopAugmentation::from_term(HopTerm::Cardinality { factors: vec![f.clone()] });
        let (y, s) = map_exact(&g, &aug, DEFAULT_ENUM_CAP).unwrap();
        // independent listing of all 8 labelings
        let mut all: Vec<(f64, Vec<usize>)> = (0..8u128)
            .map(|i| {
                let y = Labeling::from_index(i, 3, 2).0;
                (g.score_unchecked(&y) + f.value(&y), y)
            })
            .collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        assert_eq!(y.0, all[0].1);
        assert!((s - all[0].0).abs() < 1e-12);
    }
}
