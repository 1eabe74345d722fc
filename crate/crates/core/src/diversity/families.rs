//! Per-family marginal gains and their compiled high-order potentials.

use crate::error::{Error, Result};
use crate::factor_graph::{hamming, Labeling};
use crate::inference::{uniform_label, CardinalityFactor, HopAugmentation, HopTerm};

use super::coverage::ConcaveH;
use super::hamming::ball_intersection_by_distance_f64;

/// Labels used by `y`, ascending.
pub fn labels_present(y: &[usize], num_labels: usize) -> Vec<usize> {
    let mut present = vec![false; num_labels];
    y.iter().for_each(|&l| present[l] = true);
    (0..num_labels).filter(|&l| present[l]).collect()
}

/// `sum_{l in y} h(1 + lcount(l)) - h(lcount(l))`.
pub fn label_cost_gain(y: &[usize], lcount: &[usize], h: ConcaveH) -> f64 {
    labels_present(y, lcount.len())
        .into_iter()
        .map(|l| h.marginal(lcount[l]))
        .sum()
}

/// Label rewards `lambda * (h(1 + lcount(l)) - h(lcount(l)) + c(l))`.
pub fn compile_label_cost(lcount: &[usize], h: ConcaveH, lambda: f64, costs: &[f64]) -> HopAugmentation {
    let rewards = lcount
        .iter()
        .zip(costs)
        .map(|(&c, &cost)| lambda * (h.marginal(c) + cost))
        .collect();
    HopAugmentation::from_term(HopTerm::LabelReward { rewards })
}

/// Unordered label pairs `a < b` realized on some edge, as ids `a * L + b`.
pub fn realized_transitions(y: &[usize], edges: &[(usize, usize)], num_labels: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = edges
        .iter()
        .filter(|&&(u, v)| y[u] != y[v])
        .map(|&(u, v)| y[u].min(y[v]) * num_labels + y[u].max(y[v]))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Concave marginal summed over realized unordered transitions.
///
/// `cut_count` is `L x L` flattened, indexed by `a * L + b` with `a < b`.
pub fn transition_gain(
    y: &[usize],
    edges: &[(usize, usize)],
    cut_count: &[usize],
    num_labels: usize,
    h: ConcaveH,
) -> f64 {
    realized_transitions(y, edges, num_labels)
        .into_iter()
        .map(|id| h.marginal(cut_count[id]))
        .sum()
}

/// Transition rewards `lambda * (marginal + c(a, b))` for every pair `a < b`.
pub fn compile_transition(
    edges: &[(usize, usize)],
    cut_count: &[usize],
    num_labels: usize,
    h: ConcaveH,
    lambda: f64,
    costs: &[Vec<f64>],
) -> HopAugmentation {
    let mut rewards = vec![vec![0.0; num_labels]; num_labels];
    for a in 0..num_labels {
        for b in a + 1..num_labels {
            rewards[a][b] = lambda * (h.marginal(cut_count[a * num_labels + b]) + costs[a][b]);
        }
    }
    HopAugmentation::from_term(HopTerm::TransitionReward {
        edges: edges.to_vec(),
        rewards,
    })
}

/// The two lower-bound variants of the Hamming-ball gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HammingMode {
    /// `b - sum_{y' in S} |B_k(y) ∩ B_k(y')|`.
    Set { k: usize, b: f64 },
    /// `|S| - sum_{y' in S} exp(-gamma * ham(y, y'))`.
    Smooth { gamma: f64 },
}

impl HammingMode {
    /// Overlap term as a function of the center distance.
    pub fn overlap(&self, n: usize, num_labels: usize, m: usize) -> f64 {
        match *self {
            HammingMode::Set { k, .. } => ball_intersection_by_distance_f64(n, num_labels, k, m),
            HammingMode::Smooth { gamma } => (-gamma * m as f64).exp(),
        }
    }

    pub fn ball_constant(&self, list_len: usize) -> f64 {
        match *self {
            HammingMode::Set { b, .. } => b,
            HammingMode::Smooth { .. } => list_len as f64,
        }
    }
}

pub fn hamming_lb_gain(y: &[usize], list: &[Labeling], num_labels: usize, mode: HammingMode) -> f64 {
    let n = y.len();
    mode.ball_constant(list.len())
        - list
            .iter()
            .map(|s| mode.overlap(n, num_labels, hamming(&s.0, y)))
            .sum::<f64>()
}

/// One cardinality factor per previous solution with table
/// `g(m) = lambda * (b / |S| - overlap(m))`.
pub fn compile_hamming_factors(
    list: &[Labeling],
    num_labels: usize,
    mode: HammingMode,
    lambda: f64,
) -> Result<HopAugmentation> {
    let first = list.first().ok_or(Error::EmptyList)?;
    let n = first.len();
    let share = mode.ball_constant(list.len()) / list.len() as f64;
    let table: Vec<f64> = (0..=n)
        .map(|m| lambda * (share - mode.overlap(n, num_labels, m)))
        .collect();
    let factors = list
        .iter()
        .map(|s| CardinalityFactor::new(s.clone(), table.clone(), 1.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(HopAugmentation::from_term(HopTerm::Cardinality { factors }))
}

/// `sum_{y' in S} ham(y, y')`.
pub fn divmbest_gain(y: &[usize], list: &[Labeling]) -> f64 {
    list.iter().map(|s| hamming(&s.0, y) as f64).sum()
}

/// Node table `lambda * |{y' in S : y'_i != l}|`.
pub fn divmbest_augment(n: usize, num_labels: usize, list: &[Labeling], lambda: f64) -> HopAugmentation {
    let mut table = vec![vec![0.0; num_labels]; n];
    for s in list {
        for (i, row) in table.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                if s.0[i] != l {
                    *x += lambda;
                }
            }
        }
    }
    HopAugmentation::from_term(HopTerm::NodeAdditive { table })
}

/// `(region, label)` ids `r * L + l` covered by `y`.
pub fn covered_regions(y: &[usize], regions: &[Vec<usize>], num_labels: usize) -> Vec<usize> {
    regions
        .iter()
        .enumerate()
        .filter_map(|(r, region)| uniform_label(region, y).map(|l| r * num_labels + l))
        .collect()
}

pub fn region_consistency_gain(
    y: &[usize],
    regions: &[Vec<usize>],
    covered: &[usize],
    num_labels: usize,
    h: ConcaveH,
) -> f64 {
    covered_regions(y, regions, num_labels)
        .into_iter()
        .map(|id| h.marginal(covered[id]))
        .sum()
}

pub fn compile_region_rewards(
    regions: &[Vec<usize>],
    covered: &[usize],
    num_labels: usize,
    h: ConcaveH,
    lambda: f64,
) -> HopAugmentation {
    let rewards = (0..regions.len())
        .map(|r| {
            (0..num_labels)
                .map(|l| lambda * h.marginal(covered[r * num_labels + l]))
                .collect()
        })
        .collect();
    HopAugmentation::from_term(HopTerm::RegionReward {
        regions: regions.to_vec(),
        rewards,
    })
}

/// Regions must be nonempty, in range and pairwise disjoint.
pub fn check_regions(regions: &[Vec<usize>], n: usize) -> Result<()> {
    let mut owner = vec![None; n];
    for (r, region) in regions.iter().enumerate() {
        if region.is_empty() {
            return Err(Error::InvalidRegions(format!("region {r} is empty")));
        }
        for &i in region {
            if i >= n {
                return Err(Error::InvalidRegions(format!("region {r}: variable {i} out of range")));
            }
            if let Some(prev) = owner[i] {
                return Err(Error::InvalidRegions(format!(
                    "variable {i} belongs to regions {prev} and {r}"
                )));
            }
            owner[i] = Some(r);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversity::hamming::hamming_ball_size_f64;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-5
    }

    #[test]
    fn label_cost_examples() {
        // labels {0, 1} with lcount 0 and 3
        assert_eq!(label_cost_gain(&[0, 1, 1], &[0, 3], ConcaveH::Count), 1.0);
        assert!(close(label_cost_gain(&[0, 1, 1], &[0, 3], ConcaveH::Sqrt), 1.26795));
        assert_eq!(label_cost_gain(&[2, 0, 1, 3], &[0; 4], ConcaveH::Count), 4.0);
    }

    #[test]
    fn compiled_label_rewards() {
        let aug = compile_label_cost(&[0, 0, 0], ConcaveH::Count, 1.0, &[0.0; 3]);
        assert_eq!(aug.terms, vec![HopTerm::LabelReward { rewards: vec![1.0; 3] }]);
        let aug = compile_label_cost(&[2, 0], ConcaveH::Count, 0.5, &[-1.0, -1.0]);
        assert_eq!(aug.terms, vec![HopTerm::LabelReward { rewards: vec![-0.5, 0.0] }]);
    }

    #[test]
    fn transition_examples() {
        let edges = [(0, 1), (1, 2)];
        assert_eq!(transition_gain(&[1, 1, 1], &edges, &[0; 4], 2, ConcaveH::Count), 0.0);
        assert_eq!(transition_gain(&[0, 1, 1], &edges, &[0; 4], 2, ConcaveH::Count), 1.0);
        assert_eq!(transition_gain(&[1, 0, 1], &edges, &[0; 4], 2, ConcaveH::Count), 1.0);
        let counts = [0, 2, 0, 0];
        assert!(close(transition_gain(&[0, 1, 1], &edges, &counts, 2, ConcaveH::Sqrt), 0.31784));
    }

    #[test]
    fn hamming_examples() {
        let smooth = HammingMode::Smooth { gamma: 0.5 };
        let s = vec![Labeling(vec![0, 0, 0])];
        assert!(close(hamming_lb_gain(&[1, 1, 0], &s, 2, smooth), 0.63212));
        assert_eq!(hamming_lb_gain(&[0, 0, 0], &s, 2, smooth), 0.0);
        let set = HammingMode::Set { k: 1, b: hamming_ball_size_f64(3, 2, 1) };
        assert_eq!(hamming_lb_gain(&[1, 1, 1], &s, 2, set), 4.0);
    }

    #[test]
    fn compiled_hamming_tables() {
        let s = vec![Labeling(vec![0, 1, 0, 1])];
        let aug = compile_hamming_factors(&s, 2, HammingMode::Smooth { gamma: 0.5 }, 1.0).unwrap();
        let HopTerm::Cardinality { factors } = &aug.terms[0] else { panic!() };
        for (m, g) in factors[0].value_table.iter().enumerate() {
            assert!((g - (1.0 - (-0.5 * m as f64).exp())).abs() < 1e-15);
        }
        let b = hamming_ball_size_f64(4, 2, 1);
        let aug = compile_hamming_factors(&s, 2, HammingMode::Set { k: 1, b }, 0.3).unwrap();
        let HopTerm::Cardinality { factors } = &aug.terms[0] else { panic!() };
        assert!((factors[0].value_table[0] - 0.3 * (b - b)).abs() < 1e-15);
        assert_eq!(
            compile_hamming_factors(&[], 2, HammingMode::Smooth { gamma: 1.0 }, 1.0),
            Err(Error::EmptyList)
        );
    }

    #[test]
    fn divmbest_tables() {
        let aug = divmbest_augment(2, 3, &[], 1.0);
        assert_eq!(aug.as_node_additive(2, 3).unwrap(), vec![vec![0.0; 3]; 2]);
        let s = vec![Labeling(vec![0, 2]), Labeling(vec![0, 1])];
        let t = divmbest_augment(2, 3, &s, 0.2).as_node_additive(2, 3).unwrap();
        assert_eq!(t[0][0], 0.0);
        assert!((t[0][1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn region_examples() {
        let regions = vec![vec![0, 1, 2]];
        assert_eq!(region_consistency_gain(&[1, 1, 1], &regions, &[1, 0], 2, ConcaveH::Count), 1.0);
        assert_eq!(region_consistency_gain(&[1, 0, 1], &regions, &[0, 0], 2, ConcaveH::Count), 0.0);
        assert!(matches!(
            check_regions(&[vec![0, 1], vec![1, 2]], 3),
            Err(Error::InvalidRegions(_))
        ));
        assert!(check_regions(&[vec![0, 1], vec![2]], 3).is_ok());
    }
}
