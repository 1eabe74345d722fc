//! Max-product messages out of a cardinality factor.
//!
//! With respect to a reference labeling every variable reduces to a binary
//! choice: match (take the incoming score at the reference label) or
//! mismatch (take the best other label). Sorting the mismatch-minus-match
//! deltas once gives, for every count `c`, the best total with exactly `c`
//! mismatches as a prefix sum. Excluding one variable shifts that prefix by at
//! most one position, so prefix and suffix maxima over the counts answer all
//! `n` outgoing messages in `O(n log n + nL)`.

use crate::error::{Error, Result};

use super::hop::CardinalityFactor;

/// `outgoing[i][l] = max over the other variables of
/// weight * g(ham) + sum_{j != i} incoming[j][y_j]`, with `y_i = l`.
pub fn cardinality_messages(
    factor: &CardinalityFactor,
    incoming: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    factor.validate()?;
    let n = factor.reference.len();
    if incoming.len() != n {
        return Err(Error::InvalidFactor(format!(
            "incoming has {} rows, factor covers {n} variables",
            incoming.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let l = incoming[0].len();
    if l == 0 || incoming.iter().any(|r| r.len() != l) {
        return Err(Error::InvalidFactor("incoming rows must share one positive length".into()));
    }
    if factor.reference.0.iter().any(|&r| r >= l) {
        return Err(Error::InvalidFactor("reference label out of range".into()));
    }
    let reference = &factor.reference.0;
    let g = |m: usize| factor.weight * factor.value_table[m];

    let matched: Vec<f64> = (0..n).map(|j| incoming[j][reference[j]]).collect();
    let total_matched: f64 = matched.iter().sum();
    if l == 1 {
        return Ok((0..n).map(|i| vec![g(0) + total_matched - matched[i]]).collect());
    }
    let delta: Vec<f64> = (0..n)
        .map(|j| {
            let other = incoming[j]
                .iter()
                .enumerate()
                .filter(|&(lab, _)| lab != reference[j])
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            other - matched[j]
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| delta[b].total_cmp(&delta[a]).then(a.cmp(&b)));
    let mut rank = vec![0; n];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    let mut prefix = vec![0.0; n + 1];
    for (r, &j) in order.iter().enumerate() {
        prefix[r + 1] = prefix[r] + delta[j];
    }

    // c counts mismatches among the n-1 other variables: c in 0..n
    let mut head_max = [vec![0.0; n], vec![0.0; n]];
    let mut tail_max = [vec![f64::NEG_INFINITY; n + 1], vec![f64::NEG_INFINITY; n + 1]];
    for s in 0..2 {
        let mut best = f64::NEG_INFINITY;
        for c in 0..n {
            best = best.max(g(c + s) + prefix[c]);
            head_max[s][c] = best;
        }
        for c in (0..n).rev() {
            tail_max[s][c] = tail_max[s][c + 1].max(g(c + s) + prefix[c + 1]);
        }
    }

    let mut out = vec![vec![0.0; l]; n];
    for i in 0..n {
        let r = rank[i];
        let rest = total_matched - matched[i];
        let best = |s: usize| {
            // c <= r: top-c of the others equals the global top-c
            let mut b = head_max[s][r.min(n - 1)];
            // c > r: variable i sits inside the global top-(c+1)
            if r + 1 < n {
                b = b.max(tail_max[s][r + 1] - delta[i]);
            }
            b
        };
        let (same, diff) = (best(0), best(1));
        for (lab, slot) in out[i].iter_mut().enumerate() {
            *slot = rest + if lab == reference[i] { same } else { diff };
        }
    }
    Ok(out)
}
