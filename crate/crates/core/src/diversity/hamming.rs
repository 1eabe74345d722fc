//! Hamming balls: sizes, pairwise intersections, and union counting.

use crate::factor_graph::hamming;
use crate::inference::for_each_labeling;

fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `|B_k(y)| = sum_{j<=k} C(n, j) (L-1)^j`; `None` on u128 overflow.
pub fn hamming_ball_size(n: usize, num_labels: usize, k: usize) -> Option<u128> {
    let mut total: u128 = 0;
    for j in 0..=k.min(n) {
        let term = binomial_u128(n, j)?.checked_mul((num_labels as u128 - 1).checked_pow(j as u32)?)?;
        total = total.checked_add(term)?;
    }
    Some(total)
}

pub fn hamming_ball_size_f64(n: usize, num_labels: usize, k: usize) -> f64 {
    (0..=k.min(n))
        .map(|j| binomial_f64(n, j) * ((num_labels - 1) as f64).powi(j as i32))
        .sum()
}

/// Visits every `(j, a, b, c, weight)` composition counted by the
/// intersection formula: `j` flips on the `n - m` agreeing coordinates; on
/// the `m` disagreeing ones `a` copy the first center, `b` the second and
/// `c` take a third label.
fn intersection_terms<T>(
    n: usize,
    num_labels: usize,
    k: usize,
    m: usize,
    mut term: impl FnMut(usize, usize, usize, usize) -> Option<T>,
) -> Option<Vec<T>> {
    let mut out = Vec::new();
    for j in 0..=(n - m).min(k) {
        for a in 0..=m {
            for b in 0..=(m - a) {
                let c = m - a - b;
                if c > 0 && num_labels < 3 {
                    continue;
                }
                // distance to the first center: j + b + c; to the second: j + a + c
                if j + b + c <= k && j + a + c <= k {
                    out.push(term(j, a, b, c)?);
                }
            }
        }
    }
    Some(out)
}

/// `|B_k(y) ∩ B_k(y')|` for centers at Hamming distance `m`.
pub fn ball_intersection_by_distance(n: usize, num_labels: usize, k: usize, m: usize) -> Option<u128> {
    assert!(m <= n, "distance exceeds length");
    let lm1 = num_labels as u128 - 1;
    let lm2 = (num_labels as u128).saturating_sub(2);
    let terms = intersection_terms(n, num_labels, k, m, |j, a, b, c| {
        binomial_u128(n - m, j)?
            .checked_mul(lm1.checked_pow(j as u32)?)?
            .checked_mul(binomial_u128(m, a)?)?
            .checked_mul(binomial_u128(m - a, b)?)?
            .checked_mul(lm2.checked_pow(c as u32)?)
    })?;
    terms.into_iter().try_fold(0u128, |acc, t| acc.checked_add(t))
}

pub fn ball_intersection_by_distance_f64(n: usize, num_labels: usize, k: usize, m: usize) -> f64 {
    let lm1 = (num_labels - 1) as f64;
    let lm2 = num_labels.saturating_sub(2) as f64;
    intersection_terms(n, num_labels, k, m, |j, a, b, c| {
        Some(
            binomial_f64(n - m, j)
                * lm1.powi(j as i32)
                * binomial_f64(m, a)
                * binomial_f64(m - a, b)
                * lm2.powi(c as i32),
        )
    })
    .expect("f64 terms are total")
    .into_iter()
    .sum()
}

/// `|B_k(y) ∩ B_k(y')|`.
pub fn ball_intersection_size(y: &[usize], other: &[usize], num_labels: usize, k: usize) -> Option<u128> {
    ball_intersection_by_distance(y.len(), num_labels, k, hamming(y, other))
}

/// `|∪_{c in centers} B_k(c)|` by enumerating `[L]^n`.
pub fn hamming_union_size(centers: &[&[usize]], n: usize, num_labels: usize, k: usize) -> u64 {
    let mut count = 0;
    for_each_labeling(n, num_labels, |z| {
        if centers.iter().any(|c| hamming(c, z) <= k) {
            count += 1;
        }
    });
    count
}

/// Points of `B_k(y)` outside every ball around `centers`.
pub fn hamming_exact_gain(y: &[usize], centers: &[&[usize]], num_labels: usize, k: usize) -> u64 {
    let mut count = 0;
    let mut z = y.to_vec();
    visit_ball(&mut z, y, 0, k, num_labels, &mut |z| {
        if centers.iter().all(|c| hamming(c, z) > k) {
            count += 1;
        }
    });
    count
}

fn visit_ball(
    z: &mut Vec<usize>,
    center: &[usize],
    from: usize,
    budget: usize,
    num_labels: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    visit(z);
    if budget == 0 {
        return;
    }
    for i in from..z.len() {
        for l in 0..num_labels {
            if l == center[i] {
                continue;
            }
            z[i] = l;
            visit_ball(z, center, i + 1, budget - 1, num_labels, visit);
        }
        z[i] = center[i];
    }
}
