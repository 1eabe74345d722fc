use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_graph::{FactorGraph, Labeling, PairwiseFactor};

/// Potts strength; `4 * BETA < 1` keeps noise-free unaries decisive.
pub const BETA: f64 = 0.2;
const COLOR_NOISE: f64 = 0.05;
const COLOR_WIDTH: f64 = 0.2;

/// A grid labeling problem with planted ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthInstance {
    pub height: usize,
    pub width: usize,
    pub sigma: f64,
    pub seed: u64,
    pub ground_truth: Labeling,
    pub graph: FactorGraph,
}

impl SynthInstance {
    pub fn num_labels(&self) -> usize {
        self.graph.num_labels
    }
}

/// Random rectangles on a random background; unaries are the one-hot truth
/// plus Gaussian noise, and 4-neighbour Potts weights decay with the
/// difference of a noisy per-pixel color derived from the truth.
pub fn synth_generate(height: usize, width: usize, num_labels: usize, sigma: f64, seed: u64) -> Result<SynthInstance> {
    if height * width == 0 {
        return Err(Error::InvalidConfig("grid must have at least one cell".into()));
    }
    if num_labels < 2 {
        return Err(Error::InvalidConfig("need at least 2 labels".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gt = vec![rng.random_range(0..num_labels); height * width];
    let rects = rng.random_range(2..=4);
    for _ in 0..rects {
        let label = rng.random_range(0..num_labels);
        let h = rng.random_range(1..=height.div_ceil(2).max(1)) + usize::from(height > 2);
        let w = rng.random_range(1..=width.div_ceil(2).max(1)) + usize::from(width > 2);
        let (h, w) = (h.min(height), w.min(width));
        let r0 = rng.random_range(0..=height - h);
        let c0 = rng.random_range(0..=width - w);
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                gt[r * width + c] = label;
            }
        }
    }
    Ok(build(height, width, num_labels, sigma, seed, gt, &mut rng, 1.0))
}

/// Like [`synth_generate`] but plants two small adjacent patches with the two
/// highest labels and halves their unary evidence, so the transition between
/// them is rare and easily missed.
pub fn synth_rare_transition(height: usize, width: usize, num_labels: usize, sigma: f64, seed: u64) -> Result<SynthInstance> {
    if height < 2 || width < 2 || num_labels < 3 {
        return Err(Error::InvalidConfig("rare transitions need a 2x2 grid and 3 labels".into()));
    }
    let base = synth_generate(height, width, num_labels, sigma, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let mut gt = base.ground_truth.0.clone();
    let (a, b) = (num_labels - 2, num_labels - 1);
    gt.iter_mut().filter(|l| **l >= a).for_each(|l| *l = 0);
    let r = rng.random_range(0..height - 1);
    let c = rng.random_range(0..width - 1);
    gt[r * width + c] = a;
    gt[(r + 1) * width + c] = a;
    gt[r * width + c + 1] = b;
    gt[(r + 1) * width + c + 1] = b;
    Ok(build(height, width, num_labels, sigma, seed, gt, &mut rng, 0.5))
}

#[allow(clippy::too_many_arguments)]
fn build(
    height: usize,
    width: usize,
    num_labels: usize,
    sigma: f64,
    seed: u64,
    gt: Vec<usize>,
    rng: &mut ChaCha8Rng,
    rare_evidence: f64,
) -> SynthInstance {
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let color_noise = Normal::new(0.0, COLOR_NOISE).expect("valid width");
    let scale = (num_labels - 1) as f64;
    let rare_from = if rare_evidence < 1.0 { num_labels - 2 } else { num_labels };
    let unaries: Vec<Vec<f64>> = gt
        .iter()
        .map(|&t| {
            (0..num_labels)
                .map(|l| {
                    let evidence = if t >= rare_from { rare_evidence } else { 1.0 };
                    let hit = if l == t { evidence } else { 0.0 };
                    hit + if sigma > 0.0 { noise.sample(rng) } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let color: Vec<f64> = gt.iter().map(|&t| t as f64 / scale + color_noise.sample(rng)).collect();
    let weight = |i: usize, j: usize| {
        let d = color[i] - color[j];
        BETA * (-d * d / (2.0 * COLOR_WIDTH * COLOR_WIDTH)).exp()
    };
    let mut pairwise = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            if c + 1 < width {
                pairwise.push(PairwiseFactor::potts(i, i + 1, weight(i, i + 1)));
            }
            if r + 1 < height {
                pairwise.push(PairwiseFactor::potts(i, i + width, weight(i, i + width)));
            }
        }
    }
    let graph = FactorGraph::new(num_labels, unaries, pairwise).expect("generated graph is valid");
    SynthInstance {
        height,
        width,
        sigma,
        seed,
        ground_truth: Labeling(gt),
        graph,
    }
}
