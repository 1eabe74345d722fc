use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor_graph::{hamming, Labeling};

fn same_length(y: &Labeling, gt: &Labeling) -> Result<()> {
    if y.len() != gt.len() {
        return Err(Error::InvalidLabeling(format!(
            "labeling has {} entries, ground truth {}",
            y.len(),
            gt.len()
        )));
    }
    Ok(())
}

/// `1 - ham(y, gt) / n`.
pub fn pixel_accuracy(y: &Labeling, gt: &Labeling) -> Result<f64> {
    same_length(y, gt)?;
    if gt.is_empty() {
        return Ok(1.0);
    }
    Ok(1.0 - hamming(&y.0, &gt.0) as f64 / gt.len() as f64)
}

/// `(intersection, union)` of the supports of `label`.
pub fn iou_counts(y: &Labeling, gt: &Labeling, label: usize) -> (usize, usize) {
    let mut inter = 0;
    let mut union = 0;
    for (&a, &b) in y.0.iter().zip(&gt.0) {
        inter += usize::from(a == label && b == label);
        union += usize::from(a == label || b == label);
    }
    (inter, union)
}

/// Intersection over union for one label; `None` if neither uses it.
pub fn iou(y: &Labeling, gt: &Labeling, label: usize) -> Result<Option<f64>> {
    same_length(y, gt)?;
    let (i, u) = iou_counts(y, gt, label);
    Ok((u > 0).then(|| i as f64 / u as f64))
}

/// IoU averaged over the labels with a nonempty union.
pub fn mean_iou(y: &Labeling, gt: &Labeling, num_labels: usize) -> Result<f64> {
    let per: Vec<f64> = (0..num_labels)
        .map(|l| iou(y, gt, l))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(if per.is_empty() { 1.0 } else { per.iter().sum::<f64>() / per.len() as f64 })
}

/// Corpus IoU: counts pooled over all pairs per label, then averaged over
/// labels with a nonempty pooled union.
pub fn corpus_iou(pairs: &[(Labeling, Labeling)], num_labels: usize) -> Result<f64> {
    let mut inter = vec![0usize; num_labels];
    let mut union = vec![0usize; num_labels];
    for (y, gt) in pairs {
        same_length(y, gt)?;
        for l in 0..num_labels {
            let (i, u) = iou_counts(y, gt, l);
            inter[l] += i;
            union[l] += u;
        }
    }
    let per: Vec<f64> = (0..num_labels)
        .filter(|&l| union[l] > 0)
        .map(|l| inter[l] as f64 / union[l] as f64)
        .collect();
    Ok(if per.is_empty() { 1.0 } else { per.iter().sum::<f64>() / per.len() as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PixelAccuracy,
    MeanIou,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::PixelAccuracy => "pixel_accuracy",
            Metric::MeanIou => "mean_iou",
        }
    }

    pub fn score(self, y: &Labeling, gt: &Labeling, num_labels: usize) -> Result<f64> {
        match self {
            Metric::PixelAccuracy => pixel_accuracy(y, gt),
            Metric::MeanIou => mean_iou(y, gt, num_labels),
        }
    }
}

/// Index and score of the best item of `list` (first on ties).
pub fn oracle_best(list: &[Labeling], gt: &Labeling, metric: Metric, num_labels: usize) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, y) in list.iter().enumerate() {
        let s = metric.score(y, gt, num_labels)?;
        if best.is_none_or(|b| s > b.1) {
            best = Some((i, s));
        }
    }
    best.ok_or(Error::EmptyList)
}

/// Score of the most accurate item in `list`.
pub fn oracle_accuracy(list: &[Labeling], gt: &Labeling, metric: Metric, num_labels: usize) -> Result<f64> {
    oracle_best(list, gt, metric, num_labels).map(|b| b.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(v: &[usize]) -> Labeling {
        Labeling(v.to_vec())
    }

    #[test]
    fn accuracy_examples() {
        let gt = lab(&[0, 1, 0, 1, 0, 1, 0, 1]);
        assert_eq!(pixel_accuracy(&gt, &gt).unwrap(), 1.0);
        assert_eq!(pixel_accuracy(&lab(&[1, 0, 1, 0, 1, 0, 1, 0]), &gt).unwrap(), 0.0);
        assert_eq!(pixel_accuracy(&lab(&[1, 0, 0, 1, 0, 1, 0, 1]), &gt).unwrap(), 0.75);
        assert!(pixel_accuracy(&lab(&[0]), &gt).is_err());
    }

    #[test]
    fn iou_examples() {
        let gt = lab(&[1, 1, 1, 0, 0, 0]);
        assert_eq!(iou(&gt, &gt, 1).unwrap(), Some(1.0));
        assert_eq!(iou(&lab(&[0, 0, 0, 1, 1, 1]), &gt, 1).unwrap(), Some(0.0));
        // intersection {0, 1}, union {0, 1, 2, 3, 4}
        assert_eq!(iou(&lab(&[1, 1, 0, 1, 1, 0]), &gt, 1).unwrap(), Some(0.4));
        assert_eq!(iou(&gt, &gt, 2).unwrap(), None);
        let y = lab(&[1, 1, 0, 1, 1, 0]);
        assert_eq!(corpus_iou(&[(y.clone(), gt.clone())], 3).unwrap(), mean_iou(&y, &gt, 3).unwrap());
    }

    #[test]
    fn corpus_iou_pools_counts() {
        let a = (lab(&[1, 1]), lab(&[1, 0]));
        let b = (lab(&[0, 0, 0, 0]), lab(&[0, 0, 0, 0]));
        // label 0: 4 / 5 pooled; label 1: 1 / 2
        let got = corpus_iou(&[a, b], 2).unwrap();
        assert!((got - (0.8 + 0.5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_examples() {
        let gt = lab(&[0, 1, 1]);
        let list = vec![lab(&[1, 1, 1]), lab(&[0, 1, 1]), lab(&[0, 0, 0])];
        assert_eq!(oracle_accuracy(&list, &gt, Metric::PixelAccuracy, 2).unwrap(), 1.0);
        let single = oracle_accuracy(&list[..1], &gt, Metric::PixelAccuracy, 2).unwrap();
        assert!((single - 2.0 / 3.0).abs() < 1e-12);
        assert!(oracle_accuracy(&list[..1], &gt, Metric::MeanIou, 2).unwrap() <= 1.0);
        assert_eq!(oracle_accuracy(&[], &gt, Metric::PixelAccuracy, 2), Err(Error::EmptyList));
    }
}
