use crate::error::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy; probabilities are clamped to
/// `[1e-12, 1 - 1e-12]` before taking logs.
pub fn cross_entropy(p: &[f64], y: &[f64]) -> f64 {
    assert_eq!(p.len(), y.len(), "prediction/label length mismatch");
    if p.is_empty() {
        return 0.0;
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    total / p.len() as f64
}

/// Cross-entropy over the concatenation of several instances.
pub fn batch_cross_entropy(batch: &[(&[f64], &[f64])]) -> f64 {
    let n: usize = batch.iter().map(|(p, _)| p.len()).sum();
    if n == 0 {
        return 0.0;
    }
    batch
        .iter()
        .map(|(p, y)| cross_entropy(p, y) * p.len() as f64)
        .sum::<f64>()
        / n as f64
}

/// Indices sorted by descending score; equal scores keep index order.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// `Σ_k (R_k − R_{k−1}) · P_k` over the descending-score ranking.
pub fn average_precision(p: &[f64], y: &[f64]) -> Result<f64> {
    assert_eq!(p.len(), y.len(), "prediction/label length mismatch");
    let positives = y.iter().filter(|&&v| v > 0.5).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &i) in rank_descending(p).iter().enumerate() {
        if y[i] > 0.5 {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(ap / positives as f64)
}

/// Fraction of positive labels.
pub fn prevalence(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    y.iter().filter(|&&v| v > 0.5).count() as f64 / y.len() as f64
}
