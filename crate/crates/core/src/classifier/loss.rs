//! Multiclass softmax log-loss and its derivatives with respect to the raw
//! class scores.

/// Numerically stable softmax written into `out`.
pub fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; scores.len()];
    softmax_into(scores, &mut p);
    p
}

/// `−ln softmax(scores)[label]`.
pub fn log_loss(scores: &[f64], label: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[label]
}

/// Gradient `p − y` and exact diagonal Hessian `p(1 − p)` of [`log_loss`].
pub fn gradients(scores: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(scores);
    let g = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| pk - if k == label { 1.0 } else { 0.0 })
        .collect();
    let h = p.iter().map(|&pk| pk * (1.0 - pk)).collect();
    (g, h)
}

/// Per-class Hessian weight used by the booster: twice the exact diagonal.
/// Because all class trees of a round move together, the doubled diagonal
/// bounds the full softmax Hessian and keeps each Newton step a descent step.
pub(crate) fn boosting_hessian(p: f64) -> f64 {
    (2.0 * p * (1.0 - p)).max(1e-16)
}
