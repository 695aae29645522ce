//! Training objectives: the density-reweighted squared error and the
//! optional `1 - CCC` auxiliary term.

use crate::dataio::Va;
use crate::error::{Error, Result};
use crate::eval::{ccc, ccc_grad_x};

fn check_lengths(preds: &[Va], targets: &[Va], v_weights: &[f64], a_weights: &[f64], mask: &[bool]) -> Result<()> {
    let n = preds.len();
    if [targets.len(), v_weights.len(), a_weights.len(), mask.len()].iter().any(|&l| l != n) {
        return Err(Error::Shape(format!(
            "loss inputs disagree in length: {n} predictions, {} targets, {}/{} weights, {} mask entries",
            targets.len(),
            v_weights.len(),
            a_weights.len(),
            mask.len()
        )));
    }
    for (&wv, &wa) in v_weights.iter().zip(a_weights) {
        if !(wv > 0.0 && wa > 0.0 && wv.is_finite() && wa.is_finite()) {
            return Err(Error::Validation(format!("loss weights must be positive and finite, got ({wv}, {wa})")));
        }
    }
    Ok(())
}

/// Mean over unmasked frames of `[w_v (v̂ - v)² + w_a (â - a)²] / 2`.
pub fn weighted_loss(preds: &[Va], targets: &[Va], v_weights: &[f64], a_weights: &[f64], mask: &[bool]) -> Result<f64> {
    weighted_loss_grad(preds, targets, v_weights, a_weights, mask).map(|(l, _)| l)
}

/// Loss value and its gradient with respect to each prediction's
/// `(valence, arousal)`; masked frames get a zero gradient.
pub fn weighted_loss_grad(
    preds: &[Va],
    targets: &[Va],
    v_weights: &[f64],
    a_weights: &[f64],
    mask: &[bool],
) -> Result<(f64, Vec<(f64, f64)>)> {
    check_lengths(preds, targets, v_weights, a_weights, mask)?;
    let n = mask.iter().filter(|&&m| m).count();
    if n == 0 {
        return Err(Error::Degenerate("no unmasked frames in the loss".into()));
    }
    let inv = 1.0 / n as f64;
    let mut total = 0.0;
    let mut grad = vec![(0.0, 0.0); preds.len()];
    for i in 0..preds.len() {
        if !mask[i] {
            continue;
        }
        let ev = preds[i].valence - targets[i].valence;
        let ea = preds[i].arousal - targets[i].arousal;
        total += v_weights[i] * ev * ev + a_weights[i] * ea * ea;
        grad[i] = (v_weights[i] * ev * inv, a_weights[i] * ea * inv);
    }
    Ok((total * inv / 2.0, grad))
}

/// `1 - CCC(preds, targets)`, in `[0, 2]`.
pub fn ccc_loss(preds: &[f64], targets: &[f64]) -> Result<f64> {
    ccc_loss_grad(preds, targets).map(|(l, _)| l)
}

/// `1 - CCC` and its gradient with respect to `preds`.
pub fn ccc_loss_grad(preds: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if preds.len() != targets.len() {
        return Err(Error::Shape(format!("{} predictions for {} targets", preds.len(), targets.len())));
    }
    let c = ccc(preds, targets)?;
    if targets.iter().all(|&t| t == targets[0]) {
        return Err(Error::Degenerate("ccc loss needs non-constant targets".into()));
    }
    let g = ccc_grad_x(preds, targets)?;
    Ok((1.0 - c, g.into_iter().map(|v| -v).collect()))
}
