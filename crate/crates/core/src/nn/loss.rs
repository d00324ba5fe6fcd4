use super::distribution::softmax;
use super::matrix::Matrix;
use super::network::ParamSet;
use crate::error::{Error, Result};

/// Mean negative log-likelihood of `targets` under the network's softmax
/// output, and its gradient with respect to every trainable parameter.
pub fn cross_entropy_grad(params: &ParamSet, inputs: &Matrix, targets: &[usize]) -> Result<(f64, ParamSet)> {
    let (loss, _, grads) = cross_entropy_with_accuracy(params, inputs, targets)?;
    Ok((loss, grads))
}

/// As [`cross_entropy_grad`], also returning the fraction of rows whose MAP
/// prediction equals the target.
pub fn cross_entropy_with_accuracy(
    params: &ParamSet,
    inputs: &Matrix,
    targets: &[usize],
) -> Result<(f64, f64, ParamSet)> {
    if targets.len() != inputs.rows() || targets.is_empty() {
        return Err(Error::Input(format!(
            "{} targets for {} inputs",
            targets.len(),
            inputs.rows()
        )));
    }
    let actions = params.output_dim();
    if let Some(bad) = targets.iter().find(|t| **t >= actions) {
        return Err(Error::Input(format!("action index {bad} out of range for {actions} actions")));
    }
    let trace = params.forward_trace(inputs)?;
    let logits = trace.output();
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut d_logits = Matrix::zeros(logits.rows(), actions);
    for (r, &t) in targets.iter().enumerate() {
        let dist = softmax(logits.row(r));
        let p = dist.probs();
        loss -= p[t].max(f64::MIN_POSITIVE).ln();
        if dist.argmax() == t {
            correct += 1;
        }
        let row = d_logits.row_mut(r);
        for (a, g) in row.iter_mut().enumerate() {
            *g = (p[a] - if a == t { 1.0 } else { 0.0 }) / n;
        }
    }
    let grads = params.backward(&trace, &d_logits);
    Ok((loss / n, correct as f64 / n, grads))
}
