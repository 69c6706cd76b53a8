use crate::error::{Error, Result};

use super::{Real, Tensor};

/// Row-wise softmax of an n×d matrix stored row-major.
pub fn softmax<T: Real>(logits: &[T], d: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(d) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let sum: T = exps.iter().copied().sum();
        out.extend(exps.into_iter().map(|e| e / sum));
    }
    out
}

/// Mean softmax cross-entropy over the batch. `logits` is n×d (any trailing
/// layout with d = c·h·w); `labels` are 1-based class indices.
/// Returns the loss and d(loss)/d(logits) = (softmax − onehot)/n.
pub fn softmax_xent<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let n = logits.n();
    if n == 0 || labels.len() != n {
        return Err(Error::shape("softmax_xent", logits.shape(), labels.len()));
    }
    let d = logits.len() / n;
    if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > d) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 1..={d}")));
    }
    let x = logits.data();
    let probs = softmax(x, d);
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mut loss = T::zero();
    let mut grad = probs.clone();
    for (i, &label) in labels.iter().enumerate() {
        let row = &x[i * d..(i + 1) * d];
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        loss = loss + (lse - row[label - 1]);
        grad[i * d + label - 1] = grad[i * d + label - 1] - T::one();
    }
    for g in &mut grad {
        *g = *g * inv_n;
    }
    Ok((loss * inv_n, Tensor::from_vec(logits.shape(), grad)?))
}

/// Mean squared error over all elements and its gradient 2(p − t)/N.
pub fn mse_loss<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("mse_loss", pred.shape(), target.shape()));
    }
    if pred.is_empty() {
        return Err(Error::Empty("mse_loss"));
    }
    let inv = T::one() / T::from_usize(pred.len()).unwrap();
    let two = T::of(2.0);
    let mut loss = T::zero();
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let e = p - t;
            loss = loss + e * e;
            two * e * inv
        })
        .collect();
    Ok((loss * inv, Tensor::from_vec(pred.shape(), grad)?))
}
