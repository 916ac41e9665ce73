//! Stateless activations and losses.

use ndarray::{Array1, Array2};

/// Numerically stable softmax of a vector.
pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Array1<f64> = logits.mapv(|x| (x - max).exp());
    let sum = exps.sum();
    exps / sum
}

/// Cross-entropy of a softmax distribution against a class index.
///
/// Returns the loss and the gradient with respect to the logits
/// (`p - onehot(target)`).
pub fn cross_entropy(logits: &Array1<f64>, target: usize) -> (f64, Array1<f64>) {
    let p = softmax(logits);
    let loss = -(p[target].max(1e-300)).ln();
    let mut dlogits = p;
    dlogits[target] -= 1.0;
    (loss, dlogits)
}

/// ReLU forward on a matrix.
pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// ReLU backward: masks the upstream gradient where the forward input was <= 0.
pub fn relu_backward(x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut dx = dy.clone();
    dx.zip_mut_with(x, |d, &v| {
        if v <= 0.0 {
            *d = 0.0;
        }
    });
    dx
}
