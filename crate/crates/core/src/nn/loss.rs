use super::tensor::Tensor;

/// Mean cross-entropy of a batch of probability rows against class labels.
/// Returns the loss and its gradient with respect to the probabilities.
pub fn cross_entropy(probs: &Tensor, labels: &[usize]) -> (f64, Tensor) {
    let batch = probs.batch();
    let width = probs.len() / batch.max(1);
    let mut grad = Tensor::zeros(probs.shape());
    let mut loss = 0.0;
    for (n, &y) in labels.iter().enumerate() {
        let p = probs.data()[n * width + y].max(1e-300);
        loss -= p.ln();
        grad.data_mut()[n * width + y] = -1.0 / (p * batch as f64);
    }
    (loss / batch as f64, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_two_class_loss_is_ln2() {
        let p = Tensor::new(vec![2, 2], vec![0.5; 4]).unwrap();
        let (l, g) = cross_entropy(&p, &[0, 1]);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g.data(), &[-1.0, 0.0, 0.0, -1.0]);
    }
}
