use super::forward::{backward, forward};
use super::params::Parameters;
use super::spec::NetworkSpec;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Scalar loss of a network output plus its gradient with respect to that output.
pub type LossFn<'a> = dyn Fn(&Tensor) -> (f64, Tensor) + 'a;

/// Compares backpropagated parameter gradients with central differences.
///
/// Returns the maximum over all parameter values of
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-12)`; values whose
/// analytic and numeric gradients are both exactly zero contribute 0.
pub fn gradient_check(
    spec: &NetworkSpec,
    params: &Parameters,
    loss: &LossFn<'_>,
    input: &Tensor,
    perturbation: f64,
) -> Result<f64> {
    let all: Vec<usize> = (0..params.num_values()).collect();
    gradient_check_subset(spec, params, loss, input, perturbation, &all)
}

/// [`gradient_check`] restricted to the given flat parameter indices (layer
/// order, weights before biases). Indices past the end are an error.
pub fn gradient_check_subset(
    spec: &NetworkSpec,
    params: &Parameters,
    loss: &LossFn<'_>,
    input: &Tensor,
    perturbation: f64,
    indices: &[usize],
) -> Result<f64> {
    let (out, cache) = forward(spec, params, input)?;
    let (_, upstream) = loss(&out);
    let (grads, _) = backward(spec, params, &cache, &upstream)?;
    let analytic = grads.flatten();

    let mut locations = Vec::with_capacity(analytic.len());
    for (li, layer) in params.layers().iter().enumerate() {
        locations.extend((0..layer.weight.len()).map(|j| (li, 0, j)));
        locations.extend((0..layer.bias.len()).map(|j| (li, 1, j)));
    }
    let mut probe = params.clone();
    let eval = |p: &Parameters| -> Result<f64> { Ok(loss(&forward(spec, p, input)?.0).0) };
    let mut worst = 0.0f64;
    for &flat in indices {
        let &(li, which, j) = locations
            .get(flat)
            .ok_or_else(|| Error::InvalidArgument(format!("parameter index {flat} out of range")))?;
        let orig = value(&probe, li, which, j);
        set(&mut probe, li, which, j, orig + perturbation);
        let plus = eval(&probe)?;
        set(&mut probe, li, which, j, orig - perturbation);
        let minus = eval(&probe)?;
        set(&mut probe, li, which, j, orig);
        let numeric = (plus - minus) / (2.0 * perturbation);
        let a = analytic[flat];
        let denom = a.abs().max(numeric.abs()).max(1e-12);
        let err = if a == 0.0 && numeric == 0.0 { 0.0 } else { (a - numeric).abs() / denom };
        worst = worst.max(err);
    }
    Ok(worst)
}

fn value(p: &Parameters, layer: usize, which: usize, j: usize) -> f64 {
    let l = &p.layers()[layer];
    if which == 0 { l.weight.data()[j] } else { l.bias.data()[j] }
}

fn set(p: &mut Parameters, layer: usize, which: usize, j: usize, v: f64) {
    let l = &mut p.layers_mut()[layer];
    if which == 0 {
        l.weight.data_mut()[j] = v;
    } else {
        l.bias.data_mut()[j] = v;
    }
}
