use super::params::Parameters;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam moments and hyperparameters for one [`Parameters`] value.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<(Tensor, Tensor)>,
    v: Vec<(Tensor, Tensor)>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &Parameters, lr: f64) -> Self {
        let zeros: Vec<(Tensor, Tensor)> = params
            .layers()
            .iter()
            .map(|l| (Tensor::zeros(l.weight.shape()), Tensor::zeros(l.bias.shape())))
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> impl Iterator<Item = f64> + '_ {
        self.m.iter().flat_map(|(w, b)| w.data().iter().chain(b.data()).copied())
    }

    pub fn second_moments(&self) -> impl Iterator<Item = f64> + '_ {
        self.v.iter().flat_map(|(w, b)| w.data().iter().chain(b.data()).copied())
    }
}

/// One bias-corrected Adam update, in place. Nothing is modified when the
/// gradients are rejected.
pub fn adam_step(params: &mut Parameters, grads: &Parameters, state: &mut AdamState) -> Result<()> {
    if grads.layers().len() != params.layers().len() || state.m.len() != params.layers().len() {
        return Err(Error::InvalidArgument("gradient/optimizer layer count mismatch".into()));
    }
    for (i, (g, p)) in grads.layers().iter().zip(params.layers()).enumerate() {
        if g.weight.shape() != p.weight.shape() || g.bias.shape() != p.bias.shape() {
            return Err(Error::Shape { layer: i, detail: "gradient shape differs from parameters".into() });
        }
        if !g.weight.all_finite() || !g.bias.all_finite() {
            return Err(Error::NonFiniteGradient { layer: i });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (i, layer) in params.layers_mut().iter_mut().enumerate() {
        let g = &grads.layers()[i];
        let (mw, mb) = &mut state.m[i];
        let (vw, vb) = &mut state.v[i];
        let pairs = [
            (layer.weight.data_mut(), g.weight.data(), mw.data_mut(), vw.data_mut()),
            (layer.bias.data_mut(), g.bias.data(), mb.data_mut(), vb.data_mut()),
        ];
        for (p, g, m, v) in pairs {
            for j in 0..p.len() {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Layer, NetworkSpec};

    fn scalar() -> (NetworkSpec, Parameters) {
        let spec = NetworkSpec::new(vec![1], vec![Layer::Dense { inputs: 1, outputs: 1 }]).unwrap();
        let mut p = Parameters::zeros(&spec);
        p.layers_mut()[0].weight.data_mut()[0] = 1.0;
        (spec, p)
    }

    fn grad_of(spec: &NetworkSpec, w: f64) -> Parameters {
        let mut g = Parameters::zeros(spec);
        g.layers_mut()[0].weight.data_mut()[0] = w;
        g
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let (spec, mut p) = scalar();
        let mut st = AdamState::new(&p, 0.01);
        adam_step(&mut p, &grad_of(&spec, 1.0), &mut st).unwrap();
        let w = p.layers()[0].weight.data()[0];
        assert!((1.0 - w - 0.01).abs() < 1e-6, "{w}");
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn zero_gradient_from_fresh_state_is_fixed_point() {
        let (spec, mut p) = scalar();
        let before = p.clone();
        let mut st = AdamState::new(&p, 0.01);
        for _ in 0..5 {
            adam_step(&mut p, &grad_of(&spec, 0.0), &mut st).unwrap();
        }
        assert_eq!(p, before);
        assert!(st.first_moments().all(|m| m == 0.0));
    }

    #[test]
    fn moments_decay_under_zero_gradient() {
        let (spec, mut p) = scalar();
        let mut st = AdamState::new(&p, 0.01);
        adam_step(&mut p, &grad_of(&spec, 2.0), &mut st).unwrap();
        let m0: f64 = st.first_moments().map(f64::abs).sum();
        let v0: f64 = st.second_moments().sum();
        adam_step(&mut p, &grad_of(&spec, 0.0), &mut st).unwrap();
        let m1: f64 = st.first_moments().map(f64::abs).sum();
        let v1: f64 = st.second_moments().sum();
        assert!(m1 < m0 && v1 < v0);
    }

    #[test]
    fn descends_quadratic() {
        let (spec, mut p) = scalar();
        let mut st = AdamState::new(&p, 0.01);
        let mut reached = None;
        for k in 0..500 {
            let theta = p.layers()[0].weight.data()[0];
            if theta.abs() < 0.1 {
                reached = Some(k);
                break;
            }
            adam_step(&mut p, &grad_of(&spec, 2.0 * theta), &mut st).unwrap();
        }
        assert!(reached.is_some());
    }

    #[test]
    fn non_finite_gradient_rejected_without_side_effects() {
        let spec = NetworkSpec::mlp(&[2, 3, 1], None).unwrap();
        let mut p = Parameters::zeros(&spec);
        let before = p.clone();
        let mut st = AdamState::new(&p, 0.01);
        let mut g = Parameters::zeros(&spec);
        g.layers_mut()[2].bias.data_mut()[0] = f64::NAN;
        let err = adam_step(&mut p, &g, &mut st).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { layer: 2 }));
        assert_eq!(p, before);
        assert_eq!(st.step_count(), 0);
    }
}
