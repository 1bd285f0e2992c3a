use super::policy::{masked_softmax, ActionMask, ActorCritic};
use super::PpoConfig;
use crate::env::Action;
use crate::error::{Error, Result};
use crate::nn::{backward, forward, Parameters, Tensor};

/// `min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

/// Prepared samples for one loss evaluation.
#[derive(Debug, Clone)]
pub struct Minibatch {
    /// `[batch, obs_len]`.
    pub obs: Tensor,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub masks: Vec<ActionMask>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossComponents {
    pub total: f64,
    /// `-mean(L_clip)`.
    pub surrogate: f64,
    /// `mean((V - R)^2)`.
    pub value: f64,
    /// Mean policy entropy.
    pub entropy: f64,
    /// Share of samples whose ratio left `[1 - eps, 1 + eps]`.
    pub clip_fraction: f64,
}

/// `-mean(L_clip) + c1 * mean(L_vf) - c2 * mean(H)`.
pub fn ppo_loss(net: &ActorCritic, batch: &Minibatch, cfg: &PpoConfig) -> Result<LossComponents> {
    Ok(loss_impl(net, batch, cfg, false)?.0)
}

/// Loss plus gradients for the actor (through the surrogate and entropy)
/// and the critic (through the value term).
pub fn ppo_loss_and_grads(
    net: &ActorCritic,
    batch: &Minibatch,
    cfg: &PpoConfig,
) -> Result<(LossComponents, Parameters, Parameters)> {
    let (c, grads) = loss_impl(net, batch, cfg, true)?;
    let (ga, gc) = grads.expect("gradients requested");
    Ok((c, ga, gc))
}

type Grads = Option<(Parameters, Parameters)>;

fn loss_impl(net: &ActorCritic, batch: &Minibatch, cfg: &PpoConfig, want_grads: bool) -> Result<(LossComponents, Grads)> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty minibatch".into()));
    }
    let nf = n as f64;
    let k = Action::COUNT;
    let (logits, actor_cache) = forward(&net.actor_spec, &net.actor, &batch.obs)?;
    let (values, critic_cache) = forward(&net.critic_spec, &net.critic, &batch.obs)?;

    let mut c = LossComponents::default();
    let mut d_logits = vec![0.0; n * k];
    let mut d_values = vec![0.0; n];
    let mut clipped = 0usize;
    for i in 0..n {
        let p = masked_softmax(&logits.data()[i * k..(i + 1) * k], &batch.masks[i]);
        let a = batch.actions[i];
        let adv = batch.advantages[i];
        let ratio = (p[a].ln() - batch.old_log_probs[i]).exp();
        let unclipped = ratio * adv;
        let surr = clipped_surrogate(ratio, adv, cfg.clip);
        if (ratio - 1.0).abs() > cfg.clip {
            clipped += 1;
        }
        let h: f64 = -p.iter().filter(|&&q| q > 0.0).map(|&q| q * q.ln()).sum::<f64>();
        let v = values.data()[i];
        let err = v - batch.returns[i];
        c.surrogate -= surr / nf;
        c.value += err * err / nf;
        c.entropy += h / nf;

        // d(-surr)/dz_j = -g (1[j=a] - p_j), with g = rho*A when the unclipped term is the minimum.
        let g = if unclipped <= surr { unclipped } else { 0.0 };
        for j in 0..k {
            if p[j] == 0.0 {
                continue;
            }
            let onehot = if j == a { 1.0 } else { 0.0 };
            let d_surr = -g * (onehot - p[j]);
            // d(-c2 H)/dz_j = c2 p_j (ln p_j + H).
            let d_ent = cfg.entropy_coef * p[j] * (p[j].ln() + h);
            d_logits[i * k + j] = (d_surr + d_ent) / nf;
        }
        d_values[i] = cfg.value_coef * 2.0 * err / nf;
    }
    c.clip_fraction = clipped as f64 / nf;
    c.total = c.surrogate + cfg.value_coef * c.value - cfg.entropy_coef * c.entropy;
    if !c.total.is_finite() {
        return Err(Error::NonFiniteLoss(format!(
            "surrogate {} value {} entropy {}",
            c.surrogate, c.value, c.entropy
        )));
    }
    if !want_grads {
        return Ok((c, None));
    }
    let d_logits = Tensor::new(vec![n, k], d_logits)?;
    let d_values = Tensor::new(vec![n, 1], d_values)?;
    let (ga, _) = backward(&net.actor_spec, &net.actor, &actor_cache, &d_logits)?;
    let (gc, _) = backward(&net.critic_spec, &net.critic, &critic_cache, &d_values)?;
    Ok((c, Some((ga, gc))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_worked_cases() {
        assert_eq!(clipped_surrogate(1.0, 0.7, 0.2), 0.7);
        assert!((clipped_surrogate(1.5, 1.0, 0.2) - 1.2).abs() < 1e-15);
        // Below the clip range with a negative advantage the clipped term is the minimum.
        assert!((clipped_surrogate(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
        // Above it, the unclipped term is.
        assert_eq!(clipped_surrogate(1.5, -1.0, 0.2), -1.5);
    }
}
