use std::sync::Arc;

use deckscan::detect::OracleDetector;
use deckscan::env::{BridgeEnv, DetectorKind, ScenarioConfig};
use deckscan::nn::Parameters;
use deckscan::ppo::{
    build_networks, clipped_surrogate, collect_rollout, compute_returns_advantages, discounted_returns, masked_softmax,
    mean_std, minibatch, ppo_loss, ppo_loss_and_grads, update, ActorCritic, Minibatch, Optimizers, PpoConfig,
    RolloutBuffer, Runner,
};
use deckscan::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn small_cfg() -> PpoConfig {
    PpoConfig { rollout_len: 256, minibatch_size: 64, epochs: 2, hidden: (16, 16), seed: 3, ..Default::default() }
}

fn rollout(cfg: &PpoConfig, net: &ActorCritic, steps: usize) -> RolloutBuffer {
    let scenario = ScenarioConfig { n_cracks: 5, n_cars: 2, detector: DetectorKind::Oracle, seed: 9, ..Default::default() };
    let env = BridgeEnv::new(scenario, Arc::new(OracleDetector { flip: 0.0 })).unwrap();
    let mut runner = Runner::new(env);
    let (mut buf, _) = collect_rollout(&mut runner, net, steps, steps, &mut stream(cfg.seed, &[1])).unwrap();
    compute_returns_advantages(&mut buf, net, cfg.gamma, cfg.normalize_advantages).unwrap();
    buf
}

/// Shifts the stored behaviour log-probabilities so ratios spread over `[e^-s, e^s]`.
fn jitter_old_log_probs(mb: &mut Minibatch, spread: f64, seed: u64) {
    let mut rng = stream(seed, &[]);
    for lp in mb.old_log_probs.iter_mut() {
        *lp += rng.random_range(-spread..spread);
    }
}

fn param_mut(p: &mut Parameters, flat: usize) -> &mut f64 {
    let mut i = flat;
    for layer in p.layers_mut() {
        let w = layer.weight.len();
        if i < w {
            return &mut layer.weight.data_mut()[i];
        }
        i -= w;
        let b = layer.bias.len();
        if i < b {
            return &mut layer.bias.data_mut()[i];
        }
        i -= b;
    }
    panic!("parameter index out of range");
}

#[test]
fn loss_gradients_match_finite_differences() {
    let cfg = small_cfg();
    let net = build_networks(&cfg).unwrap();
    let buf = rollout(&cfg, &net, 64);
    let idx: Vec<usize> = (0..buf.len()).collect();
    let mut mb = minibatch(&buf, &idx).unwrap();
    // Ratios stay inside the clip range, away from the kinks of the surrogate.
    jitter_old_log_probs(&mut mb, 0.1, 5);
    let (_, ga, gc) = ppo_loss_and_grads(&net, &mb, &cfg).unwrap();
    let h = 1e-6;
    let mut rng = stream(6, &[]);
    let mut worst = 0.0f64;
    for which in 0..2 {
        let n = if which == 0 { net.actor.num_values() } else { net.critic.num_values() };
        let analytic = if which == 0 { ga.flatten() } else { gc.flatten() };
        for _ in 0..60 {
            let k = rng.random_range(0..n);
            let eval = |delta: f64| {
                let mut probe = net.clone();
                let p = if which == 0 { &mut probe.actor } else { &mut probe.critic };
                *param_mut(p, k) += delta;
                ppo_loss(&probe, &mb, &cfg).unwrap().total
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let err = (numeric - analytic[k]).abs() / (numeric.abs() + analytic[k].abs()).max(1e-4);
            worst = worst.max(err);
        }
    }
    assert!(worst < 1e-3, "worst relative gradient error {worst}");
}

#[test]
fn clip_fraction_counts_ratios_outside_the_range() {
    let cfg = small_cfg();
    let net = build_networks(&cfg).unwrap();
    let buf = rollout(&cfg, &net, 128);
    let idx: Vec<usize> = (0..buf.len()).collect();
    let mut mb = minibatch(&buf, &idx).unwrap();
    jitter_old_log_probs(&mut mb, 0.5, 7);
    let c = ppo_loss(&net, &mb, &cfg).unwrap();
    let mut outside = 0;
    let mut surrogate = 0.0;
    for i in 0..mb.len() {
        let p = masked_softmax(&net.logits(mb.obs.row(i)).unwrap(), &mb.masks[i]);
        let ratio = (p[mb.actions[i]].ln() - mb.old_log_probs[i]).exp();
        outside += usize::from((ratio - 1.0).abs() > cfg.clip);
        surrogate -= clipped_surrogate(ratio, mb.advantages[i], cfg.clip) / mb.len() as f64;
    }
    assert!(outside > 0 && outside < mb.len());
    assert_eq!(c.clip_fraction, outside as f64 / mb.len() as f64);
    assert!((c.surrogate - surrogate).abs() < 1e-12);
}

#[test]
fn fresh_rollout_has_unit_ratios_and_no_clipping() {
    let cfg = small_cfg();
    let net = build_networks(&cfg).unwrap();
    let buf = rollout(&cfg, &net, 128);
    let idx: Vec<usize> = (0..buf.len()).collect();
    let c = ppo_loss(&net, &minibatch(&buf, &idx).unwrap(), &cfg).unwrap();
    assert_eq!(c.clip_fraction, 0.0);
    // With ratio 1 the surrogate is the mean normalized advantage, which is zero.
    assert!(c.surrogate.abs() < 1e-9, "{}", c.surrogate);
    assert!(c.entropy > 0.0 && c.entropy <= (5f64).ln() + 1e-12);
}

#[test]
fn advantages_are_normalized() {
    let cfg = small_cfg();
    let net = build_networks(&cfg).unwrap();
    let buf = rollout(&cfg, &net, 256);
    let (m, s) = mean_std(&buf.advantages);
    assert!(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-6, "mean {m} std {s}");
    let raw = rollout(&PpoConfig { normalize_advantages: false, ..cfg }, &net, 256);
    for i in 0..raw.len() {
        assert!((raw.advantages[i] - (raw.returns[i] - raw.transitions[i].value)).abs() < 1e-12);
    }
    assert!((mean_std(&raw.advantages).0 - buf.advantage_stats.0).abs() < 1e-12);
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let cfg = PpoConfig { learning_rate: 0.0, ..small_cfg() };
    let mut net = build_networks(&cfg).unwrap();
    let before = net.clone();
    let buf = rollout(&cfg, &net, 256);
    let mut opt = Optimizers::new(&net, 0.0);
    update(&buf, &mut net, &mut opt, &cfg, &mut stream(1, &[])).unwrap();
    let bits = |p: &Parameters| p.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&net.actor), bits(&before.actor));
    assert_eq!(bits(&net.critic), bits(&before.critic));
}

#[test]
fn one_full_batch_epoch_lowers_the_loss() {
    let cfg = PpoConfig { minibatch_size: 256, epochs: 1, learning_rate: 1e-4, ..small_cfg() };
    let mut net = build_networks(&cfg).unwrap();
    let buf = rollout(&cfg, &net, 256);
    let all: Vec<usize> = (0..buf.len()).collect();
    let before = ppo_loss(&net, &minibatch(&buf, &all).unwrap(), &cfg).unwrap().total;
    let mut opt = Optimizers::new(&net, cfg.learning_rate);
    let after = update(&buf, &mut net, &mut opt, &cfg, &mut stream(2, &[])).unwrap().total;
    assert!(after < before, "loss {before} -> {after}");
}

proptest! {
    #[test]
    fn surrogate_is_the_pessimistic_bound(ratio in 0.0..3.0f64, adv in -5.0..5.0f64, eps in 0.01..0.9f64) {
        let l = clipped_surrogate(ratio, adv, eps);
        prop_assert!(l <= ratio * adv + 1e-12);
        prop_assert!(l <= ratio.clamp(1.0 - eps, 1.0 + eps) * adv + 1e-12);
        let expected = if adv >= 0.0 { adv * ratio.min(1.0 + eps) } else { adv * ratio.max(1.0 - eps) };
        prop_assert!((l - expected).abs() < 1e-12);
    }

    #[test]
    fn returns_follow_the_recursion(
        steps in proptest::collection::vec((-20.0..20.0f64, proptest::bool::weighted(0.1)), 1..200),
        gamma in 0.5..1.0f64,
        bootstrap in -50.0..50.0f64,
    ) {
        let (rewards, dones): (Vec<f64>, Vec<bool>) = steps.into_iter().unzip();
        let r = discounted_returns(&rewards, &dones, gamma, bootstrap);
        let n = r.len();
        let tail = if dones[n - 1] { 0.0 } else { bootstrap };
        prop_assert!((r[n - 1] - (rewards[n - 1] + gamma * tail)).abs() < 1e-9);
        for t in 0..n - 1 {
            let next = if dones[t] { 0.0 } else { r[t + 1] };
            prop_assert!((r[t] - (rewards[t] + gamma * next)).abs() < 1e-9);
        }
    }
}
