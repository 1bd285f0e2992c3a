use std::time::Instant;

use rand::seq::SliceRandom;

use super::loss::{ppo_loss, ppo_loss_and_grads, LossComponents, Minibatch};
use super::policy::{build_networks, ActorCritic, Policy};
use super::rollout::{collect_rollout, compute_returns_advantages, EpisodeRecord, RolloutBuffer, Runner};
use super::PpoConfig;
use crate::env::BridgeEnv;
use crate::error::{Error, Result};
use crate::io::CsvRow;
use crate::nn::{adam_step, AdamState, Parameters, Tensor};
use crate::rng::{stream, SimRng, TAG_POLICY, TAG_SHUFFLE};

pub const TRAIN_LOG_HEADER: &[&str] = &[
    "update",
    "episodes",
    "mean_ep_reward",
    "surrogate_loss",
    "value_loss",
    "entropy",
    "clip_fraction",
    "wallclock_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub update: usize,
    /// Episodes completed so far.
    pub episodes: usize,
    /// Mean reward of the episodes finished during this update's rollout
    /// (carried over from the previous row when none finished).
    pub mean_ep_reward: f64,
    pub surrogate_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub wallclock_s: f64,
}

impl CsvRow for TrainLogRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.update.to_string(),
            self.episodes.to_string(),
            format!("{:.6}", self.mean_ep_reward),
            format!("{:.6}", self.surrogate_loss),
            format!("{:.6}", self.value_loss),
            format!("{:.6}", self.entropy),
            format!("{:.6}", self.clip_fraction),
            format!("{:.3}", self.wallclock_s),
        ]
    }
}

/// Adam states for the two networks.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub actor: AdamState,
    pub critic: AdamState,
}

impl Optimizers {
    pub fn new(net: &ActorCritic, lr: f64) -> Self {
        Optimizers { actor: AdamState::new(&net.actor, lr), critic: AdamState::new(&net.critic, lr) }
    }
}

pub fn minibatch(buf: &RolloutBuffer, idx: &[usize]) -> Result<Minibatch> {
    let width = buf.transitions[idx[0]].obs.len();
    let mut obs = Vec::with_capacity(idx.len() * width);
    for &i in idx {
        obs.extend_from_slice(&buf.transitions[i].obs);
    }
    Ok(Minibatch {
        obs: Tensor::new(vec![idx.len(), width], obs)?,
        actions: idx.iter().map(|&i| buf.transitions[i].action).collect(),
        old_log_probs: idx.iter().map(|&i| buf.transitions[i].log_prob).collect(),
        advantages: idx.iter().map(|&i| buf.advantages[i]).collect(),
        returns: idx.iter().map(|&i| buf.returns[i]).collect(),
        masks: idx.iter().map(|&i| buf.transitions[i].mask).collect(),
    })
}

/// Clamps every gradient value to `[-bound, bound]`.
pub fn clip_gradients(grads: &mut Parameters, bound: f64) {
    for layer in grads.layers_mut() {
        for v in layer.weight.data_mut().iter_mut().chain(layer.bias.data_mut().iter_mut()) {
            *v = v.clamp(-bound, bound);
        }
    }
}

/// `epochs` passes of shuffled minibatches over a prepared buffer. The
/// behaviour log-probabilities stored in the buffer act as the old policy.
/// Returned components are evaluated on the whole buffer after the update.
pub fn update(
    buf: &RolloutBuffer,
    net: &mut ActorCritic,
    opt: &mut Optimizers,
    cfg: &PpoConfig,
    rng: &mut SimRng,
) -> Result<LossComponents> {
    if !buf.is_prepared() {
        return Err(Error::InvalidArgument("buffer has no returns/advantages".into()));
    }
    let mut order: Vec<usize> = (0..buf.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch_size) {
            let mb = minibatch(buf, chunk)?;
            let (_, mut ga, mut gc) = ppo_loss_and_grads(net, &mb, cfg)?;
            clip_gradients(&mut ga, cfg.grad_clip);
            clip_gradients(&mut gc, cfg.grad_clip);
            adam_step(&mut net.actor, &ga, &mut opt.actor)?;
            adam_step(&mut net.critic, &gc, &mut opt.critic)?;
        }
    }
    let all: Vec<usize> = (0..buf.len()).collect();
    ppo_loss(net, &minibatch(buf, &all)?, cfg)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ActorCritic,
    pub log: Vec<TrainLogRow>,
    pub episodes: Vec<EpisodeRecord>,
}

pub fn train(env: BridgeEnv, cfg: &PpoConfig) -> Result<TrainOutcome> {
    train_with(env, cfg, |_, _| Ok(()))
}

/// Alternates rollout collection and updates until `total_episodes`
/// episodes have finished. `on_update` sees each log row with the current
/// networks (for progress output or checkpoints).
pub fn train_with(
    env: BridgeEnv,
    cfg: &PpoConfig,
    mut on_update: impl FnMut(&TrainLogRow, &ActorCritic) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut net = build_networks(cfg)?;
    let mut opt = Optimizers::new(&net, cfg.learning_rate);
    let mut runner = Runner::new(env);
    let mut policy_rng = stream(cfg.seed, &[TAG_POLICY]);
    let mut shuffle_rng = stream(cfg.seed, &[TAG_SHUFFLE]);
    let mut log = Vec::new();
    let mut episodes: Vec<EpisodeRecord> = Vec::new();
    let mut mean_ep_reward = 0.0;
    while episodes.len() < cfg.total_episodes {
        let (mut buf, finished) =
            collect_rollout(&mut runner, &net, cfg.segment_len(), cfg.buffer_capacity, &mut policy_rng)?;
        if !finished.is_empty() {
            mean_ep_reward = finished.iter().map(|e| e.reward as f64).sum::<f64>() / finished.len() as f64;
        }
        episodes.extend(finished);
        compute_returns_advantages(&mut buf, &net, cfg.gamma, cfg.normalize_advantages)?;
        let c = update(&buf, &mut net, &mut opt, cfg, &mut shuffle_rng)?;
        let row = TrainLogRow {
            update: log.len() + 1,
            episodes: episodes.len(),
            mean_ep_reward,
            surrogate_loss: c.surrogate,
            value_loss: c.value,
            entropy: c.entropy,
            clip_fraction: c.clip_fraction,
            wallclock_s: if cfg.record_wallclock { start.elapsed().as_secs_f64() } else { 0.0 },
        };
        on_update(&row, &net)?;
        log.push(row);
    }
    Ok(TrainOutcome { net, log, episodes })
}

/// Runs `n_episodes` full episodes starting from the environment's episode 0.
pub fn evaluate(policy: Policy, mut env: BridgeEnv, n_episodes: usize, seed: u64) -> Result<Vec<EpisodeRecord>> {
    if n_episodes == 0 {
        return Err(Error::InvalidArgument("n_episodes must be at least 1".into()));
    }
    env.reset_to(0)?;
    let mut runner = Runner::new(env);
    let mut rng = stream(seed, &[TAG_POLICY]);
    let mut out = Vec::with_capacity(n_episodes);
    while out.len() < n_episodes {
        out.extend(runner.play(policy, 1, &mut rng)?);
    }
    Ok(out)
}

/// Aggregate view of evaluation episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_steps: f64,
    pub mean_sim_seconds: f64,
    pub cracks_detected: usize,
    pub total_cracks: usize,
    pub false_positives: u64,
    pub completion_rate: f64,
}

pub fn summarize(records: &[EpisodeRecord]) -> EvalSummary {
    let n = records.len().max(1) as f64;
    let rewards: Vec<f64> = records.iter().map(|r| r.reward as f64).collect();
    let (mean_reward, std_reward) = super::rollout::mean_std(&rewards);
    EvalSummary {
        episodes: records.len(),
        mean_reward,
        std_reward,
        mean_steps: records.iter().map(|r| r.steps as f64).sum::<f64>() / n,
        mean_sim_seconds: records.iter().map(|r| r.sim_seconds).sum::<f64>() / n,
        cracks_detected: records.iter().map(|r| r.cracks_detected).sum(),
        total_cracks: records.iter().map(|r| r.total_cracks).sum(),
        false_positives: records.iter().map(|r| r.false_positives as u64).sum(),
        completion_rate: records.iter().filter(|r| r.completed).count() as f64 / n,
    }
}
