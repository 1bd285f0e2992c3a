use rand::Rng;

use super::policy::{masked_softmax, sample_index, ActionMask, ActorCritic, Policy};
use crate::env::{Action, BridgeEnv, StepOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    /// Log-probability under the behaviour policy.
    pub log_prob: f64,
    /// Critic estimate of the pre-action state.
    pub value: f64,
    pub mask: ActionMask,
}

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    /// Discounted return-to-go; the value target.
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
    /// Mean and standard deviation of the raw advantages.
    pub advantage_stats: (f64, f64),
    capacity: usize,
}

impl RolloutBuffer {
    pub fn with_capacity(capacity: usize) -> Self {
        RolloutBuffer { transitions: Vec::with_capacity(capacity), capacity, ..Default::default() }
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if self.transitions.len() >= self.capacity {
            return Err(Error::InvalidArgument(format!("rollout buffer full ({})", self.capacity)));
        }
        self.transitions.push(t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_prepared(&self) -> bool {
        !self.is_empty() && self.returns.len() == self.len() && self.advantages.len() == self.len()
    }
}

/// Summary of one finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub reward: i64,
    pub steps: u32,
    /// Steps times the tick plus scans times the detector latency.
    pub sim_seconds: f64,
    pub scans: u32,
    pub pauses: u32,
    pub revisits: u32,
    pub cracks_detected: usize,
    pub total_cracks: usize,
    pub false_positives: u32,
    /// Every cell was surveyed.
    pub completed: bool,
    /// A pause was taken with the pause counter at its limit (must stay false).
    pub pause_violation: bool,
}

#[derive(Debug, Clone, Default)]
struct Running {
    reward: i64,
    scans: u32,
    pauses: u32,
    revisits: u32,
    pause_violation: bool,
}

/// Drives one environment across episode boundaries and keeps per-episode totals.
pub struct Runner {
    pub env: BridgeEnv,
    obs: Vec<f64>,
    running: Running,
    /// Largest pause counter seen, for invariant checks.
    pub max_t_pause: u32,
}

impl Runner {
    pub fn new(env: BridgeEnv) -> Self {
        let obs = env.observation();
        Runner { env, obs, running: Running::default(), max_t_pause: 0 }
    }

    pub fn observation(&self) -> &[f64] {
        &self.obs
    }

    /// Applies `action`; on episode end returns its record and starts the next episode.
    pub fn step(&mut self, action: Action) -> Result<(StepOutcome, Vec<f64>, Option<EpisodeRecord>)> {
        let limit = self.env.config().pause_limit;
        if action == Action::Pause && self.env.state().t_pause >= limit {
            self.running.pause_violation = true;
        }
        let out = self.env.step(action)?;
        let r = &mut self.running;
        r.reward += out.reward.total;
        r.scans += u32::from(out.info.scanned);
        r.pauses += u32::from(action == Action::Pause);
        r.revisits += u32::from(out.reward.r_v != 0);
        self.max_t_pause = self.max_t_pause.max(self.env.state().t_pause);
        let next = self.env.observation();
        let mut record = None;
        if out.done {
            record = Some(self.finish());
            self.obs = self.env.reset()?;
        } else {
            self.obs = next.clone();
        }
        Ok((out, next, record))
    }

    fn finish(&mut self) -> EpisodeRecord {
        let r = std::mem::take(&mut self.running);
        let (cfg, state, world) = (self.env.config(), self.env.state(), self.env.world());
        EpisodeRecord {
            episode: self.env.episode(),
            reward: r.reward,
            steps: state.step,
            sim_seconds: state.step as f64 * cfg.tick_s() + r.scans as f64 * cfg.latency_s(),
            scans: r.scans,
            pauses: r.pauses,
            revisits: r.revisits,
            cracks_detected: state.detected.len(),
            total_cracks: world.n_true_cracks(),
            false_positives: state.false_positives,
            completed: state.fully_covered(),
            pause_violation: r.pause_violation,
        }
    }

    /// Plays `policy` for `steps` steps, returning finished episodes.
    pub fn play<R: Rng + ?Sized>(&mut self, policy: Policy, steps: usize, rng: &mut R) -> Result<Vec<EpisodeRecord>> {
        let mut done = Vec::new();
        for _ in 0..steps {
            let a = policy.choose(&self.obs, &self.env.action_mask(), rng)?;
            if let (_, _, Some(rec)) = self.step(a)? {
                done.push(rec);
            }
        }
        Ok(done)
    }
}

/// Follows the actor for `steps` steps, recording log-probabilities and
/// values at sampling time. Pause is masked once the pause budget is spent.
pub fn collect_rollout<R: Rng + ?Sized>(
    runner: &mut Runner,
    net: &ActorCritic,
    steps: usize,
    capacity: usize,
    rng: &mut R,
) -> Result<(RolloutBuffer, Vec<EpisodeRecord>)> {
    let mut buf = RolloutBuffer::with_capacity(capacity);
    let mut finished = Vec::new();
    for _ in 0..steps {
        let obs = runner.observation().to_vec();
        let mask = runner.env.action_mask();
        let probs = masked_softmax(&net.logits(&obs)?, &mask);
        let a = sample_index(&probs, rng);
        let value = net.value(&obs)?;
        let action = Action::from_index(a).expect("index below Action::COUNT");
        let (out, next_obs, record) = runner.step(action)?;
        buf.push(Transition {
            obs,
            action: a,
            reward: out.reward.total as f64,
            next_obs,
            done: out.done,
            log_prob: probs[a].ln(),
            value,
            mask,
        })?;
        finished.extend(record);
    }
    Ok((buf, finished))
}

/// Discounted reward-to-go, restarting after each `done` and seeded with
/// `bootstrap` past the last step.
pub fn discounted_returns(rewards: &[f64], dones: &[bool], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut next = bootstrap;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            next = 0.0;
        }
        next = rewards[t] + gamma * next;
        out[t] = next;
    }
    out
}

/// Fills returns (bootstrapped with the critic when the buffer ends
/// mid-episode) and advantages `R_t - V(s_t)`, optionally normalized.
pub fn compute_returns_advantages(buf: &mut RolloutBuffer, net: &ActorCritic, gamma: f64, normalize: bool) -> Result<()> {
    let Some(last) = buf.transitions.last() else {
        return Err(Error::InvalidArgument("empty rollout buffer".into()));
    };
    let bootstrap = if last.done { 0.0 } else { net.value(&last.next_obs)? };
    let rewards: Vec<f64> = buf.transitions.iter().map(|t| t.reward).collect();
    let dones: Vec<bool> = buf.transitions.iter().map(|t| t.done).collect();
    buf.returns = discounted_returns(&rewards, &dones, gamma, bootstrap);
    let raw: Vec<f64> = buf.returns.iter().zip(&buf.transitions).map(|(r, t)| r - t.value).collect();
    let (mean, std) = mean_std(&raw);
    buf.advantage_stats = (mean, std);
    buf.advantages = if normalize {
        raw.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
    } else {
        raw
    };
    Ok(())
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_returns() {
        let r = discounted_returns(&[1.0, 1.0, 1.0], &[false, false, true], 0.99, 123.0);
        assert!((r[0] - 2.9701).abs() < 1e-12);
        assert!((r[1] - 1.99).abs() < 1e-12);
        assert_eq!(r[2], 1.0);
        assert_eq!(discounted_returns(&[3.0, -2.0], &[false, true], 0.0, 0.0), vec![3.0, -2.0]);
    }

    #[test]
    fn bootstrap_and_episode_boundaries() {
        let r = discounted_returns(&[1.0, 2.0, 3.0], &[true, false, false], 0.5, 10.0);
        assert_eq!(r, vec![1.0, 2.0 + 0.5 * (3.0 + 5.0), 3.0 + 5.0]);
    }

    #[test]
    fn buffer_capacity_is_enforced() {
        let t = Transition {
            obs: vec![],
            action: 0,
            reward: 0.0,
            next_obs: vec![],
            done: false,
            log_prob: 0.0,
            value: 0.0,
            mask: [true; 5],
        };
        let mut b = RolloutBuffer::with_capacity(1);
        b.push(t.clone()).unwrap();
        assert!(b.push(t).is_err());
    }
}
