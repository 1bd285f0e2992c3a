use std::path::Path;

use rand::Rng;

use crate::env::{Action, OBS_LEN};
use crate::error::Result;
use crate::nn::{forward, stored_spec_description, NetworkSpec, Parameters, Tensor};
use crate::rng::stream;
use crate::rng::TAG_INIT;

use super::PpoConfig;

pub type ActionMask = [bool; Action::COUNT];

/// Actor (observation -> action logits) and critic (observation -> value).
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub actor_spec: NetworkSpec,
    pub actor: Parameters,
    pub critic_spec: NetworkSpec,
    pub critic: Parameters,
}

pub fn actor_spec(hidden: (usize, usize)) -> Result<NetworkSpec> {
    NetworkSpec::mlp(&[OBS_LEN, hidden.0, hidden.1, Action::COUNT], None)
}

pub fn critic_spec(hidden: (usize, usize)) -> Result<NetworkSpec> {
    NetworkSpec::mlp(&[OBS_LEN, hidden.0, hidden.1, 1], None)
}

/// Two ReLU hidden layers each; seeded Glorot initialization.
pub fn build_networks(cfg: &PpoConfig) -> Result<ActorCritic> {
    let actor_spec = actor_spec(cfg.hidden)?;
    let critic_spec = critic_spec(cfg.hidden)?;
    let actor = Parameters::init(&actor_spec, &mut stream(cfg.seed, &[TAG_INIT, 1]));
    let critic = Parameters::init(&critic_spec, &mut stream(cfg.seed, &[TAG_INIT, 2]));
    Ok(ActorCritic { actor_spec, actor, critic_spec, critic })
}

impl ActorCritic {
    pub fn logits(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor::new(vec![1, obs.len()], obs.to_vec())?;
        Ok(forward(&self.actor_spec, &self.actor, &x)?.0.into_data())
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        let x = Tensor::new(vec![1, obs.len()], obs.to_vec())?;
        Ok(forward(&self.critic_spec, &self.critic, &x)?.0.data()[0])
    }

    /// Writes `actor.bin` and `critic.bin` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.actor.save(&self.actor_spec, &dir.join("actor.bin"))?;
        self.critic.save(&self.critic_spec, &dir.join("critic.bin"))
    }

    /// Reads a checkpoint written by [`ActorCritic::save`]; the network
    /// shapes come from the files.
    pub fn load(dir: &Path) -> Result<Self> {
        let (a, c) = (dir.join("actor.bin"), dir.join("critic.bin"));
        let actor_spec: NetworkSpec = stored_spec_description(&a)?.parse()?;
        let critic_spec: NetworkSpec = stored_spec_description(&c)?.parse()?;
        let actor = Parameters::load(&actor_spec, &a)?;
        let critic = Parameters::load(&critic_spec, &c)?;
        Ok(ActorCritic { actor_spec, actor, critic_spec, critic })
    }
}

/// Softmax over allowed actions; masked actions get probability 0.
pub fn masked_softmax(logits: &[f64], mask: &ActionMask) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&z, &m)| if m { (z - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Inverse-CDF draw from `probs`; never returns a zero-probability index.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// First allowed action with the highest logit.
pub fn argmax_masked(logits: &[f64], mask: &ActionMask) -> usize {
    let mut best = None;
    for (i, (&z, &m)) in logits.iter().zip(mask).enumerate() {
        if m && best.is_none_or(|(_, b)| z > b) {
            best = Some((i, z));
        }
    }
    best.map_or(0, |(i, _)| i)
}

/// Action source for rollouts and evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    /// Samples from (or, when `deterministic`, takes the argmax of) the actor.
    Actor { net: &'a ActorCritic, deterministic: bool },
    /// Uniform over allowed actions.
    Random,
}

impl Policy<'_> {
    pub fn choose<R: Rng + ?Sized>(&self, obs: &[f64], mask: &ActionMask, rng: &mut R) -> Result<Action> {
        let idx = match self {
            Policy::Actor { net, deterministic } => {
                let logits = net.logits(obs)?;
                if *deterministic {
                    argmax_masked(&logits, mask)
                } else {
                    sample_index(&masked_softmax(&logits, mask), rng)
                }
            }
            Policy::Random => {
                let allowed: Vec<usize> = (0..Action::COUNT).filter(|&i| mask[i]).collect();
                allowed[rng.random_range(0..allowed.len())]
            }
        };
        Ok(Action::from_index(idx).expect("index below Action::COUNT"))
    }
}
