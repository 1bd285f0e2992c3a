use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::env::{parse_kv, DetectorKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Ppo,
    Random,
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppo" => Ok(PolicyKind::Ppo),
            "random" => Ok(PolicyKind::Random),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Ppo => "ppo",
            PolicyKind::Random => "random",
        })
    }
}

/// Generate a patch corpus and train the classifier before running.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierTraining {
    pub patches: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ClassifierTraining {
    fn default() -> Self {
        ClassifierTraining { patches: 2000, epochs: 20, seed: 7 }
    }
}

/// Where the CNN detector's weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    None,
    File(PathBuf),
    Train(ClassifierTraining),
}

/// One scenario run: environment, detector, policy, seeds and output directory.
/// The detector kind is the scenario's `detector` key.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub policy: PolicyKind,
    /// Seeds `seed .. seed + n_seeds` are run; `seed` is the scenario seed.
    pub n_seeds: usize,
    pub ppo: PpoConfig,
    pub eval_episodes: usize,
    /// Sample from the actor during evaluation instead of taking the argmax.
    pub eval_stochastic: bool,
    pub model: ModelSource,
    pub out_dir: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            scenario: ScenarioConfig::default(),
            policy: PolicyKind::Ppo,
            n_seeds: 1,
            ppo: PpoConfig::default(),
            eval_episodes: 100,
            eval_stochastic: true,
            model: ModelSource::None,
            out_dir: PathBuf::from("runs"),
        }
    }
}

/// Harness keys accepted next to the scenario keys. PPO settings use a
/// `ppo.` prefix.
pub const HARNESS_KEYS: &[&str] = &[
    "policy",
    "n_seeds",
    "episodes",
    "eval_episodes",
    "eval_stochastic",
    "model",
    "classifier_patches",
    "classifier_epochs",
    "classifier_seed",
];

pub const PPO_KEYS: &[&str] = &[
    "ppo.rollout_len",
    "ppo.minibatch_size",
    "ppo.epochs",
    "ppo.learning_rate",
    "ppo.gamma",
    "ppo.clip",
    "ppo.value_coef",
    "ppo.entropy_coef",
    "ppo.grad_clip",
    "ppo.update_interval",
    "ppo.buffer_capacity",
    "ppo.hidden",
    "ppo.normalize_advantages",
    "ppo.record_wallclock",
];

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_hidden(v: &str) -> Option<(usize, usize)> {
    let (a, b) = v.split_once('x')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl ExperimentSpec {
    /// Parses a config file: scenario keys plus harness and `ppo.` keys.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = parse_kv(text)?;
        let scenario = ScenarioConfig::from_map(&mut map)?;
        let mut spec = ExperimentSpec { scenario, ..Default::default() };
        spec.apply(&mut map)?;
        if let Some(key) = map.keys().next() {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        spec.validate()?;
        Ok(spec)
    }

    fn apply(&mut self, map: &mut BTreeMap<String, String>) -> Result<()> {
        let mut training = ClassifierTraining::default();
        let mut model = None;
        let keys: Vec<String> = map.keys().cloned().collect();
        for key in keys {
            if !HARNESS_KEYS.contains(&key.as_str()) && !PPO_KEYS.contains(&key.as_str()) {
                continue;
            }
            let v = map.remove(&key).unwrap();
            let bad = || Error::Config(format!("bad value `{v}` for `{key}`"));
            let p = &mut self.ppo;
            match key.as_str() {
                "policy" => self.policy = v.parse()?,
                "n_seeds" => self.n_seeds = v.parse().map_err(|_| bad())?,
                "episodes" => p.total_episodes = v.parse().map_err(|_| bad())?,
                "eval_episodes" => self.eval_episodes = v.parse().map_err(|_| bad())?,
                "eval_stochastic" => self.eval_stochastic = parse_bool(&v).ok_or_else(bad)?,
                "model" => model = Some(v.clone()),
                "classifier_patches" => training.patches = v.parse().map_err(|_| bad())?,
                "classifier_epochs" => training.epochs = v.parse().map_err(|_| bad())?,
                "classifier_seed" => training.seed = v.parse().map_err(|_| bad())?,
                "ppo.rollout_len" => p.rollout_len = v.parse().map_err(|_| bad())?,
                "ppo.minibatch_size" => p.minibatch_size = v.parse().map_err(|_| bad())?,
                "ppo.epochs" => p.epochs = v.parse().map_err(|_| bad())?,
                "ppo.learning_rate" => p.learning_rate = v.parse().map_err(|_| bad())?,
                "ppo.gamma" => p.gamma = v.parse().map_err(|_| bad())?,
                "ppo.clip" => p.clip = v.parse().map_err(|_| bad())?,
                "ppo.value_coef" => p.value_coef = v.parse().map_err(|_| bad())?,
                "ppo.entropy_coef" => p.entropy_coef = v.parse().map_err(|_| bad())?,
                "ppo.grad_clip" => p.grad_clip = v.parse().map_err(|_| bad())?,
                "ppo.update_interval" => {
                    p.update_interval = match v.as_str() {
                        "none" => None,
                        s => Some(s.parse().map_err(|_| bad())?),
                    }
                }
                "ppo.buffer_capacity" => p.buffer_capacity = v.parse().map_err(|_| bad())?,
                "ppo.hidden" => p.hidden = parse_hidden(&v).ok_or_else(bad)?,
                "ppo.normalize_advantages" => p.normalize_advantages = parse_bool(&v).ok_or_else(bad)?,
                "ppo.record_wallclock" => p.record_wallclock = parse_bool(&v).ok_or_else(bad)?,
                _ => unreachable!(),
            }
        }
        self.model = match model.as_deref() {
            None | Some("none") => ModelSource::None,
            Some("train") => ModelSource::Train(training),
            Some(path) => ModelSource::File(PathBuf::from(path)),
        };
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be at least 1".into()));
        }
        if self.policy == PolicyKind::Ppo {
            self.ppo.validate()?;
        }
        if self.scenario.detector == DetectorKind::Cnn && self.model == ModelSource::None {
            return Err(Error::Config(
                "detector cnn needs model=<path> or model=train".into(),
            ));
        }
        if let ModelSource::Train(t) = &self.model {
            if t.patches < 2 || t.epochs == 0 {
                return Err(Error::Config("classifier training needs >= 2 patches and >= 1 epoch".into()));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.scenario.seed + i).collect()
    }

    /// Flat `key=value` text covering every resolved setting and the seeds.
    pub fn manifest(&self) -> String {
        let mut out = self.scenario.to_kv();
        let p = &self.ppo;
        let (model, training) = match &self.model {
            ModelSource::None => ("none".to_string(), None),
            ModelSource::File(path) => (path.display().to_string(), None),
            ModelSource::Train(t) => ("train".to_string(), Some(t)),
        };
        let mut kv = vec![
            ("policy", self.policy.to_string()),
            ("n_seeds", self.n_seeds.to_string()),
            ("episodes", p.total_episodes.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("eval_stochastic", self.eval_stochastic.to_string()),
            ("model", model),
        ];
        if let Some(t) = training {
            kv.push(("classifier_patches", t.patches.to_string()));
            kv.push(("classifier_epochs", t.epochs.to_string()));
            kv.push(("classifier_seed", t.seed.to_string()));
        }
        kv.extend([
            ("ppo.rollout_len", p.rollout_len.to_string()),
            ("ppo.minibatch_size", p.minibatch_size.to_string()),
            ("ppo.epochs", p.epochs.to_string()),
            ("ppo.learning_rate", p.learning_rate.to_string()),
            ("ppo.gamma", p.gamma.to_string()),
            ("ppo.clip", p.clip.to_string()),
            ("ppo.value_coef", p.value_coef.to_string()),
            ("ppo.entropy_coef", p.entropy_coef.to_string()),
            ("ppo.grad_clip", p.grad_clip.to_string()),
            ("ppo.update_interval", p.update_interval.map_or("none".into(), |k| k.to_string())),
            ("ppo.buffer_capacity", p.buffer_capacity.to_string()),
            ("ppo.hidden", format!("{}x{}", p.hidden.0, p.hidden.1)),
            ("ppo.normalize_advantages", p.normalize_advantages.to_string()),
            ("ppo.record_wallclock", p.record_wallclock.to_string()),
        ]);
        for (k, v) in kv {
            out.push_str(&format!("{k}={v}\n"));
        }
        let seeds: Vec<String> = self.seeds().iter().map(u64::to_string).collect();
        out.push_str(&format!("seeds={}\n", seeds.join(",")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_harness_and_ppo_keys() {
        let s = ExperimentSpec::parse(
            "n_cracks=10\nn_cars=2\ndetector=oracle\npolicy=random\nn_seeds=3\nepisodes=40\nppo.hidden=32x16\nppo.update_interval=512\n",
        )
        .unwrap();
        assert_eq!(s.scenario.n_cracks, 10);
        assert_eq!(s.policy, PolicyKind::Random);
        assert_eq!(s.n_seeds, 3);
        assert_eq!(s.ppo.total_episodes, 40);
        assert_eq!(s.ppo.hidden, (32, 16));
        assert_eq!(s.ppo.update_interval, Some(512));
        assert_eq!(s.seeds(), vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::parse("n_seeds=0\n").is_err());
        assert!(ExperimentSpec::parse("detector=cnn\n").is_err());
        assert!(ExperimentSpec::parse("policy=greedy\n").is_err());
        assert!(ExperimentSpec::parse("ppo.bogus=1\n").is_err());
        let s = ExperimentSpec::parse("detector=cnn\nmodel=train\nclassifier_epochs=3\n").unwrap();
        assert_eq!(s.model, ModelSource::Train(ClassifierTraining { epochs: 3, ..Default::default() }));
    }

    #[test]
    fn manifest_parses_back() {
        let s = ExperimentSpec::parse("n_cars=0\ndetector=oracle\nn_seeds=2\nppo.hidden=8x8\n").unwrap();
        let text: String = s.manifest().lines().filter(|l| !l.starts_with("seeds=")).map(|l| format!("{l}\n")).collect();
        let back = ExperimentSpec::parse(&text).unwrap();
        assert_eq!(back, s);
    }
}
