use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    /// Steps collected per rollout (tau).
    pub rollout_len: usize,
    pub minibatch_size: usize,
    /// Passes over the rollout per update.
    pub epochs: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    /// Ratio clip range (epsilon).
    pub clip: f64,
    /// Value-loss coefficient (c1).
    pub value_coef: f64,
    /// Entropy bonus coefficient (c2).
    pub entropy_coef: f64,
    /// Elementwise gradient bound applied before each optimizer step.
    pub grad_clip: f64,
    /// Steps between updates (K). `None` updates once per rollout.
    pub update_interval: Option<usize>,
    pub total_episodes: usize,
    pub buffer_capacity: usize,
    pub hidden: (usize, usize),
    pub normalize_advantages: bool,
    /// Record elapsed wall-clock seconds in the training log. Off by default
    /// so logs are byte-identical across runs.
    pub record_wallclock: bool,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            rollout_len: 2048,
            minibatch_size: 768,
            epochs: 20,
            learning_rate: 1e-4,
            gamma: 0.99,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            grad_clip: 0.5,
            update_interval: None,
            total_episodes: 20_000,
            buffer_capacity: 3072,
            hidden: (256, 256),
            normalize_advantages: true,
            record_wallclock: false,
            seed: 0,
        }
    }
}

impl PpoConfig {
    /// Steps collected between two updates.
    pub fn segment_len(&self) -> usize {
        self.update_interval.map_or(self.rollout_len, |k| k.min(self.rollout_len))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must be in (0, 1)");
        }
        if self.minibatch_size == 0 || self.rollout_len == 0 || self.epochs == 0 {
            return bad("rollout_len, minibatch_size and epochs must be positive");
        }
        if self.minibatch_size > self.segment_len() {
            return bad("minibatch_size must not exceed the steps per update");
        }
        if self.rollout_len > self.buffer_capacity {
            return bad("rollout_len must not exceed buffer_capacity");
        }
        if self.update_interval == Some(0) {
            return bad("update_interval must be positive");
        }
        if self.hidden.0 == 0 || self.hidden.1 == 0 {
            return bad("hidden sizes must be positive");
        }
        let coefs = [self.learning_rate, self.value_coef, self.entropy_coef, self.grad_clip];
        if coefs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return bad("learning_rate and coefficients must be finite and non-negative");
        }
        if self.total_episodes == 0 {
            return bad("total_episodes must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PpoConfig::default().validate().unwrap();
        assert_eq!(PpoConfig::default().segment_len(), 2048);
    }

    #[test]
    fn rejects_bad_values() {
        let d = PpoConfig::default();
        assert!(PpoConfig { gamma: 0.0, ..d.clone() }.validate().is_err());
        assert!(PpoConfig { clip: 1.0, ..d.clone() }.validate().is_err());
        assert!(PpoConfig { minibatch_size: 4096, ..d.clone() }.validate().is_err());
        assert!(PpoConfig { rollout_len: 4000, ..d.clone() }.validate().is_err());
        assert!(PpoConfig { entropy_coef: f64::NAN, ..d }.validate().is_err());
    }
}
