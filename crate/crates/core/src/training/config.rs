use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub grad_clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            grad_clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return fail(format!("{name} must lie in (0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        if self.patience == 0 || self.patience > self.max_epochs {
            return fail(format!(
                "patience must lie in 1..={}, got {}",
                self.max_epochs, self.patience
            ));
        }
        if !(self.grad_clip_norm > 0.0) {
            return fail(format!(
                "grad_clip_norm must be positive, got {}",
                self.grad_clip_norm
            ));
        }
        Ok(())
    }
}
