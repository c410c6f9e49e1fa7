//! Composite classification reward.
//!
//! `R = alpha · R_cls + beta · R_conf + gamma_w · R_temp` where
//!
//! * `R_cls` is `+r_correct` for a correct prediction and `-r_wrong` otherwise,
//! * `R_conf = lambda · s · p(ŷ)` with `s = +1` when correct and `-1` when
//!   wrong, `p(ŷ)` being the softmax probability of the predicted class,
//! * `R_temp = -delta · ln(1 + count_wrong)` over the previous `window_k`
//!   decisions (the current one excluded).

use alloc::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_w: f64,
    pub r_correct: f64,
    pub r_wrong: f64,
    pub lambda: f64,
    pub delta: f64,
    pub window_k: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            gamma_w: 0.2,
            r_correct: 1.0,
            r_wrong: 1.0,
            lambda: 1.0,
            delta: 0.5,
            window_k: 32,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let scalars = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma_w", self.gamma_w),
            ("r_correct", self.r_correct),
            ("r_wrong", self.r_wrong),
            ("lambda", self.lambda),
            ("delta", self.delta),
        ];
        for (name, v) in scalars {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::new(alloc::format!(
                    "reward.{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.window_k == 0 {
            return Err(ConfigError::new("reward.window_k must be at least 1"));
        }
        Ok(())
    }

    /// Largest possible `|R|` under this configuration.
    pub fn bound(&self) -> f64 {
        self.alpha * self.r_correct.max(self.r_wrong)
            + self.beta * self.lambda
            + self.gamma_w * self.delta * math::ln_1p(self.window_k as f64)
    }
}

/// Correctness flags of the most recent `k` decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MistakeWindow {
    capacity: usize,
    flags: VecDeque<bool>,
    wrong: usize,
}

impl MistakeWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        Self {
            capacity,
            flags: VecDeque::with_capacity(capacity),
            wrong: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn count_wrong(&self) -> usize {
        self.wrong
    }

    pub fn push(&mut self, correct: bool) {
        if self.flags.len() == self.capacity {
            if let Some(false) = self.flags.pop_front() {
                self.wrong -= 1;
            }
        }
        self.flags.push_back(correct);
        if !correct {
            self.wrong += 1;
        }
    }

    pub fn clear(&mut self) {
        self.flags.clear();
        self.wrong = 0;
    }
}

pub fn reward_cls(predicted: usize, truth: usize, cfg: &RewardConfig) -> f64 {
    if predicted == truth {
        cfg.r_correct
    } else {
        -cfg.r_wrong
    }
}

pub fn reward_conf(predicted: usize, truth: usize, prob_of_predicted: f64, cfg: &RewardConfig) -> f64 {
    let sign = if predicted == truth { 1.0 } else { -1.0 };
    cfg.lambda * sign * prob_of_predicted
}

pub fn reward_temp(window: &MistakeWindow, cfg: &RewardConfig) -> f64 {
    -cfg.delta * math::ln_1p(window.count_wrong() as f64)
}

/// Full reward for one decision; the window is updated afterwards.
pub fn total_reward(
    predicted: usize,
    truth: usize,
    prob_of_predicted: f64,
    window: &mut MistakeWindow,
    cfg: &RewardConfig,
) -> f64 {
    let r = cfg.alpha * reward_cls(predicted, truth, cfg)
        + cfg.beta * reward_conf(predicted, truth, prob_of_predicted, cfg)
        + cfg.gamma_w * reward_temp(window, cfg);
    window.push(predicted == truth);
    r
}
