use alloc::vec;
use alloc::vec::Vec;

use super::Transition;
use crate::math;

/// Generalized advantage estimates and return targets for one episode that
/// terminates after its last step (bootstrap value 0).
pub fn estimate_advantages(rewards: &[f64], values: &[f64], discount: f64, gae_lambda: f64) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(rewards.len(), values.len());
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + discount * next_value - values[t];
        next_adv = delta + discount * gae_lambda * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts to mean 0 and scales to unit standard deviation. Episodes of a
/// single step are left as they are.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let (mean, std) = math::mean_std(adv);
    for a in adv.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}

/// Fills `advantage` (normalized) and `return_target` (from the raw
/// advantages) for an episode.
pub fn compute_gae(transitions: &mut [Transition], discount: f64, gae_lambda: f64) {
    if transitions.is_empty() {
        return;
    }
    let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
    let values: Vec<f64> = transitions.iter().map(|t| t.value).collect();
    let (mut adv, returns) = estimate_advantages(&rewards, &values, discount, gae_lambda);
    normalize_advantages(&mut adv);
    for ((t, a), r) in transitions.iter_mut().zip(adv).zip(returns) {
        t.advantage = a;
        t.return_target = r;
    }
}
