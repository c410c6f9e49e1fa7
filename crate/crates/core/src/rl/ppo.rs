use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{clip_grad_norm, Adam, PpoConfig, RlError, Transition};
use crate::data::Batch;
use crate::heads::{sample_action, PolicyValueNet};
use crate::numcore::{Graph, Tensor, TensorError, Var};
use crate::reward::{total_reward, MistakeWindow, RewardConfig};

/// Labels every row of `batch` in order with actions sampled from the
/// current policy and rewards each decision. The network is not modified.
pub fn collect_trajectory<R: Rng + ?Sized>(
    batch: &Batch,
    net: &PolicyValueNet,
    reward_cfg: &RewardConfig,
    window: &mut MistakeWindow,
    rng: &mut R,
) -> Result<Vec<Transition>, TensorError> {
    let eval = net.evaluate(batch)?;
    let mut out = Vec::with_capacity(batch.len());
    for row in 0..batch.len() {
        let probs = eval.probs.row(row);
        let (action, _) = sample_action(probs, rng);
        let reward = total_reward(action, batch.labels[row], probs[action], window, reward_cfg);
        out.push(Transition {
            row,
            action,
            old_log_prob: eval.log_probs.at(row, action),
            value: eval.values[row],
            reward,
            advantage: 0.0,
            return_target: 0.0,
        });
    }
    Ok(out)
}

/// `min(r·A, clip(r, 1-ε, 1+ε)·A)` for a single transition.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// Loss nodes for one minibatch.
#[derive(Debug, Clone)]
pub struct PpoLoss {
    pub total: Var,
    pub policy: Var,
    pub value: Var,
    pub entropy: Var,
    /// `[n]` probability ratios `exp(new_log_prob - old_log_prob)`.
    pub ratio: Var,
}

/// Builds the PPO objective for `transitions` (rows index `batch`):
/// `-mean(min(r·A, clip(r)·A)) + c_v · mean((V - target)²) - c_e · H`.
pub fn ppo_loss(
    g: &mut Graph,
    net: &PolicyValueNet,
    batch: &Batch,
    transitions: &[&Transition],
    cfg: &PpoConfig,
) -> Result<PpoLoss, TensorError> {
    let rows: Vec<usize> = transitions.iter().map(|t| t.row).collect();
    let sub = batch.select(&rows);
    let out = net.forward(g, &sub)?;
    let actions: Vec<usize> = transitions.iter().map(|t| t.action).collect();
    let vector = |f: fn(&Transition) -> f64| Tensor::vector(transitions.iter().map(|t| f(t)).collect());

    let new_lp = g.pick_columns(out.log_probs, &actions)?;
    let old_lp = g.constant(vector(|t| t.old_log_prob));
    let adv = g.constant(vector(|t| t.advantage));
    let target = g.constant(vector(|t| t.return_target));

    let log_ratio = g.sub(new_lp, old_lp)?;
    let ratio = g.exp(log_ratio);
    let unclipped = g.mul(ratio, adv)?;
    let clipped = g.clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    let clipped = g.mul(clipped, adv)?;
    let surrogate = g.minimum(unclipped, clipped)?;
    let surrogate = g.mean(surrogate);
    let policy = g.scale(surrogate, -1.0);

    let err = g.sub(out.value, target)?;
    let sq = g.mul(err, err)?;
    let value = g.mean(sq);

    let probs = g.exp(out.log_probs);
    let plogp = g.mul(probs, out.log_probs)?;
    let plogp = g.sum(plogp);
    let entropy = g.scale(plogp, -1.0 / transitions.len() as f64);

    let weighted_value = g.scale(value, cfg.value_loss_coef);
    let mut total = g.add(policy, weighted_value)?;
    if cfg.entropy_coef != 0.0 {
        let bonus = g.scale(entropy, -cfg.entropy_coef);
        total = g.add(total, bonus)?;
    }
    Ok(PpoLoss {
        total,
        policy,
        value,
        entropy,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinibatchStats {
    pub epoch: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Averages over all minibatch updates of one [`ppo_update`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub minibatches: Vec<MinibatchStats>,
}

/// Runs `ppo_epochs` passes of shuffled minibatch updates over one
/// episode's transitions. `step` counts optimizer steps and is advanced.
pub fn ppo_update<R: Rng + ?Sized>(
    transitions: &[Transition],
    batch: &Batch,
    net: &mut PolicyValueNet,
    optimizer: &mut Adam,
    cfg: &PpoConfig,
    rng: &mut R,
    step: &mut u64,
) -> Result<UpdateStats, RlError> {
    let mut order: Vec<usize> = (0..transitions.len()).collect();
    let mut minibatches = Vec::new();
    for epoch in 0..cfg.ppo_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch_size) {
            let picked: Vec<&Transition> = chunk.iter().map(|&i| &transitions[i]).collect();
            let mut g = Graph::new();
            let loss = ppo_loss(&mut g, net, batch, &picked, cfg)?;
            let total = g.value(loss.total).data()[0];
            if !total.is_finite() {
                return Err(RlError::NonFiniteLoss {
                    epoch: 0,
                    batch: 0,
                    step: *step,
                    param_norm: net.params().global_norm(),
                });
            }
            let ratios = g.value(loss.ratio).data();
            let clipped = ratios
                .iter()
                .filter(|r| (*r - 1.0).abs() > cfg.clip_epsilon)
                .count();
            let mut grads = g.backward(loss.total)?;
            let grad_norm = clip_grad_norm(&mut grads, cfg.max_grad_norm);
            optimizer.step(net.params_mut(), &grads);
            *step += 1;
            minibatches.push(MinibatchStats {
                epoch,
                policy_loss: g.value(loss.policy).data()[0],
                value_loss: g.value(loss.value).data()[0],
                entropy: g.value(loss.entropy).data()[0],
                clip_fraction: clipped as f64 / ratios.len() as f64,
                grad_norm,
            });
        }
    }
    let n = minibatches.len().max(1) as f64;
    let mean = |f: fn(&MinibatchStats) -> f64| minibatches.iter().map(f).sum::<f64>() / n;
    Ok(UpdateStats {
        policy_loss: mean(|m| m.policy_loss),
        value_loss: mean(|m| m.value_loss),
        entropy: mean(|m| m.entropy),
        clip_fraction: mean(|m| m.clip_fraction),
        minibatches,
    })
}
