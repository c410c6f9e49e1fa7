use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{clip_grad_norm, collect_trajectory, compute_gae, ppo_update, Adam, EpochMetrics, PpoConfig, RlError};
use crate::data::{iterate_batches, Dataset};
use crate::heads::{predict, PolicyValueNet};
use crate::metrics::{confusion, report, ClassReport};
use crate::numcore::{Graph, TensorError};
use crate::reward::{MistakeWindow, RewardConfig};
use crate::rng::{stream, Rng, Stream};

const EVAL_CHUNK: usize = 1024;

/// Mutable training state besides the network itself: optimizer moments,
/// random streams, the mistake window and counters. Serializable so a run
/// can be resumed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub optimizer: Adam,
    pub sampling_rng: Rng,
    pub shuffle_rng: Rng,
    pub window: MistakeWindow,
    pub epoch: usize,
    pub step: u64,
}

impl TrainerState {
    pub fn new(net: &PolicyValueNet, learning_rate: f64, window_k: usize, seed: u64) -> Self {
        Self {
            optimizer: Adam::new(net.params(), learning_rate),
            sampling_rng: stream(seed, Stream::Sampling),
            shuffle_rng: stream(seed, Stream::Shuffle),
            window: MistakeWindow::new(window_k),
            epoch: 0,
            step: 0,
        }
    }
}

/// Settings of the supervised baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct CeConfig {
    pub learning_rate: f64,
    pub minibatch_size: usize,
    pub max_grad_norm: f64,
}

impl From<&PpoConfig> for CeConfig {
    fn from(p: &PpoConfig) -> Self {
        Self {
            learning_rate: p.learning_rate,
            minibatch_size: p.minibatch_size,
            max_grad_norm: p.max_grad_norm,
        }
    }
}

/// Argmax predictions for every row.
pub fn predict_dataset(net: &PolicyValueNet, ds: &Dataset) -> Result<Vec<usize>, TensorError> {
    let mut out = Vec::with_capacity(ds.len());
    for batch in iterate_batches(ds, EVAL_CHUNK, None).map_err(|_| TensorError::Usage {
        op: "predict",
        reason: "invalid chunk size",
    })? {
        let eval = net.evaluate(&batch)?;
        out.extend((0..batch.len()).map(|r| predict(eval.probs.row(r))));
    }
    Ok(out)
}

pub fn evaluate(net: &PolicyValueNet, ds: &Dataset, class_names: &[String]) -> Result<ClassReport, RlError> {
    let preds = predict_dataset(net, ds)?;
    let cm = confusion(&ds.labels, &preds, ds.n_classes)?;
    Ok(report(&cm, class_names)?)
}

fn generic_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{i}")).collect()
}

fn accuracy(net: &PolicyValueNet, ds: &Dataset) -> Result<f64, TensorError> {
    let preds = predict_dataset(net, ds)?;
    let hits = preds.iter().zip(&ds.labels).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / ds.len().max(1) as f64)
}

fn eval_metrics(net: &PolicyValueNet, eval: Option<&Dataset>) -> Result<(Option<f64>, Option<f64>), RlError> {
    match eval {
        Some(ds) if !ds.is_empty() => {
            let r = evaluate(net, ds, &generic_names(ds.n_classes))?;
            Ok((Some(r.accuracy), Some(r.macro_f1)))
        }
        _ => Ok((None, None)),
    }
}

fn check_compatible(net: &PolicyValueNet, ds: &Dataset) -> Result<(), RlError> {
    let spec = net.spec();
    if spec.input.vocab_sizes.len() != ds.n_categorical
        || spec.input.n_numerical != ds.n_numerical
        || spec.n_classes != ds.n_classes
    {
        return Err(RlError::Data(crate::data::DataError::Invalid(format!(
            "dataset layout ({} categorical, {} numerical, {} classes) does not match the network",
            ds.n_categorical, ds.n_numerical, ds.n_classes
        ))));
    }
    Ok(())
}

/// One pass of PPO over `train`: shuffle into episodes, collect, estimate
/// advantages, update.
pub fn ppo_epoch(
    net: &mut PolicyValueNet,
    state: &mut TrainerState,
    train: &Dataset,
    eval: Option<&Dataset>,
    ppo: &PpoConfig,
    reward: &RewardConfig,
) -> Result<EpochMetrics, RlError> {
    ppo.validate()?;
    reward.validate()?;
    check_compatible(net, train)?;
    state.optimizer.learning_rate = ppo.learning_rate;
    state.window = MistakeWindow::new(reward.window_k);
    let epoch = state.epoch;
    let seed = state.shuffle_rng.next_u64();
    let batches = iterate_batches(train, ppo.episode_length(), Some(seed))?;

    let (mut reward_sum, mut n) = (0.0, 0usize);
    let (mut policy, mut value, mut clip, mut entropy) = (0.0, 0.0, 0.0, 0.0);
    for (b, batch) in batches.iter().enumerate() {
        let mut transitions = collect_trajectory(batch, net, reward, &mut state.window, &mut state.sampling_rng)?;
        reward_sum += transitions.iter().map(|t| t.reward).sum::<f64>();
        n += transitions.len();
        compute_gae(&mut transitions, ppo.discount, ppo.gae_lambda);
        let stats = ppo_update(
            &transitions,
            batch,
            net,
            &mut state.optimizer,
            ppo,
            &mut state.shuffle_rng,
            &mut state.step,
        )
        .map_err(|e| e.at(epoch, b))?;
        let w = batch.len() as f64;
        policy += stats.policy_loss * w;
        value += stats.value_loss * w;
        clip += stats.clip_fraction * w;
        entropy += stats.entropy * w;
    }
    let nf = n.max(1) as f64;
    let train_accuracy = accuracy(net, train)?;
    let (test_accuracy, test_macro_f1) = eval_metrics(net, eval)?;
    state.epoch += 1;
    Ok(EpochMetrics {
        epoch,
        mean_reward: Some(reward_sum / nf),
        policy_loss: policy / nf,
        value_loss: Some(value / nf),
        clip_fraction: Some(clip / nf),
        entropy: entropy / nf,
        train_accuracy,
        test_accuracy,
        test_macro_f1,
    })
}

/// One epoch of negative log-likelihood minimization through the policy
/// head. The value head receives no gradient.
pub fn ce_epoch(
    net: &mut PolicyValueNet,
    state: &mut TrainerState,
    train: &Dataset,
    eval: Option<&Dataset>,
    cfg: &CeConfig,
) -> Result<EpochMetrics, RlError> {
    check_compatible(net, train)?;
    state.optimizer.learning_rate = cfg.learning_rate;
    let epoch = state.epoch;
    let seed = state.shuffle_rng.next_u64();
    let batches = iterate_batches(train, cfg.minibatch_size, Some(seed))?;
    let (mut loss_sum, mut entropy_sum, mut n) = (0.0, 0.0, 0usize);
    for (b, batch) in batches.iter().enumerate() {
        let mut g = Graph::new();
        let state_var = net.encode(&mut g, batch)?;
        let logits = net.policy_head().forward(&mut g, net.params(), state_var)?;
        let log_probs = g.log_softmax_rows(logits)?;
        let picked = g.pick_columns(log_probs, &batch.labels)?;
        let mean = g.mean(picked);
        let loss = g.scale(mean, -1.0);
        let value = g.value(loss).data()[0];
        if !value.is_finite() {
            return Err(RlError::NonFiniteLoss {
                epoch,
                batch: b,
                step: state.step,
                param_norm: net.params().global_norm(),
            });
        }
        let lp = g.value(log_probs).data();
        entropy_sum -= lp.iter().map(|&l| crate::math::exp(l) * l).sum::<f64>();
        let mut grads = g.backward(loss)?;
        clip_grad_norm(&mut grads, cfg.max_grad_norm);
        state.optimizer.step(net.params_mut(), &grads);
        state.step += 1;
        loss_sum += value * batch.len() as f64;
        n += batch.len();
    }
    let nf = n.max(1) as f64;
    let train_accuracy = accuracy(net, train)?;
    let (test_accuracy, test_macro_f1) = eval_metrics(net, eval)?;
    state.epoch += 1;
    Ok(EpochMetrics {
        epoch,
        mean_reward: None,
        policy_loss: loss_sum / nf,
        value_loss: None,
        clip_fraction: None,
        entropy: entropy_sum / nf,
        train_accuracy,
        test_accuracy,
        test_macro_f1,
    })
}

/// PPO training for `epochs` passes. Deterministic given `seed`.
pub fn train_ppo(
    train: &Dataset,
    eval: Option<&Dataset>,
    mut net: PolicyValueNet,
    ppo: &PpoConfig,
    reward: &RewardConfig,
    epochs: usize,
    seed: u64,
) -> Result<(PolicyValueNet, Vec<EpochMetrics>), RlError> {
    let mut state = TrainerState::new(&net, ppo.learning_rate, reward.window_k, seed);
    let mut log = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        log.push(ppo_epoch(&mut net, &mut state, train, eval, ppo, reward)?);
    }
    Ok((net, log))
}

/// Cross-entropy baseline with the same logging surface as [`train_ppo`].
pub fn train_cross_entropy(
    train: &Dataset,
    eval: Option<&Dataset>,
    mut net: PolicyValueNet,
    cfg: &CeConfig,
    epochs: usize,
    seed: u64,
) -> Result<(PolicyValueNet, Vec<EpochMetrics>), RlError> {
    let mut state = TrainerState::new(&net, cfg.learning_rate, 1, seed);
    let mut log = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        log.push(ce_epoch(&mut net, &mut state, train, eval, cfg)?);
    }
    Ok((net, log))
}
