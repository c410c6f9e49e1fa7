//! Policy and value heads on top of the encoder.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Batch, FeatureSchema};
use crate::encoder::{Encoder, EncoderConfig, InputShape, Linear};
use crate::error::ConfigError;
use crate::math;
use crate::numcore::{Graph, ParamStore, Tensor, TensorError, Var};
use crate::rng::{stream, Stream};

/// Everything needed to rebuild the parameter layout of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub encoder: EncoderConfig,
    pub input: InputShape,
    pub n_classes: usize,
}

impl NetSpec {
    pub fn for_schema(encoder: EncoderConfig, schema: &FeatureSchema) -> Self {
        Self {
            encoder,
            input: InputShape {
                vocab_sizes: schema.vocab_sizes(),
                n_numerical: schema.numerical.len(),
            },
            n_classes: schema.n_classes(),
        }
    }
}

/// Encoder plus a policy head (`d → n_classes` logits) and a value head
/// (`d → 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValueNet {
    spec: NetSpec,
    encoder: Encoder,
    policy: Linear,
    value: Linear,
    params: ParamStore,
}

/// Graph nodes from one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct NetOutput {
    /// `[B × d]` encoded states.
    pub state: Var,
    /// `[B × n_classes]`.
    pub logits: Var,
    /// `[B × n_classes]` log-softmax of the logits.
    pub log_probs: Var,
    /// `[B]` state-value estimates.
    pub value: Var,
}

/// Decision for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionOutput {
    pub probs: Vec<f64>,
    pub log_prob_of_action: f64,
    pub action: usize,
    pub value: f64,
}

/// Batched inference result.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `[B × n_classes]` action probabilities.
    pub probs: Tensor,
    /// `[B × n_classes]` log-probabilities.
    pub log_probs: Tensor,
    pub values: Vec<f64>,
}

impl PolicyValueNet {
    /// Fresh network initialized from the `Init` stream of `seed`.
    pub fn new(spec: NetSpec, seed: u64) -> Result<Self, ConfigError> {
        Self::with_rng(spec, &mut stream(seed, Stream::Init))
    }

    pub fn with_rng<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Result<Self, ConfigError> {
        if spec.n_classes < 2 {
            return Err(ConfigError::new("at least two classes are required"));
        }
        let mut params = ParamStore::new();
        let encoder = Encoder::new(&mut params, rng, &spec.encoder, &spec.input)?;
        let d = spec.encoder.embed_dim;
        let policy = Linear::new(&mut params, rng, "policy", d, spec.n_classes);
        let value = Linear::new(&mut params, rng, "value", d, 1);
        Ok(Self {
            spec,
            encoder,
            policy,
            value,
            params,
        })
    }

    /// Rebuilds a network around previously trained parameters.
    pub fn from_params(spec: NetSpec, params: ParamStore) -> Result<Self, ConfigError> {
        let mut net = Self::new(spec, 0)?;
        if !net.params.same_layout(&params) {
            return Err(ConfigError::new("parameter layout does not match the network spec"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn n_classes(&self) -> usize {
        self.spec.n_classes
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn policy_head(&self) -> &Linear {
        &self.policy
    }

    pub fn value_head(&self) -> &Linear {
        &self.value
    }

    pub fn encode(&self, g: &mut Graph, batch: &Batch) -> Result<Var, TensorError> {
        self.encoder.encode(g, &self.params, batch)
    }

    /// Policy logits and value estimates for `[B × d]` states.
    pub fn heads(&self, g: &mut Graph, state: Var) -> Result<(Var, Var), TensorError> {
        let logits = self.policy.forward(g, &self.params, state)?;
        let value = self.value.forward(g, &self.params, state)?;
        let rows = g.value(value).rows();
        let value = g.reshape(value, alloc::vec![rows])?;
        Ok((logits, value))
    }

    pub fn forward(&self, g: &mut Graph, batch: &Batch) -> Result<NetOutput, TensorError> {
        let state = self.encode(g, batch)?;
        let (logits, value) = self.heads(g, state)?;
        let log_probs = g.log_softmax_rows(logits)?;
        Ok(NetOutput {
            state,
            logits,
            log_probs,
            value,
        })
    }

    /// Head outputs for already-encoded states.
    pub fn forward_state(&self, state: &Tensor) -> Result<(Tensor, Vec<f64>), TensorError> {
        if !state.is_finite() {
            return Err(TensorError::NonFinite { op: "state" });
        }
        let mut g = Graph::new();
        let s = g.constant(state.clone());
        let (logits, value) = self.heads(&mut g, s)?;
        let probs = g.value(logits).softmax_rows()?;
        Ok((probs, g.value(value).data().to_vec()))
    }

    pub fn evaluate(&self, batch: &Batch) -> Result<Evaluation, TensorError> {
        let mut g = Graph::new();
        let out = self.forward(&mut g, batch)?;
        let probs = g.value(out.logits).softmax_rows()?;
        Ok(Evaluation {
            probs,
            log_probs: g.value(out.log_probs).clone(),
            values: g.value(out.value).data().to_vec(),
        })
    }

    /// Argmax class per row.
    pub fn predict(&self, batch: &Batch) -> Result<Vec<usize>, TensorError> {
        let eval = self.evaluate(batch)?;
        Ok((0..batch.len()).map(|r| predict(eval.probs.row(r))).collect())
    }
}

/// Draws an action from a categorical distribution. Returns the action and
/// its log-probability.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> (usize, f64) {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut action = None;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            action = Some(i);
            break;
        }
    }
    // rounding can leave cum slightly below 1
    let action = action.unwrap_or_else(|| probs.iter().rposition(|&p| p > 0.0).unwrap_or(0));
    (action, math::ln(probs[action]))
}

/// Index of the largest probability, lowest index on ties.
pub fn predict(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}
