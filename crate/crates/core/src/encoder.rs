//! Tabular feature encoders.
//!
//! The transformer encoder turns every categorical field into a token via a
//! per-field embedding table, adds one token for the numerical block
//! (affine projection + ReLU), applies a per-token dimension-adjustment
//! affine layer, runs a stack of pre-norm self-attention blocks and
//! mean-pools the tokens into a single state vector. No positional
//! information is added, so the pooled state does not depend on token
//! order.
//!
//! The MLP encoder is the ablation baseline: flattened embeddings and raw
//! numericals through two affine+ReLU layers.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Batch;
use crate::error::ConfigError;
use crate::numcore::{init_uniform, Graph, ParamId, ParamStore, Tensor, TensorError, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Transformer,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub embed_dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ffn_hidden: usize,
    pub kind: EncoderKind,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            n_layers: 2,
            n_heads: 4,
            ffn_hidden: 128,
            kind: EncoderKind::Transformer,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.embed_dim == 0 || self.ffn_hidden == 0 {
            return Err(ConfigError::new("embed_dim and ffn_hidden must be positive"));
        }
        if self.n_layers == 0 {
            return Err(ConfigError::new("n_layers must be at least 1"));
        }
        if self.n_heads == 0 || self.embed_dim % self.n_heads != 0 {
            return Err(ConfigError::new(format!(
                "embed_dim {} is not divisible by n_heads {}",
                self.embed_dim, self.n_heads
            )));
        }
        Ok(())
    }
}

/// Input layout an encoder is built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    /// Embedding rows per categorical field (unknown slot included).
    pub vocab_sizes: Vec<usize>,
    pub n_numerical: usize,
}

impl InputShape {
    pub fn n_tokens(&self) -> usize {
        self.vocab_sizes.len() + usize::from(self.n_numerical > 0)
    }
}

pub(crate) fn bind(g: &mut Graph, store: &ParamStore, id: ParamId) -> Var {
    g.param(id, store.get(id))
}

/// Affine layer `x · W + b` with `W: [fan_in × fan_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        fan_in: usize,
        fan_out: usize,
    ) -> Self {
        let weight = store.add(format!("{name}.weight"), init_uniform(rng, &[fan_in, fan_out], fan_in));
        let bias = store.add(format!("{name}.bias"), init_uniform(rng, &[fan_out], fan_in));
        Self { weight, bias }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var, TensorError> {
        let w = bind(g, store, self.weight);
        let b = bind(g, store, self.bias);
        g.affine(x, w, b)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerNormParams {
    gain: ParamId,
    bias: ParamId,
}

impl LayerNormParams {
    fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        Self {
            gain: store.add(format!("{name}.gain"), Tensor::full(&[dim], 1.0)),
            bias: store.add(format!("{name}.bias"), Tensor::zeros(&[dim])),
        }
    }

    fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var, TensorError> {
        let gain = bind(g, store, self.gain);
        let bias = bind(g, store, self.bias);
        g.layer_norm(x, gain, bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    norm_attn: LayerNormParams,
    query: Linear,
    key: Linear,
    value: Linear,
    out: Linear,
    norm_ffn: LayerNormParams,
    ffn_in: Linear,
    ffn_out: Linear,
}

fn embedding_tables<R: Rng + ?Sized>(
    store: &mut ParamStore,
    rng: &mut R,
    shape: &InputShape,
    dim: usize,
) -> Vec<ParamId> {
    shape
        .vocab_sizes
        .iter()
        .enumerate()
        .map(|(f, &v)| store.add(format!("embed.{f}"), init_uniform(rng, &[v, dim], 1)))
        .collect()
}

/// Looks up each categorical field in its own table, one `[B × d]` token
/// per field.
pub fn embed_categorical(
    g: &mut Graph,
    store: &ParamStore,
    tables: &[ParamId],
    batch: &Batch,
) -> Result<Vec<Var>, TensorError> {
    tables
        .iter()
        .enumerate()
        .map(|(f, &table)| {
            let t = bind(g, store, table);
            g.gather(t, &batch.categorical_column(f))
        })
        .collect()
}

fn numerical_input(g: &mut Graph, batch: &Batch) -> Result<Var, TensorError> {
    let t = Tensor::matrix(batch.len(), batch.n_numerical, batch.numerical.clone())?;
    Ok(g.constant(t))
}

/// Output of a transformer forward pass.
#[derive(Debug, Clone)]
pub struct Encoded {
    /// Pooled `[B × d]` state.
    pub state: Var,
    /// One attention node per layer; see [`Graph::attention_weights`].
    pub attention: Vec<Var>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerEncoder {
    embeddings: Vec<ParamId>,
    numerical: Option<Linear>,
    adjust: Linear,
    blocks: Vec<Block>,
    final_norm: LayerNormParams,
    n_heads: usize,
}

impl TransformerEncoder {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        config: &EncoderConfig,
        shape: &InputShape,
    ) -> Self {
        let d = config.embed_dim;
        let embeddings = embedding_tables(store, rng, shape, d);
        let numerical = (shape.n_numerical > 0).then(|| Linear::new(store, rng, "numeric", shape.n_numerical, d));
        let adjust = Linear::new(store, rng, "adjust", d, d);
        let blocks = (0..config.n_layers)
            .map(|l| Block {
                norm_attn: LayerNormParams::new(store, &format!("block{l}.norm_attn"), d),
                query: Linear::new(store, rng, &format!("block{l}.query"), d, d),
                key: Linear::new(store, rng, &format!("block{l}.key"), d, d),
                value: Linear::new(store, rng, &format!("block{l}.value"), d, d),
                out: Linear::new(store, rng, &format!("block{l}.out"), d, d),
                norm_ffn: LayerNormParams::new(store, &format!("block{l}.norm_ffn"), d),
                ffn_in: Linear::new(store, rng, &format!("block{l}.ffn_in"), d, config.ffn_hidden),
                ffn_out: Linear::new(store, rng, &format!("block{l}.ffn_out"), config.ffn_hidden, d),
            })
            .collect();
        let final_norm = LayerNormParams::new(store, "final_norm", d);
        Self {
            embeddings,
            numerical,
            adjust,
            blocks,
            final_norm,
            n_heads: config.n_heads,
        }
    }

    /// Numerical block projected to a single `[B × d]` token (affine + ReLU).
    pub fn project_numerical(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        batch: &Batch,
    ) -> Result<Option<Var>, TensorError> {
        let Some(proj) = &self.numerical else {
            return Ok(None);
        };
        let x = numerical_input(g, batch)?;
        let h = proj.forward(g, store, x)?;
        Ok(Some(g.relu(h)))
    }

    /// Categorical tokens in field order followed by the numerical token.
    pub fn tokens(&self, g: &mut Graph, store: &ParamStore, batch: &Batch) -> Result<Vec<Var>, TensorError> {
        let mut tokens = embed_categorical(g, store, &self.embeddings, batch)?;
        if let Some(t) = self.project_numerical(g, store, batch)? {
            tokens.push(t);
        }
        Ok(tokens)
    }

    pub fn encode(&self, g: &mut Graph, store: &ParamStore, batch: &Batch) -> Result<Encoded, TensorError> {
        let tokens = self.tokens(g, store, batch)?;
        self.encode_tokens(g, store, &tokens)
    }

    /// Runs the attention stack over `tokens` (each `[B × d]`) and pools.
    pub fn encode_tokens(&self, g: &mut Graph, store: &ParamStore, tokens: &[Var]) -> Result<Encoded, TensorError> {
        let n_tokens = tokens.len();
        let x = g.concat_rows(tokens)?;
        let mut x = self.adjust.forward(g, store, x)?;
        let mut attention = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let h = block.norm_attn.forward(g, store, x)?;
            let q = block.query.forward(g, store, h)?;
            let k = block.key.forward(g, store, h)?;
            let v = block.value.forward(g, store, h)?;
            let a = g.attention(q, k, v, n_tokens, self.n_heads)?;
            attention.push(a);
            let a = block.out.forward(g, store, a)?;
            x = g.add(x, a)?;

            let h = block.norm_ffn.forward(g, store, x)?;
            let h = block.ffn_in.forward(g, store, h)?;
            let h = g.relu(h);
            let h = block.ffn_out.forward(g, store, h)?;
            x = g.add(x, h)?;
        }
        let x = self.final_norm.forward(g, store, x)?;
        let state = g.mean_blocks(x, n_tokens)?;
        Ok(Encoded { state, attention })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpEncoder {
    embeddings: Vec<ParamId>,
    hidden: Linear,
    out: Linear,
}

impl MlpEncoder {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        config: &EncoderConfig,
        shape: &InputShape,
    ) -> Self {
        let d = config.embed_dim;
        let embeddings = embedding_tables(store, rng, shape, d);
        let width = shape.vocab_sizes.len() * d + shape.n_numerical;
        let hidden = Linear::new(store, rng, "mlp.hidden", width, config.ffn_hidden);
        let out = Linear::new(store, rng, "mlp.out", config.ffn_hidden, d);
        Self { embeddings, hidden, out }
    }

    pub fn encode(&self, g: &mut Graph, store: &ParamStore, batch: &Batch) -> Result<Var, TensorError> {
        let mut parts = embed_categorical(g, store, &self.embeddings, batch)?;
        if batch.n_numerical > 0 {
            parts.push(numerical_input(g, batch)?);
        }
        let x = g.concat_cols(&parts)?;
        let h = self.hidden.forward(g, store, x)?;
        let h = g.relu(h);
        let h = self.out.forward(g, store, h)?;
        Ok(g.relu(h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Transformer(TransformerEncoder),
    Mlp(MlpEncoder),
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        config: &EncoderConfig,
        shape: &InputShape,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        if shape.n_tokens() == 0 {
            return Err(ConfigError::new("encoder needs at least one input field"));
        }
        Ok(match config.kind {
            EncoderKind::Transformer => Encoder::Transformer(TransformerEncoder::new(store, rng, config, shape)),
            EncoderKind::Mlp => Encoder::Mlp(MlpEncoder::new(store, rng, config, shape)),
        })
    }

    /// Pooled `[B × d]` state for every row of `batch`.
    pub fn encode(&self, g: &mut Graph, store: &ParamStore, batch: &Batch) -> Result<Var, TensorError> {
        match self {
            Encoder::Transformer(t) => Ok(t.encode(g, store, batch)?.state),
            Encoder::Mlp(m) => m.encode(g, store, batch),
        }
    }
}
