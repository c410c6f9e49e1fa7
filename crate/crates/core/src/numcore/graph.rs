use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::tensor::softmax_in_place;
use super::{ParamId, Tensor, TensorError};
use crate::math;

/// Node handle on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Exp(Var),
    Log(Var),
    Clamp(Var, f64, f64),
    Minimum(Var, Var),
    Sum(Var),
    Mean(Var),
    Reshape(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
    },
    Gather {
        table: Var,
        indices: Vec<usize>,
    },
    PickColumns {
        x: Var,
        indices: Vec<usize>,
    },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    MeanBlocks {
        x: Var,
        blocks: usize,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        tokens: usize,
        heads: usize,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    /// Forward-pass cache reused by backward (normalized activations,
    /// attention weights, ...).
    cache: Vec<f64>,
}

/// Dynamic tape of tensor operations.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it and the reverse sweep in [`Graph::backward`] is a single pass over the
/// node list.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Parameter gradients produced by [`Graph::backward`].
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_param: BTreeMap<ParamId, Tensor>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.by_param.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.by_param.iter().map(|(k, v)| (*k, v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &mut Tensor)> {
        self.by_param.iter_mut().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.by_param.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_param.is_empty()
    }

    pub fn global_norm(&self) -> f64 {
        math::sqrt(self.by_param.values().map(Tensor::l2_norm_sq).sum())
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.by_param.values_mut() {
            for v in g.data_mut() {
                *v *= factor;
            }
        }
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn require_matrix(op: &'static str, t: &Tensor) -> Result<(usize, usize), TensorError> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        _ => Err(TensorError::Usage {
            op,
            reason: "expected a 2-D tensor",
        }),
    }
}

fn accumulate(slot: &mut Option<Tensor>, shape: &[usize], delta: &[f64]) {
    match slot {
        Some(g) => {
            for (a, b) in g.data_mut().iter_mut().zip(delta) {
                *a += b;
            }
        }
        None => {
            *slot = Some(Tensor::new(shape.to_vec(), delta.to_vec()).expect("gradient shape"));
        }
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.push_cached(value, op, Vec::new())
    }

    fn push_cached(&mut self, value: Tensor, op: Op, cache: Vec<f64>) -> Var {
        self.nodes.push(Node { value, op, cache });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant)
    }

    /// Records a trainable leaf. Gradients are reported under `id`.
    pub fn param(&mut self, id: ParamId, t: &Tensor) -> Var {
        self.push(t.clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn elementwise(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch(op_name, ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise minimum; the gradient goes to `a` on ties.
    pub fn minimum(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.elementwise("minimum", a, b, |x, y| if x <= y { x } else { y }, Op::Minimum(a, b))
    }

    /// `x[n×d] + bias[d]` broadcast over rows.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, TensorError> {
        let (tx, tb) = (self.value(x), self.value(bias));
        if tb.shape().len() != 1 || tx.cols() != tb.numel() {
            return Err(mismatch("add_bias", tx, tb));
        }
        let mut out = tx.clone();
        let d = tb.numel();
        for row in out.data_mut().chunks_mut(d) {
            for (o, &b) in row.iter_mut().zip(tb.data()) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    /// `x · w + b`, the usual affine layer.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let h = self.matmul(x, w)?;
        self.add_bias(h, b)
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(x);
        let data = t.data().iter().map(|&v| f(v)).collect();
        let out = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        self.push(out, op)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, |v| v * c, Op::Scale(x, c))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| if v > 0.0 { v } else { 0.0 }, Op::Relu(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, math::exp, Op::Exp(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.unary(x, math::ln, Op::Log(x))
    }

    /// Clamps into `[lo, hi]`; gradient is zero outside the band.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        self.unary(x, |v| v.clamp(lo, hi), Op::Clamp(x, lo, hi))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.numel() as f64;
        self.push(Tensor::scalar(s), Op::Mean(x))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var, TensorError> {
        let out = self.value(x).clone().reshape(shape)?;
        Ok(self.push(out, Op::Reshape(x)))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).softmax_rows()?;
        Ok(self.push(out, Op::SoftmaxRows(x)))
    }

    pub fn log_softmax_rows(&mut self, x: Var) -> Result<Var, TensorError> {
        let t = self.value(x);
        if !t.is_finite() {
            return Err(TensorError::NonFinite { op: "log_softmax" });
        }
        let c = t.cols();
        let mut data = t.data().to_vec();
        for row in data.chunks_mut(c) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + math::ln(row.iter().map(|&v| math::exp(v - max)).sum::<f64>());
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        let out = Tensor::new(t.shape().to_vec(), data)?;
        Ok(self.push(out, Op::LogSoftmaxRows(x)))
    }

    /// Per-row layer normalization of `x[n×d]` with learned `gain[d]` and
    /// `bias[d]`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var, TensorError> {
        let (tx, tg, tb) = (self.value(x), self.value(gain), self.value(bias));
        let d = tx.cols();
        if tg.shape() != [d] || tb.shape() != [d] {
            return Err(mismatch("layer_norm", tx, tg));
        }
        let rows = tx.numel() / d;
        let mut out = vec![0.0; tx.numel()];
        // cache: normalized values, then one inverse std per row
        let mut cache = vec![0.0; tx.numel() + rows];
        for r in 0..rows {
            let row = &tx.data()[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv_std = 1.0 / math::sqrt(var + LAYER_NORM_EPS);
            cache[tx.numel() + r] = inv_std;
            for j in 0..d {
                let xhat = (row[j] - mean) * inv_std;
                cache[r * d + j] = xhat;
                out[r * d + j] = xhat * tg.data()[j] + tb.data()[j];
            }
        }
        let out = Tensor::new(tx.shape().to_vec(), out)?;
        Ok(self.push_cached(out, Op::LayerNorm { x, gain, bias }, cache))
    }

    /// Looks up rows of `table[v×d]`, producing `[indices.len() × d]`.
    pub fn gather(&mut self, table: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        let (v, d) = require_matrix("gather", t)?;
        if indices.is_empty() {
            return Err(TensorError::Usage {
                op: "gather",
                reason: "no indices",
            });
        }
        let mut out = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= v {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather",
                    index: i,
                    bound: v,
                });
            }
            out.extend_from_slice(t.row(i));
        }
        let out = Tensor::matrix(indices.len(), d, out)?;
        Ok(self.push(
            out,
            Op::Gather {
                table,
                indices: indices.to_vec(),
            },
        ))
    }

    /// `out[i] = x[i, indices[i]]` for `x[n×k]`.
    pub fn pick_columns(&mut self, x: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(x);
        let (n, k) = require_matrix("pick_columns", t)?;
        if indices.len() != n {
            return Err(TensorError::Usage {
                op: "pick_columns",
                reason: "one index per row required",
            });
        }
        let mut out = Vec::with_capacity(n);
        for (r, &i) in indices.iter().enumerate() {
            if i >= k {
                return Err(TensorError::IndexOutOfRange {
                    op: "pick_columns",
                    index: i,
                    bound: k,
                });
            }
            out.push(t.at(r, i));
        }
        Ok(self.push(
            Tensor::vector(out),
            Op::PickColumns {
                x,
                indices: indices.to_vec(),
            },
        ))
    }

    /// Concatenates 2-D tensors along the feature (column) axis.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Usage {
            op: "concat_cols",
            reason: "nothing to concatenate",
        })?;
        let (n, _) = require_matrix("concat_cols", self.value(*first))?;
        let mut total = 0;
        for p in parts {
            let t = self.value(*p);
            let (r, c) = require_matrix("concat_cols", t)?;
            if r != n {
                return Err(mismatch("concat_cols", self.value(*first), t));
            }
            total += c;
        }
        let mut out = Vec::with_capacity(n * total);
        for r in 0..n {
            for p in parts {
                out.extend_from_slice(self.value(*p).row(r));
            }
        }
        let out = Tensor::matrix(n, total, out)?;
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    /// Stacks 2-D tensors with equal column counts along the row axis.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Usage {
            op: "concat_rows",
            reason: "nothing to concatenate",
        })?;
        let (_, d) = require_matrix("concat_rows", self.value(*first))?;
        let mut out = Vec::new();
        let mut rows = 0;
        for p in parts {
            let t = self.value(*p);
            let (r, c) = require_matrix("concat_rows", t)?;
            if c != d {
                return Err(mismatch("concat_rows", self.value(*first), t));
            }
            out.extend_from_slice(t.data());
            rows += r;
        }
        let out = Tensor::matrix(rows, d, out)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    /// Averages `blocks` equally sized row blocks of `x[(blocks·n)×d]`,
    /// giving `[n×d]`.
    pub fn mean_blocks(&mut self, x: Var, blocks: usize) -> Result<Var, TensorError> {
        let t = self.value(x);
        let (rows, d) = require_matrix("mean_blocks", t)?;
        if blocks == 0 || rows % blocks != 0 {
            return Err(TensorError::Usage {
                op: "mean_blocks",
                reason: "row count not divisible by block count",
            });
        }
        let n = rows / blocks;
        let mut out = vec![0.0; n * d];
        for b in 0..blocks {
            for (o, &v) in out.iter_mut().zip(&t.data()[b * n * d..(b + 1) * n * d]) {
                *o += v;
            }
        }
        let inv = 1.0 / blocks as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        let out = Tensor::matrix(n, d, out)?;
        Ok(self.push(out, Op::MeanBlocks { x, blocks }))
    }

    /// Multi-head scaled dot-product self-attention without masking.
    ///
    /// `q`, `k`, `v` are `[(tokens·n)×d]` in token-major order: row
    /// `t·n + s` holds token `t` of sample `s`. Attention mixes tokens only
    /// within a sample; each of the `heads` heads uses a contiguous slice of
    /// `d / heads` columns.
    pub fn attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        tokens: usize,
        heads: usize,
    ) -> Result<Var, TensorError> {
        let (tq, tk, tv) = (self.value(q), self.value(k), self.value(v));
        if tq.shape() != tk.shape() {
            return Err(mismatch("attention", tq, tk));
        }
        if tq.shape() != tv.shape() {
            return Err(mismatch("attention", tq, tv));
        }
        let (rows, d) = require_matrix("attention", tq)?;
        if tokens == 0 || rows % tokens != 0 || heads == 0 || d % heads != 0 {
            return Err(TensorError::Usage {
                op: "attention",
                reason: "rows must divide into tokens and width into heads",
            });
        }
        let n = rows / tokens;
        let dh = d / heads;
        let scale = 1.0 / math::sqrt(dh as f64);
        let (qd, kd, vd) = (tq.data(), tk.data(), tv.data());
        let mut out = vec![0.0; rows * d];
        // attention weights laid out [sample][head][query][key]
        let mut weights = vec![0.0; n * heads * tokens * tokens];
        let mut scores = vec![0.0; tokens];
        for s in 0..n {
            for h in 0..heads {
                let c0 = h * dh;
                for t in 0..tokens {
                    let qrow = &qd[(t * n + s) * d + c0..(t * n + s) * d + c0 + dh];
                    for (u, sc) in scores.iter_mut().enumerate() {
                        let krow = &kd[(u * n + s) * d + c0..(u * n + s) * d + c0 + dh];
                        *sc = qrow.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>() * scale;
                    }
                    softmax_in_place(&mut scores);
                    let w0 = ((s * heads + h) * tokens + t) * tokens;
                    weights[w0..w0 + tokens].copy_from_slice(&scores);
                    let orow = &mut out[(t * n + s) * d + c0..(t * n + s) * d + c0 + dh];
                    for (u, &p) in scores.iter().enumerate() {
                        let vrow = &vd[(u * n + s) * d + c0..(u * n + s) * d + c0 + dh];
                        for (o, &vv) in orow.iter_mut().zip(vrow) {
                            *o += p * vv;
                        }
                    }
                }
            }
        }
        let out = Tensor::matrix(rows, d, out)?;
        if !out.is_finite() {
            return Err(TensorError::NonFinite { op: "attention" });
        }
        Ok(self.push_cached(
            out,
            Op::Attention {
                q,
                k,
                v,
                tokens,
                heads,
            },
            weights,
        ))
    }

    /// Attention weights recorded by an [`Graph::attention`] node, laid out
    /// `[sample][head][query][key]`.
    pub fn attention_weights(&self, node: Var) -> Option<&[f64]> {
        match self.nodes[node.0].op {
            Op::Attention { .. } => Some(&self.nodes[node.0].cache),
            _ => None,
        }
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let lt = self.value(loss);
        if lt.numel() != 1 {
            return Err(TensorError::NotScalar {
                shape: lt.shape().to_vec(),
            });
        }
        if !lt.is_finite() {
            return Err(TensorError::NonFinite { op: "loss" });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(lt.shape(), 1.0));
        let mut out = Gradients::default();

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let gd = g.data();
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => match out.by_param.get_mut(id) {
                    Some(acc) => {
                        for (a, b) in acc.data_mut().iter_mut().zip(gd) {
                            *a += b;
                        }
                    }
                    None => {
                        out.by_param.insert(*id, g);
                    }
                },
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k) = (ta.shape()[0], ta.shape()[1]);
                    let n = tb.shape()[1];
                    // dA = dC · Bᵀ
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        let grow = &gd[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &tb.data()[p * n..(p + 1) * n];
                            da[i * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                        }
                    }
                    // dB = Aᵀ · dC
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        let grow = &gd[i * n..(i + 1) * n];
                        for p in 0..k {
                            let av = ta.data()[i * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for (o, &gv) in db[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *o += av * gv;
                            }
                        }
                    }
                    accumulate(&mut grads[a.0], ta.shape(), &da);
                    accumulate(&mut grads[b.0], tb.shape(), &db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[a.0], g.shape(), gd);
                    accumulate(&mut grads[b.0], g.shape(), gd);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[a.0], g.shape(), gd);
                    let neg: Vec<f64> = gd.iter().map(|v| -v).collect();
                    accumulate(&mut grads[b.0], g.shape(), &neg);
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let da: Vec<f64> = gd.iter().zip(tb.data()).map(|(x, y)| x * y).collect();
                    let db: Vec<f64> = gd.iter().zip(ta.data()).map(|(x, y)| x * y).collect();
                    accumulate(&mut grads[a.0], g.shape(), &da);
                    accumulate(&mut grads[b.0], g.shape(), &db);
                }
                Op::Minimum(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let mut da = vec![0.0; gd.len()];
                    let mut db = vec![0.0; gd.len()];
                    for i in 0..gd.len() {
                        if ta.data()[i] <= tb.data()[i] {
                            da[i] = gd[i];
                        } else {
                            db[i] = gd[i];
                        }
                    }
                    accumulate(&mut grads[a.0], g.shape(), &da);
                    accumulate(&mut grads[b.0], g.shape(), &db);
                }
                Op::AddBias(x, bias) => {
                    accumulate(&mut grads[x.0], g.shape(), gd);
                    let d = self.value(*bias).numel();
                    let mut db = vec![0.0; d];
                    for row in gd.chunks(d) {
                        for (o, v) in db.iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads[bias.0], &[d], &db);
                }
                Op::Scale(x, c) => {
                    let dx: Vec<f64> = gd.iter().map(|v| v * c).collect();
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                }
                Op::Relu(x) => {
                    let tx = self.value(*x);
                    let dx: Vec<f64> = gd
                        .iter()
                        .zip(tx.data())
                        .map(|(gv, &xv)| if xv > 0.0 { *gv } else { 0.0 })
                        .collect();
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                }
                Op::Exp(x) => {
                    let dx: Vec<f64> = gd.iter().zip(node.value.data()).map(|(a, b)| a * b).collect();
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                }
                Op::Log(x) => {
                    let tx = self.value(*x);
                    let dx: Vec<f64> = gd.iter().zip(tx.data()).map(|(a, b)| a / b).collect();
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                }
                Op::Clamp(x, lo, hi) => {
                    let tx = self.value(*x);
                    let dx: Vec<f64> = gd
                        .iter()
                        .zip(tx.data())
                        .map(|(gv, &xv)| if xv >= *lo && xv <= *hi { *gv } else { 0.0 })
                        .collect();
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                }
                Op::Sum(x) => {
                    let tx = self.value(*x);
                    let dx = vec![gd[0]; tx.numel()];
                    accumulate(&mut grads[x.0], tx.shape(), &dx);
                }
                Op::Mean(x) => {
                    let tx = self.value(*x);
                    let dx = vec![gd[0] / tx.numel() as f64; tx.numel()];
                    accumulate(&mut grads[x.0], tx.shape(), &dx);
                }
                Op::Reshape(x) => {
                    let shape = self.value(*x).shape();
                    accumulate(&mut grads[x.0], shape, gd);
                }
                Op::SoftmaxRows(x) => {
                    let p = node.value.data();
                    let c = node.value.cols();
                    let mut dx = vec![0.0; gd.len()];
                    for r in 0..gd.len() / c {
                        let (gr, pr) = (&gd[r * c..(r + 1) * c], &p[r * c..(r + 1) * c]);
                        let dot: f64 = gr.iter().zip(pr).map(|(a, b)| a * b).sum();
                        for j in 0..c {
                            dx[r * c + j] = pr[j] * (gr[j] - dot);
                        }
                    }
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                }
                Op::LogSoftmaxRows(x) => {
                    let y = node.value.data();
                    let c = node.value.cols();
                    let mut dx = vec![0.0; gd.len()];
                    for r in 0..gd.len() / c {
                        let gr = &gd[r * c..(r + 1) * c];
                        let total: f64 = gr.iter().sum();
                        for j in 0..c {
                            dx[r * c + j] = gr[j] - math::exp(y[r * c + j]) * total;
                        }
                    }
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                }
                Op::LayerNorm { x, gain, bias } => {
                    let tg = self.value(*gain);
                    let d = tg.numel();
                    let numel = gd.len();
                    let rows = numel / d;
                    let (xhat, inv_std) = node.cache.split_at(numel);
                    let mut dx = vec![0.0; numel];
                    let mut dgain = vec![0.0; d];
                    let mut dbias = vec![0.0; d];
                    let mut dxhat = vec![0.0; d];
                    for r in 0..rows {
                        let gr = &gd[r * d..(r + 1) * d];
                        let xr = &xhat[r * d..(r + 1) * d];
                        for j in 0..d {
                            dgain[j] += gr[j] * xr[j];
                            dbias[j] += gr[j];
                            dxhat[j] = gr[j] * tg.data()[j];
                        }
                        let m1 = dxhat.iter().sum::<f64>() / d as f64;
                        let m2 = dxhat.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                        for j in 0..d {
                            dx[r * d + j] = inv_std[r] * (dxhat[j] - m1 - xr[j] * m2);
                        }
                    }
                    accumulate(&mut grads[x.0], g.shape(), &dx);
                    accumulate(&mut grads[gain.0], &[d], &dgain);
                    accumulate(&mut grads[bias.0], &[d], &dbias);
                }
                Op::Gather { table, indices } => {
                    let tt = self.value(*table);
                    let d = tt.cols();
                    let mut dt = vec![0.0; tt.numel()];
                    for (r, &i) in indices.iter().enumerate() {
                        for (o, v) in dt[i * d..(i + 1) * d].iter_mut().zip(&gd[r * d..(r + 1) * d]) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads[table.0], tt.shape(), &dt);
                }
                Op::PickColumns { x, indices } => {
                    let tx = self.value(*x);
                    let k = tx.cols();
                    let mut dx = vec![0.0; tx.numel()];
                    for (r, &i) in indices.iter().enumerate() {
                        dx[r * k + i] = gd[r];
                    }
                    accumulate(&mut grads[x.0], tx.shape(), &dx);
                }
                Op::ConcatCols(parts) => {
                    let total = g.cols();
                    let n = g.rows();
                    let mut offset = 0;
                    for p in parts {
                        let tp = self.value(*p);
                        let c = tp.cols();
                        let mut dp = Vec::with_capacity(n * c);
                        for r in 0..n {
                            dp.extend_from_slice(&gd[r * total + offset..r * total + offset + c]);
                        }
                        accumulate(&mut grads[p.0], tp.shape(), &dp);
                        offset += c;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let tp = self.value(*p);
                        let len = tp.numel();
                        accumulate(&mut grads[p.0], tp.shape(), &gd[offset..offset + len]);
                        offset += len;
                    }
                }
                Op::MeanBlocks { x, blocks } => {
                    let tx = self.value(*x);
                    let inv = 1.0 / *blocks as f64;
                    let mut dx = Vec::with_capacity(tx.numel());
                    for _ in 0..*blocks {
                        dx.extend(gd.iter().map(|v| v * inv));
                    }
                    accumulate(&mut grads[x.0], tx.shape(), &dx);
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    tokens,
                    heads,
                } => {
                    let (tokens, heads) = (*tokens, *heads);
                    let (tq, tk, tv) = (self.value(*q), self.value(*k), self.value(*v));
                    let (qd, kd, vd) = (tq.data(), tk.data(), tv.data());
                    let (rows, d) = (tq.shape()[0], tq.shape()[1]);
                    let n = rows / tokens;
                    let dh = d / heads;
                    let scale = 1.0 / math::sqrt(dh as f64);
                    let weights = &node.cache;
                    let mut dq = vec![0.0; rows * d];
                    let mut dk = vec![0.0; rows * d];
                    let mut dv = vec![0.0; rows * d];
                    let mut dp = vec![0.0; tokens];
                    for s in 0..n {
                        for h in 0..heads {
                            let c0 = h * dh;
                            for t in 0..tokens {
                                let w0 = ((s * heads + h) * tokens + t) * tokens;
                                let p = &weights[w0..w0 + tokens];
                                let go = (t * n + s) * d + c0;
                                let grow = &gd[go..go + dh];
                                for u in 0..tokens {
                                    let vo = (u * n + s) * d + c0;
                                    dp[u] = grow.iter().zip(&vd[vo..vo + dh]).map(|(a, b)| a * b).sum();
                                    for (o, gv) in dv[vo..vo + dh].iter_mut().zip(grow) {
                                        *o += p[u] * gv;
                                    }
                                }
                                let dot: f64 = dp.iter().zip(p).map(|(a, b)| a * b).sum();
                                let qo = (t * n + s) * d + c0;
                                for u in 0..tokens {
                                    let ds = p[u] * (dp[u] - dot) * scale;
                                    if ds == 0.0 {
                                        continue;
                                    }
                                    let ko = (u * n + s) * d + c0;
                                    for j in 0..dh {
                                        dq[qo + j] += ds * kd[ko + j];
                                        dk[ko + j] += ds * qd[qo + j];
                                    }
                                }
                            }
                        }
                    }
                    accumulate(&mut grads[q.0], tq.shape(), &dq);
                    accumulate(&mut grads[k.0], tk.shape(), &dk);
                    accumulate(&mut grads[v.0], tv.shape(), &dv);
                }
            }
        }
        Ok(out)
    }
}
