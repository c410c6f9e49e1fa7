//! Central finite-difference check of reverse-mode gradients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng as _, SeedableRng};

use super::{Graph, ParamId, ParamStore, Tensor, TensorError, Var};
use crate::rng::Rng;

/// Below this magnitude both gradients count as zero-ish and the error is
/// measured against this floor instead of their size.
pub const GRAD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, GRAD_FLOOR)`.
    pub max_rel_error: f64,
    /// Parameter and flat element index where `max_rel_error` occurred.
    pub worst: Option<(ParamId, usize)>,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Compares the gradient of the scalar built by `loss` against central
/// differences with step `h`, for every element of every parameter.
///
/// `store` gives mutable access to the parameters inside `model`; the
/// model is restored before returning.
pub fn check_gradients<M>(
    model: &mut M,
    store: impl Fn(&mut M) -> &mut ParamStore,
    h: f64,
    loss: impl Fn(&M, &mut Graph) -> Result<Var, TensorError>,
) -> Result<GradCheck, TensorError> {
    let eval = |m: &M| -> Result<f64, TensorError> {
        let mut g = Graph::new();
        let l = loss(m, &mut g)?;
        Ok(g.value(l).data()[0])
    };
    let grads = {
        let mut g = Graph::new();
        let l = loss(model, &mut g)?;
        g.backward(l)?
    };
    let ids: Vec<ParamId> = store(model).ids().collect();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for id in ids {
        let n = store(model).get(id).numel();
        for i in 0..n {
            let orig = store(model).get(id).data()[i];
            store(model).get_mut(id).data_mut()[i] = orig + h;
            let up = eval(model)?;
            store(model).get_mut(id).data_mut()[i] = orig - h;
            let down = eval(model)?;
            store(model).get_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.get(id).map_or(0.0, |t| t.data()[i]);
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((id, i));
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

/// Names accepted by [`check_op`]: every differentiable graph op.
pub const OPS: &[&str] = &[
    "matmul",
    "add",
    "sub",
    "mul",
    "minimum",
    "add_bias",
    "affine",
    "scale",
    "relu",
    "exp",
    "log",
    "clamp",
    "sum",
    "mean",
    "reshape",
    "softmax_rows",
    "log_softmax_rows",
    "layer_norm",
    "gather",
    "pick_columns",
    "concat_cols",
    "concat_rows",
    "mean_blocks",
    "attention",
];

struct OpCase {
    store: ParamStore,
    inputs: Vec<ParamId>,
    indices: Vec<usize>,
    dims: [usize; 2],
    factor: f64,
    weights: Tensor,
}

fn uniform(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).expect("valid shape")
}

/// Uniform in `[-1, 1]` but at least `gap` away from `at`.
fn away_from(rng: &mut Rng, shape: &[usize], at: f64, gap: f64) -> Tensor {
    let mut t = uniform(rng, shape, -1.0, 1.0);
    for v in t.data_mut() {
        if (*v - at).abs() < gap {
            *v = if *v >= at { at + gap } else { at - gap };
        }
    }
    t
}

fn apply(name: &str, g: &mut Graph, x: &[Var], case: &OpCase) -> Result<Var, TensorError> {
    match name {
        "matmul" => g.matmul(x[0], x[1]),
        "add" => g.add(x[0], x[1]),
        "sub" => g.sub(x[0], x[1]),
        "mul" => g.mul(x[0], x[1]),
        "minimum" => g.minimum(x[0], x[1]),
        "add_bias" => g.add_bias(x[0], x[1]),
        "affine" => g.affine(x[0], x[1], x[2]),
        "scale" => Ok(g.scale(x[0], case.factor)),
        "relu" => Ok(g.relu(x[0])),
        "exp" => Ok(g.exp(x[0])),
        "log" => Ok(g.log(x[0])),
        "clamp" => Ok(g.clamp(x[0], -0.5, 0.5)),
        "sum" => Ok(g.sum(x[0])),
        "mean" => Ok(g.mean(x[0])),
        "reshape" => g.reshape(x[0], vec![case.dims[1], case.dims[0]]),
        "softmax_rows" => g.softmax_rows(x[0]),
        "log_softmax_rows" => g.log_softmax_rows(x[0]),
        "layer_norm" => g.layer_norm(x[0], x[1], x[2]),
        "gather" => g.gather(x[0], &case.indices),
        "pick_columns" => g.pick_columns(x[0], &case.indices),
        "concat_cols" => g.concat_cols(x),
        "concat_rows" => g.concat_rows(x),
        "mean_blocks" => g.mean_blocks(x[0], case.dims[0]),
        "attention" => g.attention(x[0], x[1], x[2], case.dims[0], case.dims[1]),
        _ => Err(TensorError::Usage {
            op: "check_op",
            reason: "unknown op name",
        }),
    }
}

fn build_case(name: &str, rng: &mut Rng) -> OpCase {
    let mut dim = |lo: usize, hi: usize| rng.random_range(lo..=hi);
    let (n, k, m) = (dim(1, 4), dim(1, 5), dim(1, 4));
    let mut inputs: Vec<Tensor> = Vec::new();
    let mut indices = Vec::new();
    let mut dims = [n, k];
    let factor = rng.random_range(-2.0..2.0);
    match name {
        "matmul" => {
            inputs.push(uniform(rng, &[n, k], -1.0, 1.0));
            inputs.push(uniform(rng, &[k, m], -1.0, 1.0));
        }
        "add" | "sub" | "mul" => {
            inputs.push(uniform(rng, &[n, k], -1.0, 1.0));
            inputs.push(uniform(rng, &[n, k], -1.0, 1.0));
        }
        "minimum" => {
            let a = uniform(rng, &[n, k], -1.0, 1.0);
            let mut b = uniform(rng, &[n, k], -1.0, 1.0);
            for (bv, &av) in b.data_mut().iter_mut().zip(a.data()) {
                if (*bv - av).abs() < 0.05 {
                    *bv = av + 0.1;
                }
            }
            inputs.push(a);
            inputs.push(b);
        }
        "add_bias" => {
            inputs.push(uniform(rng, &[n, k], -1.0, 1.0));
            inputs.push(uniform(rng, &[k], -1.0, 1.0));
        }
        "affine" => {
            inputs.push(uniform(rng, &[n, k], -1.0, 1.0));
            inputs.push(uniform(rng, &[k, m], -1.0, 1.0));
            inputs.push(uniform(rng, &[m], -1.0, 1.0));
        }
        "relu" => inputs.push(away_from(rng, &[n, k], 0.0, 0.05)),
        "clamp" => {
            let mut t = away_from(rng, &[n, k], 0.5, 0.05);
            for v in t.data_mut() {
                if (*v + 0.5).abs() < 0.05 {
                    *v = if *v >= -0.5 { -0.45 } else { -0.55 };
                }
            }
            inputs.push(t);
        }
        "exp" => inputs.push(uniform(rng, &[n, k], -2.0, 2.0)),
        "log" => inputs.push(uniform(rng, &[n, k], 0.5, 3.0)),
        "scale" | "sum" | "mean" | "reshape" => inputs.push(uniform(rng, &[n, k], -1.0, 1.0)),
        "softmax_rows" | "log_softmax_rows" => {
            let k = k.max(2);
            inputs.push(uniform(rng, &[n, k], -3.0, 3.0));
        }
        "layer_norm" => {
            let d = k.max(2);
            inputs.push(uniform(rng, &[n, d], -2.0, 2.0));
            inputs.push(uniform(rng, &[d], 0.5, 1.5));
            inputs.push(uniform(rng, &[d], -0.5, 0.5));
        }
        "gather" => {
            let len = m + 1;
            indices = (0..len).map(|_| rng.random_range(0..n)).collect();
            inputs.push(uniform(rng, &[n, k], -1.0, 1.0));
        }
        "pick_columns" => {
            indices = (0..n).map(|_| rng.random_range(0..k)).collect();
            inputs.push(uniform(rng, &[n, k], -1.0, 1.0));
        }
        "concat_cols" => {
            for _ in 0..m.min(3) + 1 {
                let c = rng.random_range(1..=3);
                inputs.push(uniform(rng, &[n, c], -1.0, 1.0));
            }
        }
        "concat_rows" => {
            for _ in 0..m.min(3) + 1 {
                let r = rng.random_range(1..=3);
                inputs.push(uniform(rng, &[r, k], -1.0, 1.0));
            }
        }
        "mean_blocks" => {
            dims = [m, n];
            inputs.push(uniform(rng, &[m * n, k], -1.0, 1.0));
        }
        "attention" => {
            let tokens = rng.random_range(1..=4);
            let heads = rng.random_range(1..=2);
            let dh = rng.random_range(1..=3);
            dims = [tokens, heads];
            for _ in 0..3 {
                inputs.push(uniform(rng, &[tokens * n, heads * dh], -1.5, 1.5));
            }
        }
        _ => {}
    }
    let mut store = ParamStore::new();
    let ids = inputs
        .into_iter()
        .enumerate()
        .map(|(i, t)| store.add(format!("input{i}"), t))
        .collect();
    OpCase {
        store,
        inputs: ids,
        indices,
        dims,
        factor,
        weights: Tensor::scalar(0.0),
    }
}

fn case_loss(name: &str, case: &OpCase, g: &mut Graph) -> Result<Var, TensorError> {
    let vars: Vec<Var> = case.inputs.iter().map(|&id| g.param(id, case.store.get(id))).collect();
    let out = apply(name, g, &vars, case)?;
    let w = g.constant(case.weights.clone());
    let weighted = g.mul(out, w)?;
    Ok(g.sum(weighted))
}

/// Gradient check of one op on random inputs drawn from `seed`. The op
/// output is contracted with random weights so every output element
/// contributes to the scalar loss.
pub fn check_op(name: &'static str, seed: u64, h: f64) -> Result<GradCheck, TensorError> {
    let mut rng = Rng::seed_from_u64(seed);
    let mut case = build_case(name, &mut rng);
    let shape = {
        let mut g = Graph::new();
        let vars: Vec<Var> = case.inputs.iter().map(|&id| g.param(id, case.store.get(id))).collect();
        let out = apply(name, &mut g, &vars, &case)?;
        g.value(out).shape().to_vec()
    };
    case.weights = uniform(&mut rng, &shape, -1.0, 1.0);
    check_gradients(&mut case, |c| &mut c.store, h, |c, g| case_loss(name, c, g))
}
