//! The network forward pass built on the autodiff tape: position-wise
//! embedding, stacked masked multi-head self-attention with residual
//! connections, multi-head attention pooling with a single trainable query,
//! and a fully connected decoder.
//!
//! No positional information of any kind enters the computation, so the
//! logits are invariant under permutations of the live sequence positions
//! and unaffected by padding.

use crate::autodiff::{NdArray, Tape, Var};
use crate::error::Result;
use crate::model::config::{Activation, PersformerConfig, Pooling};
use crate::model::state::ModelState;
use std::collections::HashMap;

/// Handles into the tape after a forward pass.
pub struct ForwardPass {
    /// The `[B, N, F]` input leaf (for input-gradient attribution).
    pub input: Var,
    /// `[B, C]` output logits.
    pub logits: Var,
    /// Parameter leaves aligned with `ModelState` order (for optimizers).
    pub param_vars: Vec<Var>,
}

struct Params<'a> {
    vars: Vec<Var>,
    by_name: HashMap<&'a str, Var>,
}

fn load_params<'a>(tape: &mut Tape<f64>, state: &'a ModelState) -> Params<'a> {
    let mut vars = Vec::with_capacity(state.len());
    let mut by_name = HashMap::with_capacity(state.len());
    for (name, value) in state.names().iter().zip(state.values()) {
        let var = tape.leaf(value.clone());
        vars.push(var);
        by_name.insert(name.as_str(), var);
    }
    Params { vars, by_name }
}

impl Params<'_> {
    fn get(&self, name: &str) -> Var {
        *self
            .by_name
            .get(name)
            .unwrap_or_else(|| panic!("missing parameter {name}"))
    }
}

fn activation(tape: &mut Tape<f64>, kind: Activation, x: Var) -> Var {
    match kind {
        Activation::Gelu => tape.gelu(x),
        Activation::Relu => tape.relu(x),
    }
}

/// One self-attention layer: multi-head attention, residual, optional layer
/// norm, position-wise FFN, residual, optional layer norm (post-norm).
#[allow(clippy::too_many_arguments)]
fn self_attention_layer(
    tape: &mut Tape<f64>,
    config: &PersformerConfig,
    params: &Params<'_>,
    layer: usize,
    x: Var,
    mask: &NdArray<f64>,
) -> Result<Var> {
    let heads = config.n_heads;
    let dh = config.hidden_dim / heads;

    let q_full = tape.matmul(x, params.get(&format!("layer{layer}.wq")))?;
    let k_full = tape.matmul(x, params.get(&format!("layer{layer}.wk")))?;
    let v_full = tape.matmul(x, params.get(&format!("layer{layer}.wv")))?;
    let q = tape.split_heads(q_full, heads)?;
    let k = tape.split_heads(k_full, heads)?;
    let v = tape.split_heads(v_full, heads)?;
    let scores = tape.matmul_t(q, k, true)?;
    let scaled = tape.scale(scores, 1.0 / (dh as f64).sqrt());
    let probs = tape.softmax_masked(scaled, Some(mask))?;
    let context = tape.matmul(probs, v)?;
    let merged = tape.merge_heads(context)?;
    let attn = tape.matmul(merged, params.get(&format!("layer{layer}.wo")))?;

    let mut h = if config.use_residual {
        tape.add(x, attn)?
    } else {
        attn
    };
    if config.use_layer_norm {
        h = tape.layer_norm(
            h,
            params.get(&format!("layer{layer}.ln1.gamma")),
            params.get(&format!("layer{layer}.ln1.beta")),
        )?;
    }

    let f1 = tape.linear(
        h,
        params.get(&format!("layer{layer}.ffn.w1")),
        params.get(&format!("layer{layer}.ffn.b1")),
    )?;
    let f1a = activation(tape, config.activation, f1);
    let f2 = tape.linear(
        f1a,
        params.get(&format!("layer{layer}.ffn.w2")),
        params.get(&format!("layer{layer}.ffn.b2")),
    )?;
    let mut out = if config.use_residual {
        tape.add(h, f2)?
    } else {
        f2
    };
    if config.use_layer_norm {
        out = tape.layer_norm(
            out,
            params.get(&format!("layer{layer}.ln2.gamma")),
            params.get(&format!("layer{layer}.ln2.beta")),
        )?;
    }
    Ok(out)
}

/// Multi-head attention pooling: a single trainable query row attends over
/// the live positions; heads are merged and projected back to width `d`.
fn attention_pool(
    tape: &mut Tape<f64>,
    config: &PersformerConfig,
    params: &Params<'_>,
    x: Var,
    mask: &NdArray<f64>,
) -> Result<Var> {
    let heads = config.n_heads;
    let dh = config.hidden_dim / heads;
    let batch = tape.value(x).shape()[0];

    let k_full = tape.matmul(x, params.get("pool.wk"))?;
    let v_full = tape.matmul(x, params.get("pool.wv"))?;
    let k = tape.split_heads(k_full, heads)?;
    let v = tape.split_heads(v_full, heads)?;
    let query = tape.broadcast0(params.get("pool.query"), batch);
    let q = tape.split_heads(query, heads)?;
    let scores = tape.matmul_t(q, k, true)?;
    let scaled = tape.scale(scores, 1.0 / (dh as f64).sqrt());
    let probs = tape.softmax_masked(scaled, Some(mask))?;
    let context = tape.matmul(probs, v)?;
    let merged = tape.merge_heads(context)?;
    let flat = tape.reshape(merged, &[batch, config.hidden_dim])?;
    let pooled = tape.matmul(flat, params.get("pool.wo"))?;
    match config.pooling {
        Pooling::Attention => Ok(pooled),
        Pooling::AttentionPlusSum => {
            let summed = tape.sum_masked(x, mask)?;
            tape.concat_last(pooled, summed)
        }
    }
}

fn decoder(
    tape: &mut Tape<f64>,
    config: &PersformerConfig,
    params: &Params<'_>,
    pooled: Var,
    train: bool,
    dropout_seed: u64,
) -> Result<Var> {
    let n_affine = config.decoder_layers.len() - 1;
    let mut h = pooled;
    for i in 0..n_affine {
        h = tape.linear(
            h,
            params.get(&format!("decoder{i}.w")),
            params.get(&format!("decoder{i}.b")),
        )?;
        if i + 1 < n_affine {
            h = activation(tape, config.activation, h);
            h = tape.dropout(
                h,
                config.dropout_decoder,
                train,
                dropout_seed.wrapping_add(i as u64),
            );
        }
    }
    Ok(h)
}

/// Encoder only: embedding followed by the self-attention stack. Exposed so
/// the permutation-equivariance property can be checked directly.
pub fn encode_on_tape(
    tape: &mut Tape<f64>,
    state: &ModelState,
    features: &NdArray<f64>,
    mask: &NdArray<f64>,
) -> Result<(Var, Var)> {
    let params = load_params(tape, state);
    let input = tape.leaf(features.clone());
    let mut h = tape.linear(input, params.get("embed.w"), params.get("embed.b"))?;
    for layer in 0..state.config.n_layers {
        h = self_attention_layer(tape, &state.config, &params, layer, h, mask)?;
    }
    Ok((input, h))
}

/// Full forward pass on an existing tape.
pub fn forward_on_tape(
    tape: &mut Tape<f64>,
    state: &ModelState,
    features: &NdArray<f64>,
    mask: &NdArray<f64>,
    train: bool,
    dropout_seed: u64,
) -> Result<ForwardPass> {
    let config = &state.config;
    let params = load_params(tape, state);
    let input = tape.leaf(features.clone());
    let mut h = tape.linear(input, params.get("embed.w"), params.get("embed.b"))?;
    for layer in 0..config.n_layers {
        h = self_attention_layer(tape, config, &params, layer, h, mask)?;
    }
    let pooled = attention_pool(tape, config, &params, h, mask)?;
    let logits = decoder(tape, config, &params, pooled, train, dropout_seed)?;
    Ok(ForwardPass {
        input,
        logits,
        param_vars: params.vars,
    })
}

/// Evaluation-mode logits for a padded batch.
pub fn forward_logits(
    state: &ModelState,
    features: &NdArray<f64>,
    mask: &NdArray<f64>,
) -> Result<NdArray<f64>> {
    let mut tape = Tape::new();
    let pass = forward_on_tape(&mut tape, state, features, mask, false, 0)?;
    Ok(tape.value(pass.logits).clone())
}
