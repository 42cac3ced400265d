//! Straight-line evaluation of the attention-free degeneration: when query
//! and key projections and the pooling query are all zero, every attention
//! block mixes tokens only through a uniform average, so the whole network
//! can be computed with plain loops and means — no softmax, no scores.

use persformer_core::model::{Activation, ModelState, Pooling};

fn affine(x: &[f64], w: &[f64], b: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = b.to_vec();
    for i in 0..rows {
        for j in 0..cols {
            out[j] += x[i] * w[i * cols + j];
        }
    }
    out
}

fn layer_norm(row: &mut [f64], gamma: &[f64], beta: &[f64]) {
    let d = row.len() as f64;
    let mean = row.iter().sum::<f64>() / d;
    let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d;
    let rstd = 1.0 / (var + 1e-5).sqrt();
    for (i, x) in row.iter_mut().enumerate() {
        *x = (*x - mean) * rstd * gamma[i] + beta[i];
    }
}

fn act(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Gelu => 0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2)),
        Activation::Relu => x.max(0.0),
    }
}

/// Evaluate the deep-sets-mode model on the live tokens of one diagram.
/// `tokens` holds only live feature rows (no padding).
pub fn deep_sets_logits(state: &ModelState, tokens: &[Vec<f64>]) -> Vec<f64> {
    let config = &state.config;
    let d = config.hidden_dim;
    let n = tokens.len();
    assert!(n > 0);

    let w = |name: &str| state.get(name).data();
    let embed_w = w("embed.w");
    let embed_b = w("embed.b");
    let mut h: Vec<Vec<f64>> = tokens
        .iter()
        .map(|t| affine(t, embed_w, embed_b, config.input_dim, d))
        .collect();

    for layer in 0..config.n_layers {
        let wv = w(&format!("layer{layer}.wv"));
        let wo = w(&format!("layer{layer}.wo"));
        // Uniform attention: every token receives mean(value) . Wo.
        let mut mean_v = vec![0.0; d];
        for token in &h {
            let v = affine(token, wv, &vec![0.0; d], d, d);
            for (m, x) in mean_v.iter_mut().zip(&v) {
                *m += x / n as f64;
            }
        }
        let mixed = affine(&mean_v, wo, &vec![0.0; d], d, d);

        for token in h.iter_mut() {
            let mut a: Vec<f64> = if config.use_residual {
                token.iter().zip(&mixed).map(|(t, m)| t + m).collect()
            } else {
                mixed.clone()
            };
            if config.use_layer_norm {
                layer_norm(
                    &mut a,
                    w(&format!("layer{layer}.ln1.gamma")),
                    w(&format!("layer{layer}.ln1.beta")),
                );
            }
            let f1 = affine(
                &a,
                w(&format!("layer{layer}.ffn.w1")),
                w(&format!("layer{layer}.ffn.b1")),
                d,
                config.ffn_hidden,
            );
            let f1a: Vec<f64> = f1.iter().map(|&x| act(config.activation, x)).collect();
            let f2 = affine(
                &f1a,
                w(&format!("layer{layer}.ffn.w2")),
                w(&format!("layer{layer}.ffn.b2")),
                config.ffn_hidden,
                d,
            );
            let mut out: Vec<f64> = if config.use_residual {
                a.iter().zip(&f2).map(|(x, y)| x + y).collect()
            } else {
                f2
            };
            if config.use_layer_norm {
                layer_norm(
                    &mut out,
                    w(&format!("layer{layer}.ln2.gamma")),
                    w(&format!("layer{layer}.ln2.beta")),
                );
            }
            *token = out;
        }
    }

    // Zero pooling query: per-head uniform average of values = mean of the
    // full value vectors; then the output projection.
    let wv = w("pool.wv");
    let wo = w("pool.wo");
    let mut mean_v = vec![0.0; d];
    for token in &h {
        let v = affine(token, wv, &vec![0.0; d], d, d);
        for (m, x) in mean_v.iter_mut().zip(&v) {
            *m += x / n as f64;
        }
    }
    let mut pooled = affine(&mean_v, wo, &vec![0.0; d], d, d);
    if config.pooling == Pooling::AttentionPlusSum {
        let mut summed = vec![0.0; d];
        for token in &h {
            for (s, x) in summed.iter_mut().zip(token) {
                *s += x;
            }
        }
        pooled.extend_from_slice(&summed);
    }

    // Decoder (eval mode, no dropout).
    let mut out = pooled;
    let n_affine = config.decoder_layers.len() - 1;
    for i in 0..n_affine {
        let rows = config.decoder_layers[i];
        let cols = config.decoder_layers[i + 1];
        out = affine(
            &out,
            w(&format!("decoder{i}.w")),
            w(&format!("decoder{i}.b")),
            rows,
            cols,
        );
        if i + 1 < n_affine {
            for x in out.iter_mut() {
                *x = act(config.activation, *x);
            }
        }
    }
    out
}
