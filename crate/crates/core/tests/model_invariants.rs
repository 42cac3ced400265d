//! Structural properties of the network: permutation invariance and
//! equivariance, padding neutrality, the attention-free degeneration against
//! an independent straight-line evaluation, residual gradient flow, and an
//! end-to-end finite-difference check.

mod common;

use common::deep_sets::deep_sets_logits;
use common::unit;
use persformer_core::autodiff::{NdArray, Tape};
use persformer_core::model::{
    encode_on_tape, forward_logits, forward_on_tape, ModelState, PersformerConfig, Pooling,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_config() -> PersformerConfig {
    let mut c = PersformerConfig::new(4, 16, 2, 4, vec![16, 12, 5]);
    c.dropout_decoder = 0.0;
    c
}

/// Random live-token features shaped like featurized diagram points.
fn random_tokens(rng: &mut ChaCha8Rng, n: usize, width: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut row = vec![0.0; width];
            row[0] = unit(rng);
            row[1] = row[0] + unit(rng);
            let hot = 2 + (unit(rng) * (width - 2) as f64) as usize;
            row[hot.min(width - 1)] = 1.0;
            row
        })
        .collect()
}

fn to_padded(tokens: &[Vec<f64>], n_max: usize) -> (NdArray<f64>, NdArray<f64>) {
    let width = tokens[0].len();
    let mut features = vec![0.0; n_max * width];
    let mut mask = vec![0.0; n_max];
    for (i, t) in tokens.iter().enumerate() {
        features[i * width..(i + 1) * width].copy_from_slice(t);
        mask[i] = 1.0;
    }
    (
        NdArray::from_vec(&[1, n_max, width], features),
        NdArray::from_vec(&[1, n_max], mask),
    )
}

#[test]
fn forward_is_permutation_invariant_up_to_50_points() {
    let config = small_config();
    let state = ModelState::init(&config, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for &n in &[3usize, 17, 50] {
        let tokens = random_tokens(&mut rng, n, config.input_dim);
        let (features, mask) = to_padded(&tokens, n);
        let base = forward_logits(&state, &features, &mask).unwrap();
        for _ in 0..4 {
            let mut permuted = tokens.clone();
            permuted.shuffle(&mut rng);
            let (pf, pm) = to_padded(&permuted, n);
            let out = forward_logits(&state, &pf, &pm).unwrap();
            let dev = base
                .data()
                .iter()
                .zip(out.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-10, "n={n}: deviation {dev}");
        }
    }
}

#[test]
fn encoder_is_permutation_equivariant() {
    let config = small_config();
    let state = ModelState::init(&config, 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let n = 12;
    let tokens = random_tokens(&mut rng, n, config.input_dim);
    let (features, mask) = to_padded(&tokens, n);
    let mut tape = Tape::new();
    let (_, enc) = encode_on_tape(&mut tape, &state, &features, &mask).unwrap();
    let base = tape.value(enc).clone();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let permuted: Vec<Vec<f64>> = order.iter().map(|&i| tokens[i].clone()).collect();
    let (pf, pm) = to_padded(&permuted, n);
    let mut tape2 = Tape::new();
    let (_, enc2) = encode_on_tape(&mut tape2, &state, &pf, &pm).unwrap();
    let out = tape2.value(enc2);

    let d = config.hidden_dim;
    for (new_pos, &old_pos) in order.iter().enumerate() {
        for j in 0..d {
            let a = base.data()[old_pos * d + j];
            let b = out.data()[new_pos * d + j];
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn padding_rows_change_nothing() {
    let config = small_config();
    let state = ModelState::init(&config, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tokens = random_tokens(&mut rng, 9, config.input_dim);
    let (f0, m0) = to_padded(&tokens, 9);
    let (f1, m1) = to_padded(&tokens, 16); // 7 extra padded rows
    let a = forward_logits(&state, &f0, &m0).unwrap();
    let b = forward_logits(&state, &f1, &m1).unwrap();
    for (x, y) in a.data().iter().zip(b.data()) {
        assert_eq!(x, y, "padding must be exactly neutral");
    }
}

#[test]
fn deep_sets_mode_matches_straight_line_evaluation() {
    for pooling in [Pooling::Attention, Pooling::AttentionPlusSum] {
        let mut config = small_config();
        config.pooling = pooling;
        if pooling == Pooling::AttentionPlusSum {
            config.decoder_layers = vec![32, 12, 5];
        }
        let state = ModelState::init(&config, 3).unwrap().deep_sets_mode();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for &n in &[1usize, 6, 23] {
            let tokens = random_tokens(&mut rng, n, config.input_dim);
            let (features, mask) = to_padded(&tokens, n + 3);
            let tape_logits = forward_logits(&state, &features, &mask).unwrap();
            let oracle = deep_sets_logits(&state, &tokens);
            for (a, b) in tape_logits.data().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b} (n={n}, {pooling:?})");
            }
        }
    }
}

#[test]
fn duplicated_point_changes_mean_pooled_output() {
    // Documents mean-vs-sum semantics: with mean pooling (uniform attention
    // over live tokens), duplicating a point changes the live count and so
    // the pooled vector, unless the point already equals the mean.
    let config = small_config();
    let state = ModelState::init(&config, 3).unwrap().deep_sets_mode();
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let tokens = random_tokens(&mut rng, 4, config.input_dim);
    let mut duplicated = tokens.clone();
    duplicated.push(tokens[0].clone());
    let a = deep_sets_logits(&state, &tokens);
    let b = deep_sets_logits(&state, &duplicated);
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    assert!(diff > 1e-8);
}

#[test]
fn residuals_improve_gradient_flow_to_embedding() {
    let mut with_res = PersformerConfig::new(4, 16, 5, 4, vec![16, 12, 5]);
    with_res.dropout_decoder = 0.0;
    let mut without_res = with_res.clone();
    without_res.use_residual = false;

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let tokens = random_tokens(&mut rng, 20, 4);
    let (features, mask) = to_padded(&tokens, 20);

    let grad_norm = |config: &PersformerConfig| -> f64 {
        let state = ModelState::init(config, 55).unwrap();
        let mut tape = Tape::new();
        let pass = forward_on_tape(&mut tape, &state, &features, &mask, false, 0).unwrap();
        let loss = tape.cross_entropy_logits(pass.logits, &[2]).unwrap();
        tape.backward(loss).unwrap();
        // embedding weight is the first parameter
        let g = tape.grad(pass.param_vars[0]).unwrap();
        g.data().iter().map(|x| x * x).sum::<f64>().sqrt()
    };

    let with_norm = grad_norm(&with_res);
    let without_norm = grad_norm(&without_res);
    assert!(
        with_norm > without_norm,
        "residual grad norm {with_norm} should exceed {without_norm}"
    );
}

#[test]
fn model_level_finite_difference_check() {
    // 2-layer, d = 8 model: sampled parameter coordinates and all input
    // coordinates against central differences, relative error < 1e-5.
    let mut config = PersformerConfig::new(4, 8, 2, 2, vec![8, 6, 3]);
    config.dropout_decoder = 0.0;
    let state = ModelState::init(&config, 71).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tokens = random_tokens(&mut rng, 5, 4);
    let (features, mask) = to_padded(&tokens, 6);
    let targets = [1usize];

    let loss_of = |state: &ModelState, features: &NdArray<f64>| -> f64 {
        let mut tape = Tape::new();
        let pass = forward_on_tape(&mut tape, state, features, &mask, false, 0).unwrap();
        let loss = tape.cross_entropy_logits(pass.logits, &targets).unwrap();
        tape.value(loss).data()[0]
    };

    // Analytic gradients.
    let mut tape = Tape::new();
    let pass = forward_on_tape(&mut tape, &state, &features, &mask, false, 0).unwrap();
    let loss = tape.cross_entropy_logits(pass.logits, &targets).unwrap();
    tape.backward(loss).unwrap();

    let check = |ad: f64, fd: f64, what: &str| {
        let err = (ad - fd).abs();
        let bound = 1e-9 + 1e-5 * ad.abs().max(fd.abs());
        assert!(err <= bound, "{what}: analytic {ad} vs fd {fd}");
    };

    // All input coordinates.
    let input_grad = tape.grad(pass.input).unwrap().clone();
    for j in 0..features.numel() {
        let x = features.data()[j];
        let h = 1e-5 * (1.0 + x.abs());
        let mut plus = features.clone();
        plus.data_mut()[j] = x + h;
        let mut minus = features.clone();
        minus.data_mut()[j] = x - h;
        let fd = (loss_of(&state, &plus) - loss_of(&state, &minus)) / (2.0 * h);
        check(input_grad.data()[j], fd, &format!("input[{j}]"));
    }

    // Sampled parameter coordinates from every tensor.
    for (pi, var) in pass.param_vars.iter().enumerate() {
        let grad = tape.grad(*var).unwrap().clone();
        let numel = state.values()[pi].numel();
        let step = (numel / 7).max(1);
        for j in (0..numel).step_by(step) {
            let x = state.values()[pi].data()[j];
            let h = 1e-5 * (1.0 + x.abs());
            let mut splus = state.clone();
            splus.values_mut()[pi].data_mut()[j] = x + h;
            let mut sminus = state.clone();
            sminus.values_mut()[pi].data_mut()[j] = x - h;
            let fd = (loss_of(&splus, &features) - loss_of(&sminus, &features)) / (2.0 * h);
            check(grad.data()[j], fd, &format!("param {pi}[{j}]"));
        }
    }
}
