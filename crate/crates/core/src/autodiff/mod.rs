//! Minimal reverse-mode automatic differentiation over dense arrays,
//! covering exactly the operator set the network needs.

pub mod array;
pub mod element;
pub mod tape;

pub use array::{batched_matmul, NdArray};
pub use element::Element;
pub use tape::{Tape, Var, LAYER_NORM_EPS};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_of_sum_is_ones() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[2, 2], vec![1.0, -2.0, 3.0, 0.5]));
        let loss = tape.sum(x);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn mse_at_target_has_zero_grads() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[3], vec![0.1, 0.2, 0.3]));
        let target = NdArray::from_vec(&[3], vec![0.1, 0.2, 0.3]);
        let loss = tape.mse(x, &target).unwrap();
        assert_eq!(tape.value(loss).data()[0], 0.0);
        tape.backward(loss).unwrap();
        assert!(tape.grad(x).unwrap().data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_requires_scalar() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[2], vec![1.0, 2.0]));
        assert!(matches!(
            tape.backward(x),
            Err(crate::error::Error::NotScalar(_))
        ));
    }

    #[test]
    fn softmax_single_live_element_is_one() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[1, 3], vec![42.0, -7.0, 3.0]));
        let mask = NdArray::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]);
        let y = tape.softmax_masked(x, Some(&mask)).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn softmax_rejects_fully_masked_row() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[1, 2], vec![1.0, 2.0]));
        let mask = NdArray::from_vec(&[1, 2], vec![0.0, 0.0]);
        assert!(matches!(
            tape.softmax_masked(x, Some(&mask)),
            Err(crate::error::Error::AllMaskedRow { row: 0 })
        ));
    }

    #[test]
    fn masked_softmax_gives_masked_positions_zero_grad() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[1, 3], vec![0.3, 1.0, -2.0]));
        let mask = NdArray::from_vec(&[1, 3], vec![1.0, 0.0, 1.0]);
        let y = tape.softmax_masked(x, Some(&mask)).unwrap();
        let w = tape.leaf(NdArray::from_vec(&[1, 3], vec![0.7, 0.9, 1.3]));
        let yw = tape.mul(y, w).unwrap();
        let loss = tape.sum(yw);
        tape.backward(loss).unwrap();
        let g = tape.grad(x).unwrap().data();
        assert_eq!(g[1], 0.0);
        assert!(g[0] != 0.0 && g[2] != 0.0);
    }

    #[test]
    fn layer_norm_of_constant_row_is_beta() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[1, 4], vec![3.0; 4]));
        let gamma = tape.leaf(NdArray::from_vec(&[4], vec![1.0; 4]));
        let beta = tape.leaf(NdArray::from_vec(&[4], vec![0.0; 4]));
        let y = tape.layer_norm(x, gamma, beta).unwrap();
        for &v in tape.value(y).data() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn gelu_and_relu_at_reference_points() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[2], vec![0.0, -3.0]));
        let g = tape.gelu(x);
        let r = tape.relu(x);
        assert_eq!(tape.value(g).data()[0], 0.0);
        assert_eq!(tape.value(r).data()[1], 0.0);
    }

    #[test]
    fn dropout_eval_is_identity_train_is_seeded() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[8], vec![1.0; 8]));
        let eval = tape.dropout(x, 0.5, false, 1);
        assert_eq!(eval, x);
        let t1 = tape.dropout(x, 0.5, true, 9);
        let t2 = tape.dropout(x, 0.5, true, 9);
        assert_eq!(tape.value(t1).data(), tape.value(t2).data());
        // survivors are scaled by 1/(1-p)
        assert!(tape
            .value(t1)
            .data()
            .iter()
            .all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn gradients_accumulate_across_uses() {
        // loss = sum(x) + sum(x) => grad = 2.
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(NdArray::from_vec(&[2], vec![1.0, 2.0]));
        let s1 = tape.sum(x);
        let s2 = tape.sum(x);
        let loss = tape.add(s1, s2).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[2.0, 2.0]);
    }

    #[test]
    fn linearity_of_backward() {
        // backward(a*f + b*g) == a*grad(f) + b*grad(g), exactly here.
        let xs = vec![0.4, -1.2, 2.2];
        let run = |a: f64, b: f64| -> Vec<f64> {
            let mut tape = Tape::<f64>::new();
            let x = tape.leaf(NdArray::from_vec(&[3], xs.clone()));
            let f = tape.sum(x);
            let x2 = tape.mul(x, x).unwrap();
            let g = tape.sum(x2);
            let fa = tape.scale(f, a);
            let gb = tape.scale(g, b);
            let loss = tape.add(fa, gb).unwrap();
            tape.backward(loss).unwrap();
            tape.grad(x).unwrap().data().to_vec()
        };
        let gf = run(1.0, 0.0);
        let gg = run(0.0, 1.0);
        let combined = run(2.0, 0.5);
        for i in 0..3 {
            assert!((combined[i] - (2.0 * gf[i] + 0.5 * gg[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn split_merge_heads_roundtrip() {
        let mut tape = Tape::<f64>::new();
        let data: Vec<f64> = (0..24).map(|i| i as f64).collect();
        let x = tape.leaf(NdArray::from_vec(&[2, 3, 4], data.clone()));
        let split = tape.split_heads(x, 2).unwrap();
        assert_eq!(tape.value(split).shape(), &[2, 2, 3, 2]);
        let merged = tape.merge_heads(split).unwrap();
        assert_eq!(tape.value(merged).data(), &data[..]);
    }

    #[test]
    fn cross_entropy_matches_log_softmax() {
        let mut tape = Tape::<f64>::new();
        let logits = tape.leaf(NdArray::from_vec(&[2, 3], vec![0.5, 1.0, -1.0, 2.0, 0.0, 0.1]));
        let targets = [2usize, 0usize];
        let ce = tape.cross_entropy_logits(logits, &targets).unwrap();
        let ls = tape.log_softmax(logits).unwrap();
        let expected = -(tape.value(ls).data()[2] + tape.value(ls).data()[3]) / 2.0;
        assert!((tape.value(ce).data()[0] - expected).abs() < 1e-12);
    }
}
