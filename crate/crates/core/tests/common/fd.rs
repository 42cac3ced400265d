//! Central finite differences against tape gradients.

use persformer_core::autodiff::{Element, NdArray, Tape, Var};

/// Build a graph over leaves created from `inputs`, returning a scalar loss.
pub type BuildFn<E> = dyn Fn(&mut Tape<E>, &[Var]) -> Var;

/// Compare tape gradients of every input coordinate against central finite
/// differences with `h = h_scale * (1 + |x|)`.
///
/// The criterion is `|ad - fd| <= atol + tol * max(|ad|, |fd|)`: `tol` is
/// the relative bound, `atol` absorbs the cancellation noise of the finite
/// differences themselves (~eps * |loss| / 2h), which otherwise dominates
/// for near-zero gradients.
pub fn grad_check<E: Element>(
    inputs: &[NdArray<E>],
    build: &BuildFn<E>,
    h_scale: f64,
    tol: f64,
    atol: f64,
) -> f64 {
    let eval = |points: &[NdArray<E>]| -> f64 {
        let mut tape = Tape::new();
        let vars: Vec<Var> = points.iter().map(|p| tape.leaf(p.clone())).collect();
        let loss = build(&mut tape, &vars);
        tape.value(loss).data()[0].as_f64()
    };

    // Analytic gradients in one pass.
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|p| tape.leaf(p.clone())).collect();
    let loss = build(&mut tape, &vars);
    tape.backward(loss).expect("backward");
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .map(|&v| {
            tape.grad(v)
                .map(|g| g.data().iter().map(|x| x.as_f64()).collect())
                .unwrap_or_else(|| vec![0.0; tape.value(v).numel()])
        })
        .collect();

    let mut worst = 0.0_f64;
    for (i, input) in inputs.iter().enumerate() {
        for j in 0..input.numel() {
            let x = input.data()[j].as_f64();
            let h = h_scale * (1.0 + x.abs());
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] = E::from_f64(x + h);
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] = E::from_f64(x - h);
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let ad = analytic[i][j];
            let err = (ad - fd).abs();
            let bound = atol + tol * ad.abs().max(fd.abs());
            worst = worst.max(err / bound.max(f64::MIN_POSITIVE));
            assert!(
                err <= bound,
                "input {i} coord {j}: analytic {ad} vs fd {fd} (err {err:.3e} > {bound:.3e})"
            );
        }
    }
    worst
}
