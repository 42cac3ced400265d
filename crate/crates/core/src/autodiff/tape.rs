//! Reverse-mode differentiation on an append-only tape.
//!
//! Every operation pushes a node holding its forward value and the parent
//! references needed for the backward rule. Node indices grow in evaluation
//! order, so the reverse index order is a valid reverse-topological order:
//! `backward` walks it once, accumulating gradients by summation wherever a
//! value feeds several consumers. Gradients of interior nodes are freed as
//! soon as they have been propagated; leaf gradients stay readable.

use crate::autodiff::array::{batched_matmul, matmul_acc_broadcast, NdArray};
use crate::autodiff::element::Element;
use crate::error::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<E: Element> {
    Leaf,
    /// `a . op(b)`; `b` may broadcast across the batch dims of `a`.
    Matmul { a: Var, b: Var, tb: bool },
    Add { a: Var, b: Var },
    AddBias { a: Var, bias: Var },
    Scale { a: Var, c: E },
    Mul { a: Var, b: Var },
    ConcatLast { a: Var, b: Var },
    SplitHeads { a: Var, heads: usize },
    MergeHeads { a: Var, heads: usize },
    Reshape { a: Var },
    Broadcast0 { a: Var },
    Relu { a: Var },
    Gelu { a: Var },
    SoftmaxMasked { a: Var },
    LayerNorm { a: Var, gamma: Var, beta: Var },
    Dropout { a: Var, keep: NdArray<E> },
    MeanMasked { a: Var, mask: NdArray<E>, counts: Vec<E> },
    SumMasked { a: Var, mask: NdArray<E> },
    Sum { a: Var },
    Select { a: Var, index: usize },
    LogSoftmax { a: Var },
    CrossEntropyLogits { logits: Var, targets: Vec<usize> },
    Mse { pred: Var, target: NdArray<E> },
}

struct Node<E: Element> {
    value: NdArray<E>,
    grad: Option<NdArray<E>>,
    op: Op<E>,
}

/// The computation graph. Single-threaded by design; run independent tapes
/// on independent threads for data parallelism.
pub struct Tape<E: Element> {
    nodes: Vec<Node<E>>,
}

impl<E: Element> Default for Tape<E> {
    fn default() -> Self {
        Self::new()
    }
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

impl<E: Element> Tape<E> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: NdArray<E>, op: Op<E>) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: NdArray<E>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &NdArray<E> {
        &self.nodes[v.0].value
    }

    /// Gradient of a node after `backward` (leaves keep theirs).
    pub fn grad(&self, v: Var) -> Option<&NdArray<E>> {
        self.nodes[v.0].grad.as_ref()
    }

    // ---- forward operations -------------------------------------------

    /// `a . b` (or `a . b^T`), last two axes; `b` may be an unbatched matrix.
    pub fn matmul_t(&mut self, a: Var, b: Var, tb: bool) -> Result<Var> {
        let value = batched_matmul(self.value(a), false, self.value(b), tb)?;
        Ok(self.push(value, Op::Matmul { a, b, tb }))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_t(a, b, false)
    }

    /// Affine map on the last axis: `x . w + bias`.
    pub fn linear(&mut self, x: Var, w: Var, bias: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_bias(xw, bias)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err("add", self.value(a), self.value(b)));
        }
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(value, Op::Add { a, b }))
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let d = *self.value(a).shape().last().unwrap_or(&0);
        if self.value(bias).shape() != [d] {
            return Err(shape_err("add_bias", self.value(a), self.value(bias)));
        }
        let bias_data = self.value(bias).data().to_vec();
        let mut value = self.value(a).clone();
        for row in value.data_mut().chunks_mut(d) {
            for (x, &b) in row.iter_mut().zip(&bias_data) {
                *x = *x + b;
            }
        }
        Ok(self.push(value, Op::AddBias { a, bias }))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let c = E::from_f64(c);
        let value = self.value(a).map(|x| x * c);
        self.push(value, Op::Scale { a, c })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err("mul", self.value(a), self.value(b)));
        }
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(value, Op::Mul { a, b }))
    }

    pub fn concat_last(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != sb.len() || sa[..sa.len() - 1] != sb[..sb.len() - 1] {
            return Err(shape_err("concat_last", self.value(a), self.value(b)));
        }
        let (da, db) = (sa[sa.len() - 1], sb[sb.len() - 1]);
        let mut shape = sa.to_vec();
        *shape.last_mut().unwrap() = da + db;
        let mut out = NdArray::zeros(&shape);
        {
            let rows = out.numel() / (da + db);
            let av = self.value(a).data();
            let bv = self.value(b).data();
            let out_data = out.data_mut();
            for r in 0..rows {
                out_data[r * (da + db)..r * (da + db) + da]
                    .copy_from_slice(&av[r * da..(r + 1) * da]);
                out_data[r * (da + db) + da..(r + 1) * (da + db)]
                    .copy_from_slice(&bv[r * db..(r + 1) * db]);
            }
        }
        Ok(self.push(out, Op::ConcatLast { a, b }))
    }

    /// `[B, N, D] -> [B, H, N, D/H]`.
    pub fn split_heads(&mut self, a: Var, heads: usize) -> Result<Var> {
        let s = self.value(a).shape();
        if s.len() != 3 || s[2] % heads != 0 {
            return Err(Error::ShapeMismatch {
                op: "split_heads",
                detail: format!("{s:?} into {heads} heads"),
            });
        }
        let (b, n, d) = (s[0], s[1], s[2]);
        let dh = d / heads;
        let mut out = NdArray::zeros(&[b, heads, n, dh]);
        split_heads_copy(self.value(a).data(), out.data_mut(), b, n, heads, dh, false);
        Ok(self.push(out, Op::SplitHeads { a, heads }))
    }

    /// `[B, H, N, dh] -> [B, N, H * dh]`.
    pub fn merge_heads(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).shape();
        if s.len() != 4 {
            return Err(Error::ShapeMismatch {
                op: "merge_heads",
                detail: format!("{s:?}"),
            });
        }
        let (b, heads, n, dh) = (s[0], s[1], s[2], s[3]);
        let mut out = NdArray::zeros(&[b, n, heads * dh]);
        split_heads_copy(self.value(a).data(), out.data_mut(), b, n, heads, dh, true);
        Ok(self.push(out, Op::MergeHeads { a, heads }))
    }

    /// Same data, new shape.
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        if self.value(a).numel() != shape.iter().product::<usize>() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                detail: format!("{:?} -> {:?}", self.value(a).shape(), shape),
            });
        }
        let value = self.value(a).clone().reshaped(shape);
        Ok(self.push(value, Op::Reshape { a }))
    }

    /// Repeat along a new leading axis: `[..dims] -> [n, ..dims]`.
    pub fn broadcast0(&mut self, a: Var, n: usize) -> Var {
        let src = self.value(a);
        let mut shape = vec![n];
        shape.extend_from_slice(src.shape());
        let mut data = Vec::with_capacity(src.numel() * n);
        for _ in 0..n {
            data.extend_from_slice(src.data());
        }
        let value = NdArray::from_vec(&shape, data);
        self.push(value, Op::Broadcast0 { a })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(E::zero()));
        self.push(value, Op::Relu { a })
    }

    /// Exact GELU: `x * Phi(x)` with the Gaussian CDF via `erf`.
    pub fn gelu(&mut self, a: Var) -> Var {
        let half = E::from_f64(0.5);
        let inv_sqrt2 = E::from_f64(std::f64::consts::FRAC_1_SQRT_2);
        let value = self
            .value(a)
            .map(|x| half * x * (E::one() + (x * inv_sqrt2).erf()));
        self.push(value, Op::Gelu { a })
    }

    /// Softmax over the last axis. `mask`, when given, has shape
    /// `[batch, n]` with `batch = shape[0]` and `n = shape.last()`; masked
    /// positions get probability exactly 0 and never receive gradient.
    pub fn softmax_masked(&mut self, a: Var, mask: Option<&NdArray<E>>) -> Result<Var> {
        let shape = self.value(a).shape().to_vec();
        let n = *shape.last().ok_or(Error::ShapeMismatch {
            op: "softmax",
            detail: "scalar input".into(),
        })?;
        if let Some(m) = mask {
            if m.shape() != [shape[0], n] {
                return Err(Error::ShapeMismatch {
                    op: "softmax_masked",
                    detail: format!("mask {:?} for input {:?}", m.shape(), shape),
                });
            }
            for (b, row) in m.data().chunks(n).enumerate() {
                if row.iter().all(|&x| x == E::zero()) {
                    return Err(Error::AllMaskedRow { row: b });
                }
            }
        }
        let rows_per_batch = self.value(a).numel() / (shape[0] * n);
        let mut value = self.value(a).clone();
        {
            let mask_data = mask.map(|m| m.data().to_vec());
            let chunks: Vec<(usize, &mut [E])> =
                value.data_mut().chunks_mut(n).enumerate().collect();
            chunks.into_par_iter().for_each(|(r, row)| {
                let batch = r / rows_per_batch;
                let mask_row = mask_data.as_ref().map(|m| &m[batch * n..(batch + 1) * n]);
                softmax_row(row, mask_row);
            });
        }
        Ok(self.push(value, Op::SoftmaxMasked { a }))
    }

    /// Layer normalization over the last axis with affine parameters.
    pub fn layer_norm(&mut self, a: Var, gamma: Var, beta: Var) -> Result<Var> {
        let d = *self.value(a).shape().last().unwrap_or(&0);
        if self.value(gamma).shape() != [d] || self.value(beta).shape() != [d] {
            return Err(shape_err("layer_norm", self.value(a), self.value(gamma)));
        }
        let eps = E::from_f64(LAYER_NORM_EPS);
        let g = self.value(gamma).data().to_vec();
        let be = self.value(beta).data().to_vec();
        let mut value = self.value(a).clone();
        for row in value.data_mut().chunks_mut(d) {
            let (mean, rstd) = row_moments(row, eps);
            for (i, x) in row.iter_mut().enumerate() {
                *x = (*x - mean) * rstd * g[i] + be[i];
            }
        }
        Ok(self.push(value, Op::LayerNorm { a, gamma, beta }))
    }

    /// Inverted dropout: in training, zero with probability `p` and scale
    /// the survivors by `1/(1-p)`; in eval it is the identity.
    pub fn dropout(&mut self, a: Var, p: f64, train: bool, seed: u64) -> Var {
        if !train || p <= 0.0 {
            return a;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = E::from_f64(1.0 / (1.0 - p));
        let keep_data: Vec<E> = (0..self.value(a).numel())
            .map(|_| {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                if u < p {
                    E::zero()
                } else {
                    scale
                }
            })
            .collect();
        let keep = NdArray::from_vec(self.value(a).shape(), keep_data);
        let value = self.value(a).zip_map(&keep, |x, k| x * k);
        self.push(value, Op::Dropout { a, keep })
    }

    /// Mean over live sequence positions: `[B, N, D] x mask [B, N] -> [B, D]`.
    pub fn mean_masked(&mut self, a: Var, mask: &NdArray<E>) -> Result<Var> {
        let (value, counts) = masked_reduce(self.value(a), mask, true)?;
        Ok(self.push(
            value,
            Op::MeanMasked {
                a,
                mask: mask.clone(),
                counts,
            },
        ))
    }

    /// Sum over live sequence positions: `[B, N, D] x mask [B, N] -> [B, D]`.
    pub fn sum_masked(&mut self, a: Var, mask: &NdArray<E>) -> Result<Var> {
        let (value, _) = masked_reduce(self.value(a), mask, false)?;
        Ok(self.push(
            value,
            Op::SumMasked {
                a,
                mask: mask.clone(),
            },
        ))
    }

    /// Sum of all entries, as a scalar node.
    pub fn sum(&mut self, a: Var) -> Var {
        let total = self
            .value(a)
            .data()
            .iter()
            .fold(E::zero(), |acc, &x| acc + x);
        self.push(NdArray::scalar(total), Op::Sum { a })
    }

    /// Pick one entry (by flat index) as a scalar node.
    pub fn select(&mut self, a: Var, index: usize) -> Result<Var> {
        if index >= self.value(a).numel() {
            return Err(Error::ShapeMismatch {
                op: "select",
                detail: format!("index {index} into {:?}", self.value(a).shape()),
            });
        }
        let x = self.value(a).data()[index];
        Ok(self.push(NdArray::scalar(x), Op::Select { a, index }))
    }

    /// Log-softmax over the last axis of a `[B, C]` tensor.
    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let shape = self.value(a).shape().to_vec();
        if shape.len() != 2 {
            return Err(Error::ShapeMismatch {
                op: "log_softmax",
                detail: format!("{shape:?}"),
            });
        }
        let c = shape[1];
        let mut value = self.value(a).clone();
        for row in value.data_mut().chunks_mut(c) {
            let max = row.iter().cloned().fold(E::neg_infinity(), E::max);
            let logsum = row
                .iter()
                .map(|&x| (x - max).exp())
                .fold(E::zero(), |s, e| s + e)
                .ln()
                + max;
            for x in row.iter_mut() {
                *x = *x - logsum;
            }
        }
        Ok(self.push(value, Op::LogSoftmax { a }))
    }

    /// Mean cross-entropy between logits `[B, C]` and integer targets.
    pub fn cross_entropy_logits(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let shape = self.value(logits).shape();
        if shape.len() != 2 || shape[0] != targets.len() {
            return Err(Error::ShapeMismatch {
                op: "cross_entropy_with_logits",
                detail: format!("logits {shape:?} with {} targets", targets.len()),
            });
        }
        let c = shape[1];
        if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
            return Err(Error::ShapeMismatch {
                op: "cross_entropy_with_logits",
                detail: format!("target {bad} out of {c} classes"),
            });
        }
        let mut total = E::zero();
        for (row, &t) in self.value(logits).data().chunks(c).zip(targets) {
            let max = row.iter().cloned().fold(E::neg_infinity(), E::max);
            let logsum = row
                .iter()
                .map(|&x| (x - max).exp())
                .fold(E::zero(), |s, e| s + e)
                .ln()
                + max;
            total = total + (logsum - row[t]);
        }
        let loss = total / E::from_f64(targets.len() as f64);
        Ok(self.push(
            NdArray::scalar(loss),
            Op::CrossEntropyLogits {
                logits,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Mean squared error against a constant target of the same shape.
    pub fn mse(&mut self, pred: Var, target: &NdArray<E>) -> Result<Var> {
        if self.value(pred).shape() != target.shape() {
            return Err(shape_err("mse", self.value(pred), target));
        }
        let n = E::from_f64(target.numel() as f64);
        let total = self
            .value(pred)
            .data()
            .iter()
            .zip(target.data())
            .fold(E::zero(), |acc, (&p, &t)| acc + (p - t) * (p - t));
        Ok(self.push(
            NdArray::scalar(total / n),
            Op::Mse {
                pred,
                target: target.clone(),
            },
        ))
    }

    // ---- backward ------------------------------------------------------

    /// Populate gradients of everything reachable from a scalar loss.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return Err(Error::NotScalar(self.value(loss).shape().to_vec()));
        }
        let seed_shape = self.value(loss).shape().to_vec();
        self.nodes[loss.0].grad = Some(NdArray::from_vec(&seed_shape, vec![E::one()]));
        for j in (0..self.nodes.len()).rev() {
            let Some(grad) = self.nodes[j].grad.take() else {
                continue;
            };
            self.propagate(j, &grad)?;
            if matches!(self.nodes[j].op, Op::Leaf) {
                self.nodes[j].grad = Some(grad);
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, delta: NdArray<E>) {
        match &mut self.nodes[v.0].grad {
            Some(g) => g.axpy(E::one(), &delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn grad_buffer(&mut self, v: Var) -> &mut NdArray<E> {
        let shape = self.nodes[v.0].value.shape().to_vec();
        self.nodes[v.0]
            .grad
            .get_or_insert_with(|| NdArray::zeros(&shape))
    }

    fn propagate(&mut self, j: usize, grad: &NdArray<E>) -> Result<()> {
        // Detach the op so parent gradients can be written while it is read.
        let op = std::mem::replace(&mut self.nodes[j].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::Matmul { a, b, tb } => {
                let (a, b, tb) = (*a, *b, *tb);
                // dA = g . op(B)^(1-tb)
                let da = batched_matmul(grad, false, self.value(b), !tb)?;
                self.accumulate(a, da);
                let broadcast = self.value(b).ndim() == 2 && self.value(a).ndim() > 2;
                if broadcast {
                    let mut db = std::mem::replace(
                        self.grad_buffer(b),
                        NdArray::zeros(&[0]),
                    );
                    if tb {
                        matmul_acc_broadcast(&mut db, grad, true, self.value(a), false)?;
                    } else {
                        matmul_acc_broadcast(&mut db, self.value(a), true, grad, false)?;
                    }
                    *self.grad_buffer(b) = db;
                } else {
                    let db = if tb {
                        batched_matmul(grad, true, self.value(a), false)?
                    } else {
                        batched_matmul(self.value(a), true, grad, false)?
                    };
                    self.accumulate(b, db);
                }
            }
            Op::Add { a, b } => {
                self.accumulate(*a, grad.clone());
                self.accumulate(*b, grad.clone());
            }
            Op::AddBias { a, bias } => {
                self.accumulate(*a, grad.clone());
                let d = *grad.shape().last().unwrap();
                let mut db = NdArray::zeros(&[d]);
                for row in grad.data().chunks(d) {
                    for (g, &x) in db.data_mut().iter_mut().zip(row) {
                        *g = *g + x;
                    }
                }
                self.accumulate(*bias, db);
            }
            Op::Scale { a, c } => {
                self.accumulate(*a, grad.map(|g| g * *c));
            }
            Op::Mul { a, b } => {
                let da = grad.zip_map(self.value(*b), |g, y| g * y);
                let db = grad.zip_map(self.value(*a), |g, x| g * x);
                self.accumulate(*a, da);
                self.accumulate(*b, db);
            }
            Op::ConcatLast { a, b } => {
                let da_width = *self.value(*a).shape().last().unwrap();
                let db_width = *self.value(*b).shape().last().unwrap();
                let mut da = NdArray::zeros(self.value(*a).shape());
                let mut db = NdArray::zeros(self.value(*b).shape());
                let rows = grad.numel() / (da_width + db_width);
                for r in 0..rows {
                    let row = &grad.data()[r * (da_width + db_width)..(r + 1) * (da_width + db_width)];
                    da.data_mut()[r * da_width..(r + 1) * da_width]
                        .copy_from_slice(&row[..da_width]);
                    db.data_mut()[r * db_width..(r + 1) * db_width]
                        .copy_from_slice(&row[da_width..]);
                }
                self.accumulate(*a, da);
                self.accumulate(*b, db);
            }
            Op::SplitHeads { a, heads } => {
                let s = self.value(*a).shape().to_vec();
                let (b, n, d) = (s[0], s[1], s[2]);
                let mut da = NdArray::zeros(&s);
                split_heads_copy(grad.data(), da.data_mut(), b, n, *heads, d / *heads, true);
                self.accumulate(*a, da);
            }
            Op::MergeHeads { a, heads } => {
                let s = self.value(*a).shape().to_vec();
                let (b, _h, n, dh) = (s[0], s[1], s[2], s[3]);
                let mut da = NdArray::zeros(&s);
                split_heads_copy(grad.data(), da.data_mut(), b, n, *heads, dh, false);
                self.accumulate(*a, da);
            }
            Op::Reshape { a } => {
                let shape = self.value(*a).shape().to_vec();
                self.accumulate(*a, grad.clone().reshaped(&shape));
            }
            Op::Broadcast0 { a } => {
                let chunk = self.value(*a).numel();
                let mut da = NdArray::zeros(self.value(*a).shape());
                for copy in grad.data().chunks(chunk) {
                    for (g, &x) in da.data_mut().iter_mut().zip(copy) {
                        *g = *g + x;
                    }
                }
                self.accumulate(*a, da);
            }
            Op::Relu { a } => {
                let da = grad.zip_map(self.value(*a), |g, x| {
                    if x > E::zero() {
                        g
                    } else {
                        E::zero()
                    }
                });
                self.accumulate(*a, da);
            }
            Op::Gelu { a } => {
                let inv_sqrt2 = E::from_f64(std::f64::consts::FRAC_1_SQRT_2);
                let inv_sqrt2pi = E::from_f64(1.0 / (2.0 * std::f64::consts::PI).sqrt());
                let half = E::from_f64(0.5);
                let da = grad.zip_map(self.value(*a), |g, x| {
                    let cdf = half * (E::one() + (x * inv_sqrt2).erf());
                    let pdf = inv_sqrt2pi * (-half * x * x).exp();
                    g * (cdf + x * pdf)
                });
                self.accumulate(*a, da);
            }
            Op::SoftmaxMasked { a } => {
                let y = &self.nodes[j].value;
                let n = *y.shape().last().unwrap();
                let mut da = NdArray::zeros(y.shape());
                {
                    let y_data = y.data();
                    let g_data = grad.data();
                    let chunks: Vec<(usize, &mut [E])> =
                        da.data_mut().chunks_mut(n).enumerate().collect();
                    chunks.into_par_iter().for_each(|(r, out)| {
                        let yr = &y_data[r * n..(r + 1) * n];
                        let gr = &g_data[r * n..(r + 1) * n];
                        let dot = yr
                            .iter()
                            .zip(gr)
                            .fold(E::zero(), |acc, (&yi, &gi)| acc + yi * gi);
                        for i in 0..n {
                            out[i] = yr[i] * (gr[i] - dot);
                        }
                    });
                }
                self.accumulate(*a, da);
            }
            Op::LayerNorm { a, gamma, beta } => {
                let d = *self.value(*a).shape().last().unwrap();
                let eps = E::from_f64(LAYER_NORM_EPS);
                let gamma_data = self.value(*gamma).data().to_vec();
                let mut da = NdArray::zeros(self.value(*a).shape());
                let mut dgamma = NdArray::zeros(&[d]);
                let mut dbeta = NdArray::zeros(&[d]);
                let x = self.value(*a).data();
                let inv_d = E::one() / E::from_f64(d as f64);
                for (row_idx, g_row) in grad.data().chunks(d).enumerate() {
                    let x_row = &x[row_idx * d..(row_idx + 1) * d];
                    let (mean, rstd) = row_moments(x_row, eps);
                    let mut sum_gg = E::zero();
                    let mut sum_ggx = E::zero();
                    for i in 0..d {
                        let xhat = (x_row[i] - mean) * rstd;
                        let gg = g_row[i] * gamma_data[i];
                        sum_gg = sum_gg + gg;
                        sum_ggx = sum_ggx + gg * xhat;
                        dgamma.data_mut()[i] = dgamma.data()[i] + g_row[i] * xhat;
                        dbeta.data_mut()[i] = dbeta.data()[i] + g_row[i];
                    }
                    let mean_gg = sum_gg * inv_d;
                    let mean_ggx = sum_ggx * inv_d;
                    let out = &mut da.data_mut()[row_idx * d..(row_idx + 1) * d];
                    for i in 0..d {
                        let xhat = (x_row[i] - mean) * rstd;
                        let gg = g_row[i] * gamma_data[i];
                        out[i] = rstd * (gg - mean_gg - xhat * mean_ggx);
                    }
                }
                self.accumulate(*a, da);
                self.accumulate(*gamma, dgamma);
                self.accumulate(*beta, dbeta);
            }
            Op::Dropout { a, keep } => {
                self.accumulate(*a, grad.zip_map(keep, |g, k| g * k));
            }
            Op::MeanMasked { a, mask, counts } => {
                let da = masked_reduce_backward(grad, self.value(*a).shape(), mask, Some(counts));
                self.accumulate(*a, da);
            }
            Op::SumMasked { a, mask } => {
                let da = masked_reduce_backward(grad, self.value(*a).shape(), mask, None);
                self.accumulate(*a, da);
            }
            Op::Sum { a } => {
                let g = grad.data()[0];
                self.accumulate(*a, NdArray::from_vec(
                    self.value(*a).shape(),
                    vec![g; self.value(*a).numel()],
                ));
            }
            Op::Select { a, index } => {
                let mut da = NdArray::zeros(self.value(*a).shape());
                da.data_mut()[*index] = grad.data()[0];
                self.accumulate(*a, da);
            }
            Op::LogSoftmax { a } => {
                let y = &self.nodes[j].value;
                let c = *y.shape().last().unwrap();
                let mut da = NdArray::zeros(y.shape());
                for (r, g_row) in grad.data().chunks(c).enumerate() {
                    let y_row = &y.data()[r * c..(r + 1) * c];
                    let g_sum = g_row.iter().fold(E::zero(), |acc, &g| acc + g);
                    let out = &mut da.data_mut()[r * c..(r + 1) * c];
                    for i in 0..c {
                        out[i] = g_row[i] - y_row[i].exp() * g_sum;
                    }
                }
                self.accumulate(*a, da);
            }
            Op::CrossEntropyLogits { logits, targets } => {
                let g = grad.data()[0];
                let c = self.value(*logits).shape()[1];
                let inv_b = E::one() / E::from_f64(targets.len() as f64);
                let mut da = NdArray::zeros(self.value(*logits).shape());
                let x = self.value(*logits).data();
                for (r, &t) in targets.iter().enumerate() {
                    let row = &x[r * c..(r + 1) * c];
                    let max = row.iter().cloned().fold(E::neg_infinity(), E::max);
                    let denom = row
                        .iter()
                        .map(|&v| (v - max).exp())
                        .fold(E::zero(), |s, e| s + e);
                    let out = &mut da.data_mut()[r * c..(r + 1) * c];
                    for i in 0..c {
                        let p = (row[i] - max).exp() / denom;
                        let indicator = if i == t { E::one() } else { E::zero() };
                        out[i] = g * inv_b * (p - indicator);
                    }
                }
                self.accumulate(*logits, da);
            }
            Op::Mse { pred, target } => {
                let g = grad.data()[0];
                let scale = E::from_f64(2.0 / target.numel() as f64) * g;
                let da = self
                    .value(*pred)
                    .zip_map(target, |p, t| scale * (p - t));
                self.accumulate(*pred, da);
            }
        }
        self.nodes[j].op = op;
        Ok(())
    }
}

fn shape_err<E: Element>(op: &'static str, a: &NdArray<E>, b: &NdArray<E>) -> Error {
    Error::ShapeMismatch {
        op,
        detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
    }
}

/// Mean and reciprocal standard deviation of one row.
fn row_moments<E: Element>(row: &[E], eps: E) -> (E, E) {
    let inv_d = E::one() / E::from_f64(row.len() as f64);
    let mean = row.iter().fold(E::zero(), |s, &x| s + x) * inv_d;
    let var = row
        .iter()
        .fold(E::zero(), |s, &x| s + (x - mean) * (x - mean))
        * inv_d;
    (mean, (var + eps).sqrt().recip())
}

/// In-place masked softmax of one row (None = no mask).
fn softmax_row<E: Element>(row: &mut [E], mask: Option<&[E]>) {
    let live = |i: usize| mask.map(|m| m[i] != E::zero()).unwrap_or(true);
    let mut max = E::neg_infinity();
    for (i, &x) in row.iter().enumerate() {
        if live(i) && x > max {
            max = x;
        }
    }
    let mut sum = E::zero();
    for i in 0..row.len() {
        if live(i) {
            row[i] = (row[i] - max).exp();
            sum = sum + row[i];
        } else {
            row[i] = E::zero();
        }
    }
    let inv = sum.recip();
    for i in 0..row.len() {
        if live(i) {
            row[i] = row[i] * inv;
        }
    }
}

/// Copy between `[B, N, H*dh]` and `[B, H, N, dh]` layouts.
/// `merge = false`: split (source is `[B, N, D]`); `merge = true`: inverse.
fn split_heads_copy<E: Element>(
    src: &[E],
    dst: &mut [E],
    b: usize,
    n: usize,
    heads: usize,
    dh: usize,
    merge: bool,
) {
    for bi in 0..b {
        for h in 0..heads {
            for ni in 0..n {
                let flat = ((bi * n + ni) * heads + h) * dh;
                let head = ((bi * heads + h) * n + ni) * dh;
                if merge {
                    dst[flat..flat + dh].copy_from_slice(&src[head..head + dh]);
                } else {
                    dst[head..head + dh].copy_from_slice(&src[flat..flat + dh]);
                }
            }
        }
    }
}

/// Forward of masked mean/sum pooling; returns per-batch live counts.
fn masked_reduce<E: Element>(
    x: &NdArray<E>,
    mask: &NdArray<E>,
    mean: bool,
) -> Result<(NdArray<E>, Vec<E>)> {
    let s = x.shape();
    if s.len() != 3 || mask.shape() != [s[0], s[1]] {
        return Err(Error::ShapeMismatch {
            op: "masked_reduce",
            detail: format!("input {:?} mask {:?}", s, mask.shape()),
        });
    }
    let (b, n, d) = (s[0], s[1], s[2]);
    let mut out = NdArray::zeros(&[b, d]);
    let mut counts = Vec::with_capacity(b);
    for bi in 0..b {
        let mut count = E::zero();
        for ni in 0..n {
            let m = mask.data()[bi * n + ni];
            if m != E::zero() {
                count = count + E::one();
                let row = &x.data()[(bi * n + ni) * d..(bi * n + ni + 1) * d];
                let acc = &mut out.data_mut()[bi * d..(bi + 1) * d];
                for i in 0..d {
                    acc[i] = acc[i] + row[i];
                }
            }
        }
        if mean {
            if count == E::zero() {
                return Err(Error::AllMaskedRow { row: bi });
            }
            let inv = count.recip();
            for v in &mut out.data_mut()[bi * d..(bi + 1) * d] {
                *v = *v * inv;
            }
        }
        counts.push(count);
    }
    Ok((out, counts))
}

fn masked_reduce_backward<E: Element>(
    grad: &NdArray<E>,
    x_shape: &[usize],
    mask: &NdArray<E>,
    counts: Option<&Vec<E>>,
) -> NdArray<E> {
    let (b, n, d) = (x_shape[0], x_shape[1], x_shape[2]);
    let mut da = NdArray::zeros(x_shape);
    for bi in 0..b {
        let scale = counts.map(|c| c[bi].recip()).unwrap_or_else(E::one);
        let g_row = &grad.data()[bi * d..(bi + 1) * d];
        for ni in 0..n {
            if mask.data()[bi * n + ni] != E::zero() {
                let out = &mut da.data_mut()[(bi * n + ni) * d..(bi * n + ni + 1) * d];
                for i in 0..d {
                    out[i] = g_row[i] * scale;
                }
            }
        }
    }
    da
}
