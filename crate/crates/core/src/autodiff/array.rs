//! Dense row-major n-dimensional arrays and the batched matrix multiply the
//! network runs on.

use crate::autodiff::element::Element;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// A dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct NdArray<E> {
    shape: Vec<usize>,
    data: Vec<E>,
}

impl<E: Element> NdArray<E> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![E::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<E>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape/data length mismatch"
        );
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn scalar(x: E) -> Self {
        Self {
            shape: vec![1],
            data: vec![x],
        }
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Self {
        Self::from_vec(shape, data.iter().map(|&x| E::from_f64(x)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<E> {
        self.data
    }

    /// Same data, new shape (sizes must agree).
    pub fn reshaped(mut self, shape: &[usize]) -> Self {
        assert_eq!(self.numel(), shape.iter().product::<usize>());
        self.shape = shape.to_vec();
        self
    }

    pub fn map(&self, f: impl Fn(E) -> E) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(E, E) -> E) -> Self {
        assert_eq!(self.shape, other.shape);
        Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Add `other * scale` in place (same shape).
    pub fn axpy(&mut self, scale: E, other: &Self) {
        assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + scale * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Leading dimensions before the final two (empty for matrices).
    fn batch_dims(&self) -> &[usize] {
        &self.shape[..self.shape.len().saturating_sub(2)]
    }
}

/// Shapes of the last two axes under an optional transpose.
fn mat_dims(shape: &[usize], transpose: bool) -> (usize, usize) {
    let n = shape.len();
    let (r, c) = (shape[n - 2], shape[n - 1]);
    if transpose {
        (c, r)
    } else {
        (r, c)
    }
}

/// Batched `op(a) . op(b)` where `op` optionally transposes the last two
/// axes. `b` may either carry the same batch dims as `a` or be a plain
/// matrix broadcast across the batch.
pub fn batched_matmul<E: Element>(
    a: &NdArray<E>,
    ta: bool,
    b: &NdArray<E>,
    tb: bool,
) -> Result<NdArray<E>> {
    if a.ndim() < 2 || b.ndim() < 2 {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            detail: format!("operands must be matrices, got {:?} and {:?}", a.shape, b.shape),
        });
    }
    let (m, ka) = mat_dims(&a.shape, ta);
    let (kb, n) = mat_dims(&b.shape, tb);
    let broadcast_b = b.ndim() == 2 && a.ndim() > 2;
    if ka != kb || (!broadcast_b && a.batch_dims() != b.batch_dims()) {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            detail: format!(
                "cannot multiply {:?} (t={ta}) by {:?} (t={tb})",
                a.shape, b.shape
            ),
        });
    }
    let batch: usize = a.batch_dims().iter().product();
    let mut out_shape = a.batch_dims().to_vec();
    out_shape.extend_from_slice(&[m, n]);
    let mut out = NdArray::zeros(&out_shape);
    matmul_into(&mut out, a, ta, b, tb, false)?;
    debug_assert_eq!(out.numel(), batch * m * n);
    Ok(out)
}

/// Core batched GEMM. When `accumulate` is set, adds into `out` instead of
/// overwriting; when `b` broadcasts, its gradient-style accumulation across
/// the batch is the caller's business (see `matmul_acc_broadcast`).
pub fn matmul_into<E: Element>(
    out: &mut NdArray<E>,
    a: &NdArray<E>,
    ta: bool,
    b: &NdArray<E>,
    tb: bool,
    accumulate: bool,
) -> Result<()> {
    let (m, k) = mat_dims(&a.shape, ta);
    let (_, n) = mat_dims(&b.shape, tb);
    let broadcast_b = b.ndim() == 2 && a.ndim() > 2;
    let a_stride = m * k;
    let b_stride = if broadcast_b { 0 } else { k * n };
    let beta = if accumulate { E::one() } else { E::zero() };

    let (rsa, csa) = strides(&a.shape, ta);
    let (rsb, csb) = strides(&b.shape, tb);

    let a_data = a.data();
    let b_data = b.data();
    let out_chunks: Vec<(usize, &mut [E])> = out
        .data_mut()
        .chunks_mut(m * n)
        .enumerate()
        .collect();
    out_chunks.into_par_iter().for_each(|(i, chunk)| {
        let a_slice = &a_data[i * a_stride..(i + 1) * a_stride];
        let b_off = i * b_stride;
        let b_slice = &b_data[b_off..b_off + k * n];
        unsafe {
            E::gemm(
                m,
                k,
                n,
                E::one(),
                a_slice.as_ptr(),
                rsa,
                csa,
                b_slice.as_ptr(),
                rsb,
                csb,
                beta,
                chunk.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    });
    Ok(())
}

/// Accumulate `sum_over_batch(op(aـi) . op(c_i))` into a matrix gradient
/// (the broadcast-weight backward). Runs serially: the sum order is fixed.
pub fn matmul_acc_broadcast<E: Element>(
    out: &mut NdArray<E>,
    a: &NdArray<E>,
    ta: bool,
    c: &NdArray<E>,
    tc: bool,
) -> Result<()> {
    let (m, k) = mat_dims(&a.shape, ta);
    let (_, n) = mat_dims(&c.shape, tc);
    assert_eq!(out.shape(), &[m, n]);
    let batch: usize = a.batch_dims().iter().product();
    let (rsa, csa) = strides(&a.shape, ta);
    let (rsc, csc) = strides(&c.shape, tc);
    let a_stride = a.numel() / batch.max(1);
    let c_stride = c.numel() / batch.max(1);
    for i in 0..batch {
        let a_slice = &a.data()[i * a_stride..(i + 1) * a_stride];
        let c_slice = &c.data()[i * c_stride..(i + 1) * c_stride];
        unsafe {
            E::gemm(
                m,
                k,
                n,
                E::one(),
                a_slice.as_ptr(),
                rsa,
                csa,
                c_slice.as_ptr(),
                rsc,
                csc,
                E::one(),
                out.data_mut().as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
    Ok(())
}

fn strides(shape: &[usize], transpose: bool) -> (isize, isize) {
    let n = shape.len();
    let cols = shape[n - 1] as isize;
    if transpose {
        (1, cols)
    } else {
        (cols, 1)
    }
}
