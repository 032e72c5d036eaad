//! Differentiable building blocks with closed-form backward passes.

use crate::error::{Error, Result};
use crate::kernel::dense::{matmul, matmul_nt, matmul_tn, DenseMatrix};
use crate::scalar::Scalar;

/// `w · x + b`, with `b` broadcast across the columns of `x`.
pub fn linear_forward<T: Scalar>(
    w: &DenseMatrix<T>,
    b: Option<&[T]>,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let mut out = matmul(w, x)?;
    if let Some(b) = b {
        add_bias(&mut out, b)?;
    }
    Ok(out)
}

pub(crate) fn add_bias<T: Scalar>(out: &mut DenseMatrix<T>, b: &[T]) -> Result<()> {
    if b.len() != out.rows() {
        return Err(Error::shape(
            "bias",
            format!("bias of length {} for {} output rows", b.len(), out.rows()),
        ));
    }
    for (r, &br) in b.iter().enumerate() {
        out.row_mut(r).iter_mut().for_each(|v| *v += br);
    }
    Ok(())
}

/// Gradients of a linear layer given the upstream gradient `dy` (out × batch).
pub struct LinearGrads<T> {
    pub weight: DenseMatrix<T>,
    pub bias: Vec<T>,
    /// Gradient with respect to the layer input; `None` when not requested.
    pub input: Option<DenseMatrix<T>>,
}

pub fn linear_backward<T: Scalar>(
    w: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
    dy: &DenseMatrix<T>,
    want_input: bool,
) -> Result<LinearGrads<T>> {
    let weight = matmul_nt(dy, x)?;
    let bias = row_sums(dy);
    let input = if want_input { Some(matmul_tn(w, dy)?) } else { None };
    Ok(LinearGrads { weight, bias, input })
}

pub(crate) fn row_sums<T: Scalar>(m: &DenseMatrix<T>) -> Vec<T> {
    (0..m.rows()).map(|r| m.row(r).iter().copied().sum()).collect()
}

pub fn relu<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Masks `upstream` where `x <= 0` (subgradient 0 at the kink).
pub fn relu_backward<T: Scalar>(x: &DenseMatrix<T>, upstream: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if x.shape() != upstream.shape() {
        return Err(Error::shape("relu_backward", format!("{:?} vs {:?}", x.shape(), upstream.shape())));
    }
    let mut out = upstream.clone();
    for (g, &v) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
        if v <= T::zero() {
            *g = T::zero();
        }
    }
    Ok(out)
}

/// Column-wise softmax of a `C × batch` logit matrix.
pub fn softmax_columns<T: Scalar>(logits: &DenseMatrix<T>) -> DenseMatrix<T> {
    let (c, b) = logits.shape();
    let mut out = logits.clone();
    for j in 0..b {
        let max = (0..c).map(|k| logits.get(k, j)).fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for k in 0..c {
            let e = (logits.get(k, j) - max).exp();
            out.set(k, j, e);
            total += e;
        }
        for k in 0..c {
            out.set(k, j, out.get(k, j) / total);
        }
    }
    out
}

/// Mean negative log-likelihood over the batch and its gradient
/// `(softmax − onehot) / batch`.
pub fn softmax_xent<T: Scalar>(logits: &DenseMatrix<T>, labels: &[usize]) -> Result<(T, DenseMatrix<T>)> {
    let (c, b) = logits.shape();
    if labels.len() != b {
        return Err(Error::LengthMismatch { what: "labels", got: labels.len(), expected: b });
    }
    if b == 0 {
        return Ok((T::zero(), DenseMatrix::zeros(c, 0)));
    }
    let inv_b = T::one() / T::of(b as f64);
    let mut grad = DenseMatrix::zeros(c, b);
    let mut loss = T::zero();
    for (j, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(Error::LabelOutOfRange { node: j, label: y, num_classes: c });
        }
        let max = (0..c).map(|k| logits.get(k, j)).fold(T::neg_infinity(), T::max);
        let total: T = (0..c).map(|k| (logits.get(k, j) - max).exp()).sum();
        let log_total = total.ln();
        loss += log_total - (logits.get(y, j) - max);
        for k in 0..c {
            let p = (logits.get(k, j) - max - log_total).exp();
            let target = if k == y { T::one() } else { T::zero() };
            grad.set(k, j, (p - target) * inv_b);
        }
    }
    Ok((loss * inv_b, grad))
}
