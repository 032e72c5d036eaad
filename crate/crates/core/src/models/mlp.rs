//! Stacks of linear layers with ReLU between them (none after the last).

use crate::error::{Error, Result};
use crate::kernel::ops::{add_bias, row_sums};
use crate::kernel::{dsmm, matmul, matmul_nt, matmul_tn, relu, relu_backward, DenseMatrix, SparseMatrix};
use crate::models::params::{Grads, ParamRole, ParamSet};
use crate::scalar::Scalar;
use rand::Rng;

/// Adjacency columns of a node batch in both orientations.
#[derive(Debug, Clone)]
pub struct AdjacencyBatch<T> {
    /// `n × batch`; column `j` indicates the in-neighbors of node `j`.
    pub cols: SparseMatrix<T>,
    /// `batch × n`, the transpose of `cols`.
    pub rows: SparseMatrix<T>,
}

impl<T: Scalar> AdjacencyBatch<T> {
    pub fn from_rows(rows: SparseMatrix<T>) -> Self {
        Self { cols: rows.transpose(), rows }
    }

    pub fn from_cols(cols: SparseMatrix<T>) -> Self {
        Self { rows: cols.transpose(), cols }
    }
}

/// Input to the first layer of a block.
#[derive(Clone, Copy)]
pub(crate) enum Input<'a, T> {
    Dense(&'a DenseMatrix<T>),
    Adjacency(&'a AdjacencyBatch<T>),
}

impl<T: Scalar> Input<'_, T> {
    fn rows(&self) -> usize {
        match self {
            Input::Dense(x) => x.rows(),
            Input::Adjacency(a) => a.cols.rows(),
        }
    }

    /// `w · input`.
    pub(crate) fn left_mul(&self, w: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match self {
            Input::Dense(x) => matmul(w, x),
            Input::Adjacency(a) => dsmm(w, &a.cols),
        }
    }

    /// Weight gradient `dy · inputᵀ`.
    pub(crate) fn weight_grad(&self, dy: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match self {
            Input::Dense(x) => matmul_nt(dy, x),
            Input::Adjacency(a) => dsmm(dy, &a.rows),
        }
    }
}

/// Indices of one linear layer's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LinearIdx {
    pub weight: usize,
    pub bias: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Block {
    pub layers: Vec<LinearIdx>,
}

pub(crate) struct BlockCache<T> {
    /// Pre-activations of every layer but the last.
    pre: Vec<DenseMatrix<T>>,
    /// ReLU outputs feeding layers `1..`.
    post: Vec<DenseMatrix<T>>,
}

impl Block {
    /// Registers layers mapping `dims[0] → dims[1] → … → dims[last]`, named
    /// `{prefix}layer{start + i}.*`.
    pub(crate) fn init<T: Scalar, R: Rng>(
        params: &mut ParamSet<T>,
        prefix: &str,
        start: usize,
        dims: &[usize],
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let i = start + i;
                let weight = params.push_init(format!("{prefix}layer{i}.weight"), ParamRole::Weight, w[1], w[0], w[0], rng);
                let bias = bias.then(|| {
                    params.push_init(format!("{prefix}layer{i}.bias"), ParamRole::Bias, w[1], 1, w[0], rng)
                });
                LinearIdx { weight, bias }
            })
            .collect();
        Block { layers }
    }

    pub(crate) fn forward<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        input: Input<'_, T>,
    ) -> Result<(DenseMatrix<T>, BlockCache<T>)> {
        let mut cache = BlockCache { pre: Vec::new(), post: Vec::new() };
        let last = self.layers.len() - 1;
        let mut out = DenseMatrix::zeros(0, 0);
        for (i, layer) in self.layers.iter().enumerate() {
            let w = params.value(layer.weight);
            let x = if i == 0 { input } else { Input::Dense(&cache.post[i - 1]) };
            if w.cols() != x.rows() {
                return Err(Error::shape(
                    "linear layer",
                    format!("weight {:?} applied to {} input rows", w.shape(), x.rows()),
                ));
            }
            let mut z = x.left_mul(w)?;
            if let Some(b) = layer.bias {
                add_bias(&mut z, params.bias(b))?;
            }
            if i == last {
                out = z;
            } else {
                cache.post.push(relu(&z));
                cache.pre.push(z);
            }
        }
        Ok((out, cache))
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to a dense input when `want_input` is set.
    pub(crate) fn backward<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        input: Input<'_, T>,
        cache: &BlockCache<T>,
        dout: DenseMatrix<T>,
        grads: &mut Grads<T>,
        want_input: bool,
    ) -> Result<Option<DenseMatrix<T>>> {
        let mut dy = dout;
        for i in (0..self.layers.len()).rev() {
            let layer = self.layers[i];
            let w = params.value(layer.weight);
            let x = if i == 0 { input } else { Input::Dense(&cache.post[i - 1]) };
            grads[layer.weight].add_assign(&x.weight_grad(&dy)?)?;
            if let Some(b) = layer.bias {
                for (g, s) in grads[b].as_mut_slice().iter_mut().zip(row_sums(&dy)) {
                    *g += s;
                }
            }
            if i > 0 {
                let dx = matmul_tn(w, &dy)?;
                dy = relu_backward(&cache.pre[i - 1], &dx)?;
            } else if want_input {
                return match input {
                    Input::Dense(_) => Ok(Some(matmul_tn(w, &dy)?)),
                    Input::Adjacency(_) => Ok(None),
                };
            }
        }
        Ok(None)
    }
}
