//! Ablation model: a single MLP over the stacked input `[A[:, batch]; X[:, batch]]`.
//!
//! The first weight is stored as two blocks, `h × n` for the adjacency rows and
//! `h × D` for the feature rows, which is the same linear map as one
//! `h × (n + D)` matrix.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::ops::{add_bias, row_sums};
use crate::kernel::{dsmm, matmul, matmul_nt, relu, relu_backward, softmax_xent, DenseMatrix};
use crate::models::mlp::{AdjacencyBatch, Block, Input};
use crate::models::params::{Grads, ParamRole, ParamSet};
use crate::models::{chain, Architecture, Model, NodeBatch};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ConcatPlan {
    w_adj: usize,
    w_feat: usize,
    bias: usize,
    rest: Option<Block>,
}

impl ConcatPlan {
    pub(crate) fn init<T: Scalar, R: Rng>(
        params: &mut ParamSet<T>,
        n: usize,
        feature_dim: usize,
        hidden: usize,
        layers: usize,
        classes: usize,
        rng: &mut R,
    ) -> Self {
        let first_out = if layers == 1 { classes } else { hidden };
        let fan_in = n + feature_dim;
        let w_adj = params.push_init("layer0.weight_adj", ParamRole::Weight, first_out, n, fan_in, rng);
        let w_feat = params.push_init("layer0.weight_feat", ParamRole::Weight, first_out, feature_dim, fan_in, rng);
        let bias = params.push_init("layer0.bias", ParamRole::Bias, first_out, 1, fan_in, rng);
        let rest = (layers > 1)
            .then(|| Block::init(params, "", 1, &chain(hidden, hidden, layers - 1, classes), true, rng));
        Self { w_adj, w_feat, bias, rest }
    }

    pub(crate) fn evaluate<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        adjacency: &AdjacencyBatch<T>,
        features: &DenseMatrix<T>,
        labels: Option<&[usize]>,
    ) -> Result<(DenseMatrix<T>, Option<(T, Grads<T>)>)> {
        let w_feat = params.value(self.w_feat);
        if adjacency.cols.cols() != features.cols() || w_feat.cols() != features.rows() {
            return Err(Error::shape(
                "concat-mlp",
                format!(
                    "adjacency {}x{}, features {:?}, feature weight {:?}",
                    adjacency.cols.rows(),
                    adjacency.cols.cols(),
                    features.shape(),
                    w_feat.shape()
                ),
            ));
        }
        let mut z = dsmm(params.value(self.w_adj), &adjacency.cols)?;
        z.add_assign(&matmul(w_feat, features)?)?;
        add_bias(&mut z, params.bias(self.bias))?;

        let (logits, hidden) = match &self.rest {
            None => (z.clone(), None),
            Some(block) => {
                let h = relu(&z);
                let (out, cache) = block.forward(params, Input::Dense(&h))?;
                (out, Some((h, cache)))
            }
        };
        let Some(labels) = labels else {
            return Ok((logits, None));
        };
        let (loss, dlogits) = softmax_xent(&logits, labels)?;
        let mut grads = params.zeros_like();
        let dz = match (&self.rest, &hidden) {
            (Some(block), Some((h, cache))) => {
                let dh = block
                    .backward(params, Input::Dense(h), cache, dlogits, &mut grads, true)?
                    .expect("dense input gradient");
                relu_backward(&z, &dh)?
            }
            _ => dlogits,
        };
        grads[self.w_adj].add_assign(&dsmm(&dz, &adjacency.rows)?)?;
        grads[self.w_feat].add_assign(&matmul_nt(&dz, features)?)?;
        for (g, s) in grads[self.bias].as_mut_slice().iter_mut().zip(row_sums(&dz)) {
            *g += s;
        }
        Ok((logits, Some((loss, grads))))
    }
}

/// Concatenation-MLP logits for matching adjacency and feature columns.
pub fn concat_mlp_forward<T: Scalar>(
    model: &Model<T>,
    adjacency: &AdjacencyBatch<T>,
    features: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !matches!(model.architecture(), Architecture::ConcatMlp { .. }) {
        return Err(Error::Invalid("concat_mlp_forward needs a concatenation MLP".into()));
    }
    let batch = NodeBatch {
        nodes: (0..features.cols()).collect(),
        adjacency: Some(adjacency.clone()),
        features: Some(features.clone()),
    };
    model.forward(&batch)
}
