//! LINKX: separate adjacency and feature embeddings, mixed by a linear map
//! with additive skip connections, then classified by a final MLP:
//!
//! ```text
//! h_A = MLP_A(A[:, batch])            d × b
//! h_X = MLP_X(X[:, batch])            d × b
//! Y   = MLP_f(ReLU(W [h_A; h_X] + h_A + h_X))
//! ```
//!
//! The first layer of `MLP_A` is a dense-times-sparse product, so its cost
//! scales with the number of stored adjacency entries of the batch.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{matmul, matmul_nt, matmul_tn, relu, relu_backward, softmax_xent, DenseMatrix};
use crate::models::mlp::{AdjacencyBatch, Block, Input};
use crate::models::params::{Grads, ParamRole, ParamSet};
use crate::models::{chain, Architecture, Model, NodeBatch};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinkxPlan {
    adj: Block,
    feat: Block,
    mix: usize,
    fin: Block,
    hidden: usize,
}

impl LinkxPlan {
    /// `dims = [n, D, d, C]`, `depths = [adj, feat, final]`.
    pub(crate) fn init<T: Scalar, R: Rng>(
        params: &mut ParamSet<T>,
        dims: [usize; 4],
        depths: [usize; 3],
        rng: &mut R,
    ) -> Self {
        let [n, feature_dim, d, c] = dims;
        let adj = Block::init(params, "adj.", 0, &chain(n, d, depths[0], d), true, rng);
        let feat = Block::init(params, "feat.", 0, &chain(feature_dim, d, depths[1], d), true, rng);
        let mix = params.push_init("mix.weight", ParamRole::Weight, d, 2 * d, 2 * d, rng);
        let fin = Block::init(params, "final.", 0, &chain(d, d, depths[2], c), true, rng);
        Self { adj, feat, mix, fin, hidden: d }
    }

    pub(crate) fn evaluate<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        adjacency: &AdjacencyBatch<T>,
        features: &DenseMatrix<T>,
        labels: Option<&[usize]>,
    ) -> Result<(DenseMatrix<T>, Option<(T, Grads<T>)>)> {
        if adjacency.cols.cols() != features.cols() {
            return Err(Error::shape(
                "linkx",
                format!("{} adjacency columns vs {} feature columns", adjacency.cols.cols(), features.cols()),
            ));
        }
        let d = self.hidden;
        let a_in = Input::Adjacency(adjacency);
        let x_in = Input::Dense(features);
        let (h_a, cache_a) = self.adj.forward(params, a_in)?;
        let (h_x, cache_x) = self.feat.forward(params, x_in)?;
        let stacked = h_a.vstack(&h_x)?;
        let mut z = matmul(params.value(self.mix), &stacked)?;
        z.add_assign(&h_a)?;
        z.add_assign(&h_x)?;
        let mixed = relu(&z);
        let m_in = Input::Dense(&mixed);
        let (logits, cache_f) = self.fin.forward(params, m_in)?;

        let Some(labels) = labels else {
            return Ok((logits, None));
        };
        let (loss, dlogits) = softmax_xent(&logits, labels)?;
        let mut grads = params.zeros_like();
        let dmixed = self
            .fin
            .backward(params, m_in, &cache_f, dlogits, &mut grads, true)?
            .expect("dense input gradient");
        let dz = relu_backward(&z, &dmixed)?;
        grads[self.mix].add_assign(&matmul_nt(&dz, &stacked)?)?;
        let dstacked = matmul_tn(params.value(self.mix), &dz)?;
        let mut dh_a = dstacked.row_range(0, d);
        dh_a.add_assign(&dz)?;
        let mut dh_x = dstacked.row_range(d, 2 * d);
        dh_x.add_assign(&dz)?;
        self.adj.backward(params, a_in, &cache_a, dh_a, &mut grads, false)?;
        self.feat.backward(params, x_in, &cache_x, dh_x, &mut grads, false)?;
        Ok((logits, Some((loss, grads))))
    }
}

/// LINKX logits for matching adjacency columns (`n × b`) and feature columns (`D × b`).
pub fn linkx_forward<T: Scalar>(
    model: &Model<T>,
    adjacency: &AdjacencyBatch<T>,
    features: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !matches!(model.architecture(), Architecture::Linkx { .. }) {
        return Err(Error::Invalid("linkx_forward needs a LINKX model".into()));
    }
    let batch = NodeBatch {
        nodes: (0..features.cols()).collect(),
        adjacency: Some(adjacency.clone()),
        features: Some(features.clone()),
    };
    model.forward(&batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::kernel::{gradcheck, linear_forward, softmax_columns};
    use crate::models::flatten_grads;
    use crate::rng::{stream, Stream};

    fn arch(n: usize, feature_dim: usize, hidden: usize, classes: usize, final_layers: usize) -> Architecture {
        Architecture::Linkx { num_nodes: n, feature_dim, hidden, classes, adj_layers: 1, feat_layers: 1, final_layers }
    }

    fn instance(n: usize, feature_dim: usize, seed: u64) -> (crate::graph::Graph, DenseMatrix<f64>) {
        let edges: Vec<_> = (0..n).flat_map(|u| [(u, (u * 5 + 1) % n), (u, (u + 3) % n)]).collect();
        let g = build_graph(&edges, n, false).unwrap();
        let x = DenseMatrix::from_fn(feature_dim, n, |r, c| {
            (((r * 13 + c * 7) as u64 + seed) % 17) as f64 / 8.0 - 1.0
        });
        (g, x)
    }

    #[test]
    fn zero_parameters_give_uniform_predictions() {
        let (g, x) = instance(12, 5, 0);
        let a = arch(12, 5, 4, 3, 2);
        let mut m = Model::<f64>::new(a.clone(), &mut stream(1, Stream::Init, 0)).unwrap();
        m.params_mut().iter_mut().for_each(|p| p.value.fill(0.0));
        let nodes: Vec<usize> = (0..12).collect();
        let batch = NodeBatch::gather(&a, &g, &x, &nodes).unwrap();
        let p = softmax_columns(&m.forward(&batch).unwrap());
        assert!(p.as_slice().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn feature_skip_path_alone_recovers_an_mlp() {
        // W_mix = 0 and MLP_A = 0: logits = MLP_f(ReLU(MLP_X(X)))
        let (g, x) = instance(12, 5, 1);
        let a = arch(12, 5, 4, 3, 1);
        let mut m = Model::<f64>::new(a.clone(), &mut stream(2, Stream::Init, 0)).unwrap();
        for name in ["adj.layer0.weight", "adj.layer0.bias", "mix.weight"] {
            let i = m.params().find(name).unwrap();
            m.params_mut().value_mut(i).fill(0.0);
        }
        let nodes: Vec<usize> = (0..12).collect();
        let batch = NodeBatch::gather(&a, &g, &x, &nodes).unwrap();
        let p = m.params();
        let hx = linear_forward(p.value(2), Some(p.bias(3)), &x).unwrap();
        let expected = linear_forward(p.value(5), Some(p.bias(6)), &relu(&hx)).unwrap();
        assert!(m.forward(&batch).unwrap().max_abs_diff(&expected) < 1e-12);
    }

    /// Dense recomputation of the LINKX forward pass.
    pub(crate) fn dense_oracle(m: &Model<f64>, a_cols: &DenseMatrix<f64>, x: &DenseMatrix<f64>) -> DenseMatrix<f64> {
        let p = m.params();
        let get = |name: &str| p.value(p.find(name).unwrap()).clone();
        let lin = |w: &str, b: &str, input: &DenseMatrix<f64>| {
            linear_forward(&get(w), Some(get(b).as_slice()), input).unwrap()
        };
        let h_a = lin("adj.layer0.weight", "adj.layer0.bias", a_cols);
        let h_x = lin("feat.layer0.weight", "feat.layer0.bias", x);
        let mut z = matmul(&get("mix.weight"), &h_a.vstack(&h_x).unwrap()).unwrap();
        z.add_assign(&h_a).unwrap();
        z.add_assign(&h_x).unwrap();
        let mut h = relu(&z);
        let mut i = 0;
        while p.find(&format!("final.layer{}.weight", i + 1)).is_some() {
            h = relu(&lin(&format!("final.layer{i}.weight"), &format!("final.layer{i}.bias"), &h));
            i += 1;
        }
        lin(&format!("final.layer{i}.weight"), &format!("final.layer{i}.bias"), &h)
    }

    #[test]
    fn matches_dense_oracle() {
        let (g, x) = instance(12, 5, 2);
        for layers in 1..=3 {
            let a = arch(12, 5, 4, 3, layers);
            let m = Model::<f64>::new(a.clone(), &mut stream(3, Stream::Init, layers as u32)).unwrap();
            let nodes = [3, 0, 7, 11, 5];
            let batch = NodeBatch::gather(&a, &g, &x, &nodes).unwrap();
            let dense_cols = g.adjacency_columns::<f64>(&nodes).unwrap().to_dense();
            let expected = dense_oracle(&m, &dense_cols, &x.gather_columns(&nodes));
            let got = linkx_forward(&m, batch.adjacency.as_ref().unwrap(), batch.features.as_ref().unwrap()).unwrap();
            assert!(got.max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn gradcheck_small_instance() {
        let (g, x) = instance(10, 3, 3);
        let a = Architecture::Linkx { num_nodes: 10, feature_dim: 3, hidden: 4, classes: 3, adj_layers: 2, feat_layers: 2, final_layers: 2 };
        let model = Model::<f64>::new(a.clone(), &mut stream(4, Stream::Init, 0)).unwrap();
        let nodes: Vec<usize> = (0..10).collect();
        let batch = NodeBatch::gather(&a, &g, &x, &nodes).unwrap();
        let labels: Vec<usize> = (0..10).map(|u| u % 3).collect();
        let mut probe = model.clone();
        let err = gradcheck(
            |flat: &[f64]| {
                probe.params_mut().assign_flat(flat)?;
                let (l, gr) = probe.loss_and_grad(&batch, &labels)?;
                Ok((l, flatten_grads(&gr)))
            },
            &model.params().to_flat(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn mismatched_batch_is_rejected() {
        let (g, x) = instance(12, 5, 0);
        let a = arch(12, 5, 4, 3, 1);
        let m = Model::<f64>::new(a.clone(), &mut stream(1, Stream::Init, 0)).unwrap();
        let batch = NodeBatch::gather(&a, &g, &x, &[0, 1]).unwrap();
        assert!(linkx_forward(&m, batch.adjacency.as_ref().unwrap(), &x).is_err());
    }
}
