//! The simple-methods model zoo.
//!
//! Trainable models (MLP, LINK, LINKX, concatenation MLP, SGC head) share one
//! [`Model`] type: an [`Architecture`] plus an ordered [`ParamSet`]. Label
//! propagation is parameter-free and lives in [`propagation`].
//!
//! Activations are column-per-node: a batch of `b` nodes has `D × b` features,
//! `n × b` adjacency columns and `C × b` logits.

pub mod concat;
pub mod link;
pub mod linkx;
pub mod mlp;
pub mod params;
pub mod propagation;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{softmax_xent, DenseMatrix};
use crate::scalar::Scalar;

pub use concat::concat_mlp_forward;
pub use link::link_forward;
pub use linkx::linkx_forward;
pub use mlp::AdjacencyBatch;
use mlp::{Block, Input};
pub use params::{flatten_grads, Grads, Param, ParamRole, ParamSet};
pub use propagation::{label_propagation, propagate_features, sgc_logits, Normalization, PropagationConfig};

/// Model families exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Mlp,
    Link,
    Linkx,
    ConcatMlp,
    Labelprop,
    Sgc,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Link => "link",
            ModelKind::Linkx => "linkx",
            ModelKind::ConcatMlp => "concat-mlp",
            ModelKind::Labelprop => "labelprop",
            ModelKind::Sgc => "sgc",
        }
    }
}

/// Shape description of a trainable model; enough to rebuild it from a flat
/// parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Architecture {
    /// `layers` linear layers `D → hidden → … → C`.
    Mlp { feature_dim: usize, hidden: usize, layers: usize, classes: usize },
    /// Logistic regression on adjacency columns, `C × n` weight.
    Link { num_nodes: usize, classes: usize, bias: bool },
    Linkx {
        num_nodes: usize,
        feature_dim: usize,
        hidden: usize,
        classes: usize,
        adj_layers: usize,
        feat_layers: usize,
        final_layers: usize,
    },
    /// One MLP over the stacked input `[A; X]`.
    ConcatMlp { num_nodes: usize, feature_dim: usize, hidden: usize, layers: usize, classes: usize },
    /// Logistic regression on `S^hops X`; the batch carries propagated features.
    Sgc { feature_dim: usize, classes: usize, hops: usize },
}

impl Architecture {
    pub fn kind(&self) -> ModelKind {
        match self {
            Architecture::Mlp { .. } => ModelKind::Mlp,
            Architecture::Link { .. } => ModelKind::Link,
            Architecture::Linkx { .. } => ModelKind::Linkx,
            Architecture::ConcatMlp { .. } => ModelKind::ConcatMlp,
            Architecture::Sgc { .. } => ModelKind::Sgc,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            Architecture::Mlp { classes, .. }
            | Architecture::Link { classes, .. }
            | Architecture::Linkx { classes, .. }
            | Architecture::ConcatMlp { classes, .. }
            | Architecture::Sgc { classes, .. } => classes,
        }
    }

    pub fn needs_adjacency(&self) -> bool {
        matches!(self, Architecture::Link { .. } | Architecture::Linkx { .. } | Architecture::ConcatMlp { .. })
    }

    pub fn needs_features(&self) -> bool {
        !matches!(self, Architecture::Link { .. })
    }

    /// Node count the model was built for, if it depends on one.
    pub fn num_nodes(&self) -> Option<usize> {
        match *self {
            Architecture::Link { num_nodes, .. }
            | Architecture::Linkx { num_nodes, .. }
            | Architecture::ConcatMlp { num_nodes, .. } => Some(num_nodes),
            _ => None,
        }
    }

    pub fn feature_dim(&self) -> Option<usize> {
        match *self {
            Architecture::Mlp { feature_dim, .. }
            | Architecture::Linkx { feature_dim, .. }
            | Architecture::ConcatMlp { feature_dim, .. }
            | Architecture::Sgc { feature_dim, .. } => Some(feature_dim),
            Architecture::Link { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Invalid(format!("{msg}: {self:?}")));
        match *self {
            Architecture::Mlp { hidden, layers, classes, .. } => {
                if layers == 0 || classes == 0 || (layers > 1 && hidden == 0) {
                    return bad("MLP needs layers >= 1, classes >= 1 and a positive hidden size");
                }
            }
            Architecture::Link { num_nodes, classes, .. } => {
                if num_nodes == 0 || classes == 0 {
                    return bad("LINK needs nodes and classes");
                }
            }
            Architecture::Linkx { num_nodes, hidden, classes, adj_layers, feat_layers, final_layers, .. } => {
                if num_nodes == 0 || hidden == 0 || classes == 0 || adj_layers == 0 || feat_layers == 0 || final_layers == 0 {
                    return bad("LINKX dimensions and depths must be positive");
                }
            }
            Architecture::ConcatMlp { num_nodes, hidden, layers, classes, .. } => {
                if num_nodes == 0 || layers == 0 || classes == 0 || (layers > 1 && hidden == 0) {
                    return bad("concatenation MLP dimensions must be positive");
                }
            }
            Architecture::Sgc { classes, hops, .. } => {
                if classes == 0 || !(1..=2).contains(&hops) {
                    return bad("SGC needs classes >= 1 and hops in {1, 2}");
                }
            }
        }
        Ok(())
    }
}

/// Layer chain `input → hidden × (layers − 1) → output`.
fn chain(input: usize, hidden: usize, layers: usize, output: usize) -> Vec<usize> {
    let mut dims = vec![input];
    dims.extend(std::iter::repeat_n(hidden, layers - 1));
    dims.push(output);
    dims
}

#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Dense(Block),
    Adjacency(Block),
    Linkx(linkx::LinkxPlan),
    Concat(concat::ConcatPlan),
}

/// Inputs for one forward pass over a set of nodes.
#[derive(Debug, Clone)]
pub struct NodeBatch<T> {
    pub nodes: Vec<usize>,
    pub adjacency: Option<AdjacencyBatch<T>>,
    /// `D × |nodes|`.
    pub features: Option<DenseMatrix<T>>,
}

impl<T: Scalar> NodeBatch<T> {
    /// Slices the adjacency and feature columns of `nodes` that `arch` uses.
    pub fn gather(arch: &Architecture, graph: &Graph, features: &DenseMatrix<T>, nodes: &[usize]) -> Result<Self> {
        let adjacency = if arch.needs_adjacency() {
            Some(AdjacencyBatch::from_rows(graph.adjacency_rows(nodes)?))
        } else {
            None
        };
        let features = arch.needs_features().then(|| features.gather_columns(nodes));
        Ok(Self { nodes: nodes.to_vec(), adjacency, features })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn adjacency(&self) -> Result<&AdjacencyBatch<T>> {
        self.adjacency.as_ref().ok_or_else(|| Error::shape("model input", "batch has no adjacency columns"))
    }

    fn features(&self) -> Result<&DenseMatrix<T>> {
        self.features.as_ref().ok_or_else(|| Error::shape("model input", "batch has no feature columns"))
    }
}

/// A trainable node classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    arch: Architecture,
    params: ParamSet<T>,
    plan: Plan,
}

impl<T: Scalar> Model<T> {
    /// Builds the model with parameters drawn uniformly in `±1/sqrt(fan_in)`.
    ///
    /// Parameter order (also the checkpoint order):
    /// * MLP / SGC: `layer{i}.weight`, `layer{i}.bias` for each layer;
    /// * LINK: `layer0.weight` (`C × n`), then `layer0.bias` when enabled;
    /// * LINKX: `adj.*` layers, `feat.*` layers, `mix.weight` (`d × 2d`), `final.*` layers;
    /// * concatenation MLP: `layer0.weight_adj` (`h × n`), `layer0.weight_feat`
    ///   (`h × D`), `layer0.bias`, then `layer{i}.*` for the remaining layers.
    pub fn new<R: Rng>(arch: Architecture, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let mut params = ParamSet::new();
        let plan = match arch {
            Architecture::Mlp { feature_dim, hidden, layers, classes } => {
                Plan::Dense(Block::init(&mut params, "", 0, &chain(feature_dim, hidden, layers, classes), true, rng))
            }
            Architecture::Sgc { feature_dim, classes, .. } => {
                Plan::Dense(Block::init(&mut params, "", 0, &[feature_dim, classes], true, rng))
            }
            Architecture::Link { num_nodes, classes, bias } => {
                Plan::Adjacency(Block::init(&mut params, "", 0, &[num_nodes, classes], bias, rng))
            }
            Architecture::Linkx { num_nodes, feature_dim, hidden, classes, adj_layers, feat_layers, final_layers } => {
                Plan::Linkx(linkx::LinkxPlan::init(
                    &mut params,
                    [num_nodes, feature_dim, hidden, classes],
                    [adj_layers, feat_layers, final_layers],
                    rng,
                ))
            }
            Architecture::ConcatMlp { num_nodes, feature_dim, hidden, layers, classes } => Plan::Concat(
                concat::ConcatPlan::init(&mut params, num_nodes, feature_dim, hidden, layers, classes, rng),
            ),
        };
        Ok(Self { arch, params, plan })
    }

    /// Rebuilds a model from its architecture and flat parameters.
    pub fn from_flat(arch: Architecture, flat: &[T]) -> Result<Self> {
        let mut rng = crate::rng::stream(0, crate::rng::Stream::Init, 0);
        let mut model = Self::new(arch, &mut rng)?;
        model.params.assign_flat(flat)?;
        Ok(model)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    /// `C × batch` logits.
    pub fn forward(&self, batch: &NodeBatch<T>) -> Result<DenseMatrix<T>> {
        Ok(self.evaluate(batch, None)?.0)
    }

    /// Mean cross-entropy over the batch and its gradient for every parameter.
    pub fn loss_and_grad(&self, batch: &NodeBatch<T>, labels: &[usize]) -> Result<(T, Grads<T>)> {
        let (_, out) = self.evaluate(batch, Some(labels))?;
        Ok(out.expect("labels given"))
    }

    fn evaluate(
        &self,
        batch: &NodeBatch<T>,
        labels: Option<&[usize]>,
    ) -> Result<(DenseMatrix<T>, Option<(T, Grads<T>)>)> {
        let params = &self.params;
        let loss_grad = |logits: &DenseMatrix<T>| -> Result<Option<(T, DenseMatrix<T>)>> {
            labels.map(|l| softmax_xent(logits, l)).transpose()
        };
        match &self.plan {
            Plan::Dense(block) | Plan::Adjacency(block) => {
                let input = match self.plan {
                    Plan::Dense(_) => Input::Dense(batch.features()?),
                    _ => Input::Adjacency(batch.adjacency()?),
                };
                let (logits, cache) = block.forward(params, input)?;
                let Some((loss, dlogits)) = loss_grad(&logits)? else {
                    return Ok((logits, None));
                };
                let mut grads = params.zeros_like();
                block.backward(params, input, &cache, dlogits, &mut grads, false)?;
                Ok((logits, Some((loss, grads))))
            }
            Plan::Linkx(plan) => plan.evaluate(params, batch.adjacency()?, batch.features()?, labels),
            Plan::Concat(plan) => plan.evaluate(params, batch.adjacency()?, batch.features()?, labels),
        }
    }
}

/// MLP logits for a `D × batch` feature matrix.
pub fn mlp_forward<T: Scalar>(model: &Model<T>, features: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !matches!(model.arch, Architecture::Mlp { .. } | Architecture::Sgc { .. }) {
        return Err(Error::Invalid("mlp_forward needs an MLP model".into()));
    }
    let batch = NodeBatch { nodes: (0..features.cols()).collect(), adjacency: None, features: Some(features.clone()) };
    model.forward(&batch)
}
