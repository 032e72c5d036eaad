//! Splits, optimization, training loops, model selection and metrics.

pub mod metrics;
pub mod optim;
pub mod split;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph};
use crate::kernel::{softmax_columns, DenseMatrix};
use crate::models::{
    label_propagation, propagate_features, Architecture, Model, ModelKind, NodeBatch, Normalization,
    PropagationConfig,
};
use crate::rng::{self, Stream};
use crate::scalar::Scalar;

pub use metrics::{accuracy, roc_auc};
pub use optim::{adamw_step, AdamW, OptimizerState};
pub use split::{make_splits, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum BatchPolicy {
    Full,
    /// Uniform node samples of `⌈fraction · n_train⌉` training nodes.
    Iid { fraction: f64 },
}

impl BatchPolicy {
    pub const IID_DEFAULT: BatchPolicy = BatchPolicy::Iid { fraction: 0.1 };

    pub fn name(&self) -> &'static str {
        match self {
            BatchPolicy::Full => "full",
            BatchPolicy::Iid { .. } => "iid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    RocAuc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    /// Decay for every grid point that does not sweep its own.
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch: BatchPolicy,
    /// Optimizer steps per epoch, one sampled batch each.
    pub steps_per_epoch: usize,
    pub seed: u64,
    pub metric: Metric,
    /// Train on the symmetrized graph. Label propagation and SGC always do.
    pub symmetrize: bool,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            lr: 0.01,
            weight_decay: 0.001,
            epochs: 500,
            batch: BatchPolicy::Full,
            steps_per_epoch: 1,
            seed,
            metric: Metric::Accuracy,
            symmetrize: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.epochs == 0 || self.steps_per_epoch == 0 || !(self.weight_decay >= 0.0) {
            return Err(Error::Invalid("need lr > 0, weight_decay >= 0, epochs >= 1, steps_per_epoch >= 1".into()));
        }
        if let BatchPolicy::Iid { fraction } = self.batch {
            if !(fraction > 0.0) {
                return Err(Error::Invalid(format!("batch fraction {fraction} must be positive")));
            }
        }
        Ok(())
    }
}

/// Settings of a model family that the grid does not sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Propagation depth for label propagation and SGC.
    pub hops: usize,
    pub link_bias: bool,
    pub adj_layers: usize,
    pub feat_layers: usize,
    pub normalization: Normalization,
    pub propagation_iterations: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            hops: 1,
            link_bias: false,
            adj_layers: 1,
            feat_layers: 1,
            normalization: Normalization::Sym,
            propagation_iterations: 50,
        }
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum HyperParams {
    Mlp { hidden: usize, layers: usize },
    Link { weight_decay: f64 },
    Linkx { hidden: usize, final_layers: usize },
    ConcatMlp { hidden: usize, layers: usize },
    Labelprop { alpha: f64 },
    Sgc { weight_decay: f64 },
}

impl HyperParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            HyperParams::Mlp { .. } => ModelKind::Mlp,
            HyperParams::Link { .. } => ModelKind::Link,
            HyperParams::Linkx { .. } => ModelKind::Linkx,
            HyperParams::ConcatMlp { .. } => ModelKind::ConcatMlp,
            HyperParams::Labelprop { .. } => ModelKind::Labelprop,
            HyperParams::Sgc { .. } => ModelKind::Sgc,
        }
    }

    fn weight_decay(&self, cfg: &TrainConfig) -> f64 {
        match *self {
            HyperParams::Link { weight_decay } | HyperParams::Sgc { weight_decay } => weight_decay,
            _ => cfg.weight_decay,
        }
    }

    /// The trainable architecture for this point, `None` for label propagation.
    pub fn architecture(&self, opts: &ModelOptions, n: usize, feature_dim: usize, classes: usize) -> Option<Architecture> {
        Some(match *self {
            HyperParams::Mlp { hidden, layers } => Architecture::Mlp { feature_dim, hidden, layers, classes },
            HyperParams::Link { .. } => Architecture::Link { num_nodes: n, classes, bias: opts.link_bias },
            HyperParams::Linkx { hidden, final_layers } => Architecture::Linkx {
                num_nodes: n,
                feature_dim,
                hidden,
                classes,
                adj_layers: opts.adj_layers,
                feat_layers: opts.feat_layers,
                final_layers,
            },
            HyperParams::ConcatMlp { hidden, layers } => {
                Architecture::ConcatMlp { num_nodes: n, feature_dim, hidden, layers, classes }
            }
            HyperParams::Sgc { .. } => Architecture::Sgc { feature_dim, classes, hops: opts.hops },
            HyperParams::Labelprop { .. } => return None,
        })
    }
}

/// The hyperparameter grid searched for each model family.
pub fn default_grid(kind: ModelKind) -> Vec<HyperParams> {
    let mlp_like = |f: fn(usize, usize) -> HyperParams| {
        [16, 32, 64, 128, 256].into_iter().flat_map(move |h| [2, 3].into_iter().map(move |l| f(h, l))).collect()
    };
    match kind {
        ModelKind::Mlp => mlp_like(|hidden, layers| HyperParams::Mlp { hidden, layers }),
        ModelKind::ConcatMlp => mlp_like(|hidden, layers| HyperParams::ConcatMlp { hidden, layers }),
        ModelKind::Linkx => [16, 32, 128, 256]
            .into_iter()
            .flat_map(|hidden| (1..=3).map(move |final_layers| HyperParams::Linkx { hidden, final_layers }))
            .collect(),
        ModelKind::Labelprop => {
            [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99].into_iter().map(|alpha| HyperParams::Labelprop { alpha }).collect()
        }
        ModelKind::Link => [0.001, 0.01, 0.1].into_iter().map(|weight_decay| HyperParams::Link { weight_decay }).collect(),
        ModelKind::Sgc => [0.001, 0.01, 0.1].into_iter().map(|weight_decay| HyperParams::Sgc { weight_decay }).collect(),
    }
}

/// Model inputs after any graph-level precompute.
#[derive(Debug, Clone)]
pub struct Prepared<T> {
    pub kind: ModelKind,
    pub options: ModelOptions,
    pub graph: Graph,
    /// `D × n`; for SGC these are the propagated features.
    pub features: DenseMatrix<T>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl<T: Scalar> Prepared<T> {
    pub fn new(dataset: &Dataset, kind: ModelKind, options: ModelOptions, symmetrize: bool) -> Result<Self> {
        let full_graph = matches!(kind, ModelKind::Labelprop | ModelKind::Sgc);
        let graph = if symmetrize || full_graph { dataset.graph.symmetrized() } else { dataset.graph.clone() };
        let mut features = dataset.features.cast::<T>();
        if kind == ModelKind::Sgc {
            if !(1..=2).contains(&options.hops) {
                return Err(Error::Invalid(format!("SGC hops must be 1 or 2, got {}", options.hops)));
            }
            features = propagate_features(&graph, &features, options.hops)?;
        }
        Ok(Self {
            kind,
            options,
            graph,
            features,
            labels: dataset.labels.values().to_vec(),
            num_classes: dataset.num_classes(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn architecture(&self, hyper: &HyperParams) -> Option<Architecture> {
        hyper.architecture(&self.options, self.num_nodes(), self.features.rows(), self.num_classes)
    }

    fn batch(&self, arch: &Architecture, nodes: &[usize]) -> Result<(NodeBatch<T>, Vec<usize>)> {
        let batch = NodeBatch::gather(arch, &self.graph, &self.features, nodes)?;
        Ok((batch, nodes.iter().map(|&u| self.labels[u]).collect()))
    }

    /// Label propagation seeded with the labels of `train`.
    pub fn propagation(&self, alpha: f64, train: &[usize]) -> Result<DenseMatrix<f64>> {
        let mut seeds = vec![None; self.num_nodes()];
        for &u in train {
            seeds[u] = Some(self.labels[u]);
        }
        let cfg = PropagationConfig {
            alpha,
            hops: self.options.hops,
            iterations: self.options.propagation_iterations,
            normalization: self.options.normalization,
        };
        label_propagation(&self.graph, &seeds, self.num_classes, &cfg)
    }
}

/// A fitted classifier: trained parameters or propagated soft labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor<T> {
    Trained(Model<T>),
    /// `C × n` soft labels.
    Propagated(DenseMatrix<f64>),
}

impl<T: Scalar> Predictor<T> {
    /// `C × |nodes|` class probabilities.
    pub fn probabilities(&self, data: &Prepared<T>, nodes: &[usize]) -> Result<DenseMatrix<f64>> {
        match self {
            Predictor::Trained(model) => {
                let (batch, _) = data.batch(model.architecture(), nodes)?;
                Ok(softmax_columns(&model.forward(&batch)?).cast())
            }
            Predictor::Propagated(soft) => Ok(soft.gather_columns(nodes)),
        }
    }

    pub fn evaluate(&self, data: &Prepared<T>, nodes: &[usize], metric: Metric) -> Result<f64> {
        score(&self.probabilities(data, nodes)?, &data.labels, nodes, metric)
    }
}

/// Metric of `C × |nodes|` probabilities against the labels of `nodes`.
pub fn score(probs: &DenseMatrix<f64>, labels: &[usize], nodes: &[usize], metric: Metric) -> Result<f64> {
    let local: Vec<usize> = nodes.iter().map(|&u| labels[u]).collect();
    let mask: Vec<usize> = (0..nodes.len()).collect();
    match metric {
        Metric::Accuracy => accuracy(&probs.argmax_columns(), &local, &mask),
        Metric::RocAuc => {
            if probs.rows() != 2 {
                return Err(Error::Invalid(format!("ROC-AUC needs 2 classes, got {}", probs.rows())));
            }
            roc_auc(probs.row(1), &local, &mask)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GridStatus {
    Completed,
    Failed { reason: String },
}

/// Training record of one grid point on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub index: usize,
    pub hyper: HyperParams,
    #[serde(flatten)]
    pub status: GridStatus,
    pub best_epoch: Option<usize>,
    pub best_val: Option<f64>,
    /// Mean training loss of each epoch.
    pub train_loss: Vec<f64>,
    /// Validation metric after each epoch.
    pub val_metric: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

/// Outcome of the grid search on one split.
#[derive(Debug, Clone)]
pub struct SplitRun<T> {
    pub split: usize,
    pub selected: usize,
    pub hyper: HyperParams,
    pub best_epoch: usize,
    pub metrics: SplitMetrics,
    pub grid: Vec<GridRecord>,
    pub predictor: Predictor<T>,
}

struct Fitted<T> {
    predictor: Predictor<T>,
    best_val: f64,
    best_epoch: usize,
}

/// RNG stream index of a (split, grid point) pair.
fn stream_index(split: usize, grid_index: usize) -> u32 {
    ((split as u32) << 16) | grid_index as u32
}

fn fit_point<T: Scalar>(
    data: &Prepared<T>,
    split: &Split,
    hyper: &HyperParams,
    grid_index: usize,
    cfg: &TrainConfig,
) -> Result<(GridRecord, Option<Fitted<T>>)> {
    let mut record = GridRecord {
        index: grid_index,
        hyper: *hyper,
        status: GridStatus::Completed,
        best_epoch: None,
        best_val: None,
        train_loss: Vec::new(),
        val_metric: Vec::new(),
    };
    if let HyperParams::Labelprop { alpha } = *hyper {
        let soft = data.propagation(alpha, &split.train)?;
        let val = score(&soft.gather_columns(&split.val), &data.labels, &split.val, cfg.metric)?;
        record.best_epoch = Some(0);
        record.best_val = Some(val);
        record.val_metric.push(val);
        return Ok((record, Some(Fitted { predictor: Predictor::Propagated(soft), best_val: val, best_epoch: 0 })));
    }
    let arch = data.architecture(hyper).expect("trainable grid point");
    let index = stream_index(split.index, grid_index);
    let mut model = Model::<T>::new(arch.clone(), &mut rng::stream(cfg.seed, Stream::Init, index))?;
    let mut batch_rng = rng::stream(cfg.seed, Stream::Batch, index);
    let optimizer = AdamW { lr: cfg.lr, weight_decay: hyper.weight_decay(cfg), ..AdamW::default() };
    let mut state = OptimizerState::new(model.params());

    let n_train = split.train.len();
    let batch_size = match cfg.batch {
        BatchPolicy::Full => n_train,
        BatchPolicy::Iid { fraction } => ((n_train as f64 * fraction).ceil() as usize).clamp(1, n_train),
    };
    let full = if batch_size == n_train { Some(data.batch(&arch, &split.train)?) } else { None };
    let (val_batch, _) = data.batch(&arch, &split.val)?;
    let mut best: Option<Fitted<T>> = None;

    for epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..cfg.steps_per_epoch {
            let sampled;
            let (batch, labels) = match &full {
                Some(full) => full,
                None => {
                    let mut picks = index::sample(&mut batch_rng, n_train, batch_size).into_vec();
                    picks.sort_unstable();
                    let nodes: Vec<usize> = picks.into_iter().map(|i| split.train[i]).collect();
                    sampled = data.batch(&arch, &nodes)?;
                    &sampled
                }
            };
            let (loss, grads) = model.loss_and_grad(batch, labels)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                record.status = GridStatus::Failed { reason: format!("non-finite training loss at epoch {epoch}") };
                return Ok((record, None));
            }
            if let Err(e) = adamw_step(model.params_mut(), &grads, &mut state, &optimizer) {
                record.status = GridStatus::Failed { reason: format!("epoch {epoch}: {e}") };
                return Ok((record, None));
            }
            epoch_loss += loss;
        }
        record.train_loss.push(epoch_loss / cfg.steps_per_epoch as f64);
        let probs = softmax_columns(&model.forward(&val_batch)?).cast::<f64>();
        let val = score(&probs, &data.labels, &split.val, cfg.metric)?;
        record.val_metric.push(val);
        if best.as_ref().is_none_or(|b| val > b.best_val) {
            best = Some(Fitted { predictor: Predictor::Trained(model.clone()), best_val: val, best_epoch: epoch });
        }
    }
    let best = best.expect("at least one epoch");
    record.best_epoch = Some(best.best_epoch);
    record.best_val = Some(best.best_val);
    Ok((record, Some(best)))
}

fn check_batch_support(kind: ModelKind, batch: &BatchPolicy) -> Result<()> {
    if matches!(batch, BatchPolicy::Iid { .. }) && matches!(kind, ModelKind::Labelprop | ModelKind::Sgc) {
        let reason = match kind {
            ModelKind::Labelprop => "label propagation requires full-graph propagation",
            _ => "SGC requires full-graph feature propagation",
        };
        return Err(Error::Unsupported { model: kind.name().into(), batch: batch.name().into(), reason: reason.into() });
    }
    Ok(())
}

fn check_grid(kind: ModelKind, grid: &[HyperParams]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty hyperparameter grid".into()));
    }
    if let Some(h) = grid.iter().find(|h| h.kind() != kind) {
        return Err(Error::Invalid(format!("grid point {h:?} does not belong to {}", kind.name())));
    }
    Ok(())
}

fn check_split(split: &Split, n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &u in split.train.iter().chain(&split.val).chain(&split.test) {
        if u >= n {
            return Err(Error::NodeOutOfRange { index: u, n });
        }
        if std::mem::replace(&mut seen[u], true) {
            return Err(Error::Invalid(format!("node {u} appears twice in split {}", split.index)));
        }
    }
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        return Err(Error::Invalid(format!("split {} has an empty part", split.index)));
    }
    Ok(())
}

/// Selects the best grid point by validation metric (ties go to the earlier
/// point) and computes train/val/test metrics of its best-epoch parameters.
fn select<T: Scalar>(
    data: &Prepared<T>,
    split: &Split,
    points: Vec<(GridRecord, Option<Fitted<T>>)>,
    metric: Metric,
) -> Result<SplitRun<T>> {
    let mut grid = Vec::with_capacity(points.len());
    let mut best: Option<(usize, Fitted<T>)> = None;
    for (record, fitted) in points {
        if let Some(f) = fitted {
            if best.as_ref().is_none_or(|(_, b)| f.best_val > b.best_val) {
                best = Some((record.index, f));
            }
        }
        grid.push(record);
    }
    let (selected, fitted) = best.ok_or_else(|| {
        Error::NonFinite(format!("every grid point failed on split {}", split.index))
    })?;
    let train = fitted.predictor.evaluate(data, &split.train, metric)?;
    let test = fitted.predictor.evaluate(data, &split.test, metric)?;
    Ok(SplitRun {
        split: split.index,
        selected,
        hyper: grid[selected].hyper,
        best_epoch: fitted.best_epoch,
        metrics: SplitMetrics { train, val: fitted.best_val, test },
        grid,
        predictor: fitted.predictor,
    })
}

/// Grid search over every split. Grid points train in parallel on the current
/// rayon pool; results are assembled in (split, grid) order so the outcome does
/// not depend on scheduling.
pub fn train_splits<T: Scalar>(
    data: &Prepared<T>,
    splits: &[Split],
    grid: &[HyperParams],
    cfg: &TrainConfig,
) -> Result<Vec<SplitRun<T>>> {
    cfg.validate()?;
    check_grid(data.kind, grid)?;
    check_batch_support(data.kind, &cfg.batch)?;
    for split in splits {
        check_split(split, data.num_nodes())?;
    }
    let jobs: Vec<(usize, usize)> = (0..splits.len()).flat_map(|s| (0..grid.len()).map(move |g| (s, g))).collect();
    let mut results = jobs
        .par_iter()
        .map(|&(s, g)| fit_point(data, &splits[s], &grid[g], g, cfg))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    splits
        .iter()
        .map(|split| select(data, split, results.by_ref().take(grid.len()).collect(), cfg.metric))
        .collect()
}

/// Full-batch grid search on one split.
pub fn train_full_batch<T: Scalar>(
    data: &Prepared<T>,
    split: &Split,
    grid: &[HyperParams],
    cfg: &TrainConfig,
) -> Result<SplitRun<T>> {
    let cfg = TrainConfig { batch: BatchPolicy::Full, ..cfg.clone() };
    Ok(train_splits(data, std::slice::from_ref(split), grid, &cfg)?.remove(0))
}

/// i.i.d. node-minibatch grid search on one split; `cfg.batch` must be
/// [`BatchPolicy::Iid`].
pub fn train_minibatch<T: Scalar>(
    data: &Prepared<T>,
    split: &Split,
    grid: &[HyperParams],
    cfg: &TrainConfig,
) -> Result<SplitRun<T>> {
    if !matches!(cfg.batch, BatchPolicy::Iid { .. }) {
        return Err(Error::Invalid("train_minibatch needs an iid batch policy".into()));
    }
    Ok(train_splits(data, std::slice::from_ref(split), grid, cfg)?.remove(0))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
