//! Deterministic synthetic datasets: the canonical label–topology patterns,
//! label-independent Erdős–Rényi graphs, and two-channel planted-partition
//! benchmarks where adjacency and features each carry controllable signal.

use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Dataset, Labels};
use crate::kernel::DenseMatrix;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// `C` disjoint same-class cliques.
    PureHomophily,
    /// Complete bipartite graph between two classes.
    PureHeterophily,
    /// Every node has exactly one neighbor in each class.
    OnePerClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencySignal {
    /// Edges independent of labels.
    None,
    /// Each node draws a hidden preference class and links mostly into it.
    Monophilous,
    /// Edges follow an off-diagonal mixing matrix.
    Heterophilous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSignal {
    /// Standard normal features carrying no label information.
    None,
    /// One-hot class mean plus `noise · N(0, 1)`.
    Gaussian,
}

/// Splits `n` items by `fractions` using largest-remainder rounding.
/// Leftover units go to the largest fractional parts, lower index first on ties.
pub fn apportion(n: usize, fractions: &[f64]) -> Result<Vec<usize>> {
    let total: f64 = fractions.iter().sum();
    if fractions.is_empty() || (total - 1.0).abs() > 1e-9 || fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err(Error::Invalid(format!("class fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        sizes[k] += 1;
    }
    Ok(sizes)
}

/// Labels `0..C` assigned to contiguous index ranges of the given sizes.
fn range_labels(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(k, &s)| std::iter::repeat_n(k, s)).collect()
}

/// One-hot class indicator rows plus a trailing all-zero row (`D = C + 1`).
fn indicator_features(labels: &[usize], c: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(c + 1, labels.len(), |r, u| if r == labels[u] { 1.0 } else { 0.0 })
}

/// Canonical pattern graph; the output does not depend on any seed.
pub fn generate_pattern(kind: PatternKind, n: usize, classes: usize) -> Result<Dataset> {
    if classes == 0 {
        return Err(Error::Invalid("at least one class is required".into()));
    }
    let (edges, labels) = match kind {
        PatternKind::PureHomophily => {
            if n < 2 * classes {
                return Err(Error::Invalid(format!("pure_homophily needs at least 2 nodes per class (n={n}, C={classes})")));
            }
            let sizes = apportion(n, &vec![1.0 / classes as f64; classes])?;
            let mut edges = Vec::new();
            let mut start = 0;
            for &s in &sizes {
                for u in start..start + s {
                    edges.extend((u + 1..start + s).map(|v| (u, v)));
                }
                start += s;
            }
            (edges, range_labels(&sizes))
        }
        PatternKind::PureHeterophily => {
            if classes != 2 || n < 2 {
                return Err(Error::Invalid(format!("pure_heterophily needs C=2 and n>=2 (n={n}, C={classes})")));
            }
            let left = n / 2;
            let edges = (0..left).flat_map(|u| (left..n).map(move |v| (u, v))).collect();
            (edges, range_labels(&[left, n - left]))
        }
        PatternKind::OnePerClass => {
            if n == 0 || !n.is_multiple_of(2 * classes) {
                return Err(Error::Invalid(format!("one_per_class needs n divisible by 2C (n={n}, C={classes})")));
            }
            // class k owns nodes k*m..(k+1)*m; local index i pairs with i^1 inside
            // its class and with local index i in every other class
            let m = n / classes;
            let mut edges = Vec::new();
            for k in 0..classes {
                for i in (0..m).step_by(2) {
                    edges.push((k * m + i, k * m + i + 1));
                }
                for l in k + 1..classes {
                    edges.extend((0..m).map(|i| (k * m + i, l * m + i)));
                }
            }
            (edges, range_labels(&vec![m; classes]))
        }
    };
    let graph = build_graph(&edges, n, false)?;
    let features = indicator_features(&labels, classes);
    Dataset::new(graph, features, Labels::new(labels, classes)?)
}

/// Undirected G(n, p) graph with labels assigned to index ranges by
/// largest-remainder rounding of `fractions · n`. Each unordered pair `u < v`
/// consumes one uniform draw from the `(seed, Graph)` stream in row order.
/// Features are a single standard-normal row from the `(seed, Features)` stream.
pub fn generate_er_labeled(n: usize, p: f64, fractions: &[f64], seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Invalid("erdos_renyi needs n >= 2".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Invalid(format!("edge probability {p} must be in (0, 1]")));
    }
    let sizes = apportion(n, fractions)?;
    let mut rng = rng::stream(seed, Stream::Graph, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let graph = build_graph(&edges, n, false)?;
    let labels = Labels::new(range_labels(&sizes), fractions.len())?;
    let mut frng = rng::stream(seed, Stream::Features, 0);
    let features = DenseMatrix::from_fn(1, n, |_, _| StandardNormal.sample(&mut frng));
    Dataset::new(graph, features, labels)
}

/// Settings for [`generate_two_channel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoChannelConfig {
    pub n: usize,
    pub classes: usize,
    pub adjacency_signal: AdjacencySignal,
    pub feature_signal: FeatureSignal,
    /// Standard deviation of the Gaussian feature noise.
    pub noise: f64,
    pub seed: u64,
    /// Expected degree after symmetrization; each node draws `avg_degree / 2` targets.
    pub avg_degree: f64,
    /// Probability mass a monophilous node puts on its preference class
    /// (the rest is spread uniformly over all classes).
    pub strength: f64,
    /// Feature dimension; must be at least `classes` for Gaussian features.
    pub feature_dim: usize,
    /// Explicit mixing matrix overriding the default for the adjacency signal.
    pub mixing: Option<Vec<Vec<f64>>>,
}

impl TwoChannelConfig {
    pub fn new(n: usize, classes: usize, seed: u64) -> Self {
        Self {
            n,
            classes,
            adjacency_signal: AdjacencySignal::None,
            feature_signal: FeatureSignal::None,
            noise: 1.0,
            seed,
            avg_degree: 20.0,
            strength: 0.9,
            feature_dim: classes,
            mixing: None,
        }
    }

    /// Row-stochastic `C × C` wiring matrix: rows are indexed by the node's
    /// label, or by its preference class when monophilous.
    pub fn mixing_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let c = self.classes;
        let raw = match (&self.mixing, self.adjacency_signal) {
            (Some(m), _) => m.clone(),
            (None, AdjacencySignal::None) => vec![vec![1.0 / c as f64; c]; c],
            (None, AdjacencySignal::Heterophilous) => {
                if c < 2 {
                    return Err(Error::Invalid("heterophilous wiring needs at least 2 classes".into()));
                }
                (0..c).map(|k| (0..c).map(|l| if k == l { 0.0 } else { 1.0 / (c - 1) as f64 }).collect()).collect()
            }
            (None, AdjacencySignal::Monophilous) => {
                let s = self.strength;
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Invalid(format!("strength {s} must be in [0,1]")));
                }
                (0..c)
                    .map(|k| (0..c).map(|l| (1.0 - s) / c as f64 + if k == l { s } else { 0.0 }).collect())
                    .collect()
            }
        };
        if raw.len() != c || raw.iter().any(|r| r.len() != c) {
            return Err(Error::Invalid(format!("mixing matrix must be {c}x{c}")));
        }
        raw.into_iter()
            .enumerate()
            .map(|(k, row)| {
                if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(Error::Invalid(format!("mixing row {k} has invalid entries")));
                }
                let total: f64 = row.iter().sum();
                if total <= 0.0 {
                    return Err(Error::Invalid(format!("degenerate mixing: row {k} is all zero")));
                }
                Ok(row.iter().map(|x| x / total).collect())
            })
            .collect()
    }
}

/// A two-channel dataset plus the planted wiring matrix.
#[derive(Debug, Clone)]
pub struct TwoChannel {
    pub dataset: Dataset,
    pub mixing: Vec<Vec<f64>>,
}

/// Planted-partition graph with balanced labels `u mod C`.
///
/// Every node `u` draws `round(avg_degree / 2)` targets: a class `l` from the
/// mixing row of its label (or of its hidden preference class when
/// monophilous, preferences drawn uniformly from the `Latent` stream), then a
/// uniform member of class `l` other than `u`. The directed draws are
/// symmetrized.
pub fn generate_two_channel(cfg: &TwoChannelConfig) -> Result<TwoChannel> {
    let (n, c) = (cfg.n, cfg.classes);
    if c == 0 || n < 10 * c {
        return Err(Error::Invalid(format!("two-channel generator needs n >= 10·C (n={n}, C={c})")));
    }
    if cfg.feature_signal == FeatureSignal::Gaussian && cfg.feature_dim < c {
        return Err(Error::Invalid("feature_dim must be at least the class count".into()));
    }
    if !(cfg.noise >= 0.0) || !(cfg.avg_degree > 0.0) {
        return Err(Error::Invalid("noise must be >= 0 and avg_degree > 0".into()));
    }
    let mixing = cfg.mixing_matrix()?;
    let labels: Vec<usize> = (0..n).map(|u| u % c).collect();
    let members: Vec<Vec<usize>> = (0..c).map(|k| (k..n).step_by(c).collect()).collect();

    let mut latent = rng::stream(cfg.seed, Stream::Latent, 0);
    let row_of: Vec<usize> = match cfg.adjacency_signal {
        AdjacencySignal::Monophilous => (0..n).map(|_| latent.random_range(0..c)).collect(),
        _ => labels.clone(),
    };
    let pickers = mixing
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::Invalid(format!("mixing row: {e}"))))
        .collect::<Result<Vec<_>>>()?;

    let draws = ((cfg.avg_degree / 2.0).round() as usize).max(1);
    let mut rng = rng::stream(cfg.seed, Stream::Graph, 0);
    let mut edges = Vec::with_capacity(n * draws);
    for u in 0..n {
        for _ in 0..draws {
            let l = pickers[row_of[u]].sample(&mut rng);
            let pool = &members[l];
            let v = pool[rng.random_range(0..pool.len())];
            if v != u {
                edges.push((u, v));
            }
        }
    }
    let graph = build_graph(&edges, n, false)?;

    let mut frng = rng::stream(cfg.seed, Stream::Features, 0);
    let features = match cfg.feature_signal {
        FeatureSignal::Gaussian => DenseMatrix::from_fn(cfg.feature_dim, n, |r, u| {
            let mean = if r == labels[u] { 1.0 } else { 0.0 };
            let z: f64 = StandardNormal.sample(&mut frng);
            mean + cfg.noise * z
        }),
        FeatureSignal::None => DenseMatrix::from_fn(cfg.feature_dim.max(1), n, |_, _| StandardNormal.sample(&mut frng)),
    };
    Ok(TwoChannel { dataset: Dataset::new(graph, features, Labels::new(labels, c)?)?, mixing })
}

/// Serializable generator request; echoed into `meta.json` for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthSpec {
    Pattern { pattern: PatternKind, n: usize, classes: usize },
    ErdosRenyi { n: usize, p: f64, class_fractions: Vec<f64>, seed: u64 },
    PlantedPartition(TwoChannelConfig),
}

impl SynthSpec {
    pub fn generate(&self) -> Result<Dataset> {
        match self {
            SynthSpec::Pattern { pattern, n, classes } => generate_pattern(*pattern, *n, *classes),
            SynthSpec::ErdosRenyi { n, p, class_fractions, seed } => generate_er_labeled(*n, *p, class_fractions, *seed),
            SynthSpec::PlantedPartition(cfg) => Ok(generate_two_channel(cfg)?.dataset),
        }
    }
}
