//! Label–topology diagnostics: edge, node and class-wise homophily, the
//! class-imbalance-corrected measure, compatibility matrices and the sampled
//! two-hop node homophily.
//!
//! Everything is computed over stored directed entries with out-neighborhoods,
//! in `f64` with fixed summation order. Isolated nodes are left out of node
//! averages and contribute nothing to class degree totals.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Labels};
use crate::rng::{self, Stream};

fn check_pair(g: &Graph, labels: &Labels) -> Result<()> {
    if labels.len() != g.num_nodes() {
        return Err(Error::LengthMismatch { what: "labels", got: labels.len(), expected: g.num_nodes() });
    }
    Ok(())
}

fn same_class_degree(g: &Graph, labels: &Labels, u: usize) -> usize {
    let k = labels.get(u);
    g.neighbors(u).iter().filter(|&&v| labels.get(v) == k).count()
}

/// Fraction of stored entries `(u, v)` whose endpoints share a class.
pub fn edge_homophily(g: &Graph, labels: &Labels) -> Result<f64> {
    check_pair(g, labels)?;
    if g.num_entries() == 0 {
        return Err(Error::NoEdges);
    }
    let same = g.entries().filter(|&(u, v)| labels.get(u) == labels.get(v)).count();
    Ok(same as f64 / g.num_entries() as f64)
}

/// Mean over non-isolated nodes of the same-class share of each neighborhood.
pub fn node_homophily(g: &Graph, labels: &Labels) -> Result<f64> {
    check_pair(g, labels)?;
    let mut total = 0.0;
    let mut counted = 0usize;
    for u in 0..g.num_nodes() {
        let d = g.neighbors(u).len();
        if d == 0 {
            continue;
        }
        total += same_class_degree(g, labels, u) as f64 / d as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::AllIsolated);
    }
    Ok(total / counted as f64)
}

/// Per-class `(same-class degree, total degree)` sums.
fn class_degree_sums(g: &Graph, labels: &Labels) -> Vec<(usize, usize)> {
    let mut sums = vec![(0usize, 0usize); labels.num_classes()];
    for u in 0..g.num_nodes() {
        let s = &mut sums[labels.get(u)];
        s.0 += same_class_degree(g, labels, u);
        s.1 += g.neighbors(u).len();
    }
    sums
}

/// Class-wise homophily `h_k`: same-class degree over total degree of class `k`.
pub fn class_homophily(g: &Graph, labels: &Labels, k: usize) -> Result<f64> {
    check_pair(g, labels)?;
    if k >= labels.num_classes() {
        return Err(Error::Invalid(format!("class {k} out of range for {} classes", labels.num_classes())));
    }
    let (same, total) = class_degree_sums(g, labels)[k];
    if total == 0 {
        return Err(Error::EmptyClass(k));
    }
    Ok(same as f64 / total as f64)
}

/// `ĥ = 1/(C−1) Σ_k max(h_k − |C_k|/n, 0)`.
///
/// Classes with zero total degree contribute 0.
pub fn improved_homophily(g: &Graph, labels: &Labels) -> Result<f64> {
    check_pair(g, labels)?;
    let c = labels.num_classes();
    if c < 2 {
        return Err(Error::SingleClass);
    }
    if g.num_entries() == 0 {
        return Err(Error::NoEdges);
    }
    let n = g.num_nodes() as f64;
    let counts = labels.class_counts();
    let excess: f64 = class_degree_sums(g, labels)
        .iter()
        .zip(&counts)
        .filter(|((_, total), _)| *total > 0)
        .map(|(&(same, total), &size)| (same as f64 / total as f64 - size as f64 / n).max(0.0))
        .sum();
    Ok(excess / (c - 1) as f64)
}

/// `C × C` class-mixing proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityMatrix {
    /// `values[k][l]`: share of entries leaving class `k` that land in class `l`.
    pub values: Vec<Vec<f64>>,
    /// Raw entry counts before row normalization.
    pub counts: Vec<Vec<usize>>,
    /// Classes with no outgoing entries; their rows are all zero.
    pub masked: Vec<bool>,
}

impl CompatibilityMatrix {
    pub fn num_classes(&self) -> usize {
        self.values.len()
    }

    /// One line per class, comma-separated proportions.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.values {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn compatibility_matrix(g: &Graph, labels: &Labels) -> Result<CompatibilityMatrix> {
    check_pair(g, labels)?;
    if g.num_entries() == 0 {
        return Err(Error::NoEdges);
    }
    let c = labels.num_classes();
    let mut counts = vec![vec![0usize; c]; c];
    for (u, v) in g.entries() {
        counts[labels.get(u)][labels.get(v)] += 1;
    }
    let mut masked = vec![false; c];
    let values = counts
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let total: usize = row.iter().sum();
            if total == 0 {
                masked[k] = true;
                vec![0.0; c]
            } else {
                row.iter().map(|&x| x as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(CompatibilityMatrix { values, counts, masked })
}

/// Node homophily over exact two-hop neighborhoods (nodes reachable in two
/// steps, excluding the node itself and its direct neighbors).
///
/// Averages over `k_samples` nodes drawn without replacement from the
/// `(seed, TwoHop)` stream, or over every node when `k_samples >= n`. Nodes
/// whose exact two-hop set is empty are skipped and do not count towards the
/// normalizer.
pub fn two_hop_node_homophily(g: &Graph, labels: &Labels, k_samples: usize, seed: u64) -> Result<f64> {
    check_pair(g, labels)?;
    if k_samples == 0 {
        return Err(Error::Invalid("two-hop sample count must be at least 1".into()));
    }
    let n = g.num_nodes();
    let nodes: Vec<usize> = if k_samples >= n {
        (0..n).collect()
    } else {
        let mut rng = rng::stream(seed, Stream::TwoHop, 0);
        let mut picked = index::sample(&mut rng, n, k_samples).into_vec();
        picked.sort_unstable();
        picked
    };

    // stamp[x] == 2v+1: x excluded for v; 2v+2: x already in v's two-hop set.
    let mut stamp = vec![0usize; n];
    let mut total = 0.0;
    let mut counted = 0usize;
    for v in nodes {
        let excluded = 2 * v + 1;
        let seen = 2 * v + 2;
        stamp[v] = excluded;
        for &w in g.neighbors(v) {
            stamp[w] = excluded;
        }
        let (mut same, mut size) = (0usize, 0usize);
        for &w in g.neighbors(v) {
            for &x in g.neighbors(w) {
                if stamp[x] == excluded || stamp[x] == seen {
                    continue;
                }
                stamp[x] = seen;
                size += 1;
                if labels.get(x) == labels.get(v) {
                    same += 1;
                }
            }
        }
        if size > 0 {
            total += same as f64 / size as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::NoTwoHop);
    }
    Ok(total / counted as f64)
}

/// All one-hop diagnostics for a labeled graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    pub edge_homophily: f64,
    pub node_homophily: f64,
    /// `None` when undefined (a single class).
    pub improved: Option<f64>,
    pub improved_undefined_reason: Option<String>,
    /// `h_k` per class; `None` for classes with zero total degree.
    pub class_wise: Vec<Option<f64>>,
    pub class_fractions: Vec<f64>,
    pub isolated_nodes: usize,
}

pub fn homophily_report(g: &Graph, labels: &Labels) -> Result<HomophilyReport> {
    let edge = edge_homophily(g, labels)?;
    let node = node_homophily(g, labels)?;
    let (improved, reason) = match improved_homophily(g, labels) {
        Ok(v) => (Some(v), None),
        Err(Error::SingleClass) => (None, Some(Error::SingleClass.to_string())),
        Err(e) => return Err(e),
    };
    let class_wise = class_degree_sums(g, labels)
        .iter()
        .map(|&(same, total)| (total > 0).then(|| same as f64 / total as f64))
        .collect();
    let n = g.num_nodes() as f64;
    let class_fractions = labels.class_counts().iter().map(|&c| c as f64 / n).collect();
    Ok(HomophilyReport {
        edge_homophily: edge,
        node_homophily: node,
        improved,
        improved_undefined_reason: reason,
        class_wise,
        class_fractions,
        isolated_nodes: g.num_isolated(),
    })
}
