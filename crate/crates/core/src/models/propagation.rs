//! Parameter-free graph propagation: label propagation and SGC feature
//! smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{linear_forward, spmm, DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `D^{-1/2} A D^{-1/2}`
    Sym,
    /// `D^{-1} A`
    Row,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Weight on the propagated term; `1 − alpha` goes back to the seed labels.
    pub alpha: f64,
    /// 1 for `S`, 2 for `S²` per iteration.
    pub hops: usize,
    pub iterations: usize,
    pub normalization: Normalization,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { alpha: 0.9, hops: 1, iterations: 50, normalization: Normalization::Sym }
    }
}

impl PropagationConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Invalid(format!("alpha {} must be in [0, 1]", self.alpha)));
        }
        if self.iterations == 0 || !(1..=2).contains(&self.hops) {
            return Err(Error::Invalid("need iterations >= 1 and hops in {1, 2}".into()));
        }
        Ok(())
    }
}

/// Normalized adjacency over stored entries, optionally with self-loops added.
/// Degrees are out-degrees (the full degree for undirected graphs).
pub fn normalized_adjacency<T: Scalar>(g: &Graph, norm: Normalization, self_loops: bool) -> SparseMatrix<T> {
    let n = g.num_nodes();
    let extra = usize::from(self_loops);
    let degree: Vec<f64> = (0..n).map(|u| (g.neighbors(u).len() + extra) as f64).collect();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut indices = Vec::with_capacity(g.num_entries() + n * extra);
    let mut values = Vec::with_capacity(indices.capacity());
    for u in 0..n {
        let row = g.neighbors(u);
        let split = row.partition_point(|&v| v < u);
        let cols = row[..split].iter().copied().chain(self_loops.then_some(u)).chain(row[split..].iter().copied());
        for v in cols {
            let w = match norm {
                Normalization::Sym => 1.0 / (degree[u] * degree[v]).sqrt(),
                Normalization::Row => 1.0 / degree[u],
            };
            indices.push(v);
            values.push(T::of(w));
        }
        offsets.push(indices.len());
    }
    SparseMatrix::from_csr_unchecked(n, n, offsets, indices, values)
}

/// Label propagation `Y ← α S^hops Y + (1 − α) Y⁰` from one-hot seed labels.
///
/// `seeds[u]` is the known label of `u`, if any. Nodes without neighbors stay
/// at their seed row. Returns `C × n` soft labels whose columns are
/// renormalized to sum to 1 (uniform where no mass arrived).
pub fn label_propagation(
    g: &Graph,
    seeds: &[Option<usize>],
    num_classes: usize,
    cfg: &PropagationConfig,
) -> Result<DenseMatrix<f64>> {
    cfg.validate()?;
    let n = g.num_nodes();
    if seeds.len() != n {
        return Err(Error::LengthMismatch { what: "seed labels", got: seeds.len(), expected: n });
    }
    if seeds.iter().all(Option::is_none) {
        return Err(Error::Invalid("label propagation needs at least one labeled node".into()));
    }
    let mut y0 = DenseMatrix::<f64>::zeros(n, num_classes);
    for (u, s) in seeds.iter().enumerate() {
        if let Some(k) = *s {
            if k >= num_classes {
                return Err(Error::LabelOutOfRange { node: u, label: k, num_classes });
            }
            y0.set(u, k, 1.0);
        }
    }
    let s = normalized_adjacency::<f64>(g, cfg.normalization, false);
    let isolated: Vec<usize> = (0..n).filter(|&u| g.neighbors(u).is_empty()).collect();
    let mut y = y0.clone();
    for _ in 0..cfg.iterations {
        let mut next = spmm(&s, &y)?;
        if cfg.hops == 2 {
            next = spmm(&s, &next)?;
        }
        for (v, &seed) in next.as_mut_slice().iter_mut().zip(y0.as_slice()) {
            *v = cfg.alpha * *v + (1.0 - cfg.alpha) * seed;
        }
        for &u in &isolated {
            next.row_mut(u).copy_from_slice(y0.row(u));
        }
        y = next;
    }
    for u in 0..n {
        let row = y.row_mut(u);
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|v| *v /= total);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / num_classes as f64);
        }
    }
    Ok(y.transpose())
}

/// `X (Ŝᵀ)^hops` for `D × n` features, where `Ŝ` is the symmetric-normalized
/// adjacency with self-loops.
pub fn propagate_features<T: Scalar>(g: &Graph, features: &DenseMatrix<T>, hops: usize) -> Result<DenseMatrix<T>> {
    if features.cols() != g.num_nodes() {
        return Err(Error::shape("propagate_features", format!("{} feature columns for {} nodes", features.cols(), g.num_nodes())));
    }
    let s = normalized_adjacency::<T>(g, Normalization::Sym, true);
    let mut node_major = features.transpose();
    for _ in 0..hops {
        node_major = spmm(&s, &node_major)?;
    }
    Ok(node_major.transpose())
}

/// SGC logits `W · X (Ŝᵀ)^hops + b` for every node.
pub fn sgc_logits<T: Scalar>(
    g: &Graph,
    features: &DenseMatrix<T>,
    weight: &DenseMatrix<T>,
    bias: Option<&[T]>,
    hops: usize,
) -> Result<DenseMatrix<T>> {
    linear_forward(weight, bias, &propagate_features(g, features, hops)?)
}
