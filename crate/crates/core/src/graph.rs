//! Compressed-row graph storage, labels and datasets.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::kernel::{DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

/// Directed or undirected graph in compressed-row form.
///
/// Rows are sorted and deduplicated, and there are no self-loops. Undirected
/// graphs store every edge in both directions, so a row is the full
/// neighborhood. Directed graphs additionally keep the reverse (in-edge)
/// structure for column access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    directed: bool,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    reverse: Option<(Vec<usize>, Vec<usize>)>,
}

fn csr_from_pairs(n: usize, pairs: &mut [(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    pairs.sort_unstable();
    let mut offsets = vec![0usize; n + 1];
    let mut indices = Vec::with_capacity(pairs.len());
    let mut last = None;
    for &(u, v) in pairs.iter() {
        if last == Some((u, v)) {
            continue;
        }
        last = Some((u, v));
        offsets[u + 1] += 1;
        indices.push(v);
    }
    for u in 0..n {
        offsets[u + 1] += offsets[u];
    }
    (offsets, indices)
}

/// Builds a graph from `(src, dst)` pairs over nodes `0..n`.
///
/// Duplicate edges are merged and self-loops dropped. For undirected graphs
/// each edge ends up stored once in each direction.
pub fn build_graph(edges: &[(usize, usize)], n: usize, directed: bool) -> Result<Graph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut pairs = Vec::with_capacity(if directed { edges.len() } else { 2 * edges.len() });
    for &(u, v) in edges {
        for x in [u, v] {
            if x >= n {
                return Err(Error::NodeOutOfRange { index: x, n });
            }
        }
        if u == v {
            continue;
        }
        pairs.push((u, v));
        if !directed {
            pairs.push((v, u));
        }
    }
    let (offsets, indices) = csr_from_pairs(n, &mut pairs);
    let reverse = if directed {
        let mut rev: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| indices[offsets[u]..offsets[u + 1]].iter().map(move |&v| (v, u)))
            .collect();
        Some(csr_from_pairs(n, &mut rev))
    } else {
        None
    };
    Ok(Graph { n, directed, offsets, indices, reverse })
}

/// Maps arbitrary external node identifiers to dense indices in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct IdMap<K> {
    index: HashMap<K, usize>,
    ids: Vec<K>,
}

impl<K: Hash + Eq + Clone> IdMap<K> {
    pub fn new() -> Self {
        Self { index: HashMap::new(), ids: Vec::new() }
    }

    pub fn intern(&mut self, id: K) -> usize {
        if let Some(&i) = self.index.get(&id) {
            return i;
        }
        let i = self.ids.len();
        self.index.insert(id.clone(), i);
        self.ids.push(id);
        i
    }

    pub fn get(&self, id: &K) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[K] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Builds a graph from edges over arbitrary identifiers, remapping them to `0..n`.
pub fn build_graph_from_ids<K: Hash + Eq + Clone>(
    edges: &[(K, K)],
    directed: bool,
) -> Result<(Graph, IdMap<K>)> {
    let mut ids = IdMap::new();
    let dense: Vec<(usize, usize)> =
        edges.iter().map(|(u, v)| (ids.intern(u.clone()), ids.intern(v.clone()))).collect();
    let g = build_graph(&dense, ids.len(), directed)?;
    Ok((g, ids))
}

impl Graph {
    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Number of stored directed entries (twice the edge count when undirected).
    #[inline]
    pub fn num_entries(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    fn check(&self, u: usize) -> Result<()> {
        if u >= self.n {
            return Err(Error::NodeOutOfRange { index: u, n: self.n });
        }
        Ok(())
    }

    /// Out-degree of `u` (the full degree for undirected graphs).
    pub fn degree(&self, u: usize) -> Result<usize> {
        self.check(u)?;
        Ok(self.offsets[u + 1] - self.offsets[u])
    }

    /// Out-neighbors of `u`, sorted. Panics if `u` is out of range.
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.indices[self.offsets[u]..self.offsets[u + 1]]
    }

    /// In-neighbors of `u`, sorted. Same as [`Graph::neighbors`] when undirected.
    #[inline]
    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        match &self.reverse {
            Some((off, idx)) => &idx[off[u]..off[u + 1]],
            None => self.neighbors(u),
        }
    }

    /// Stored directed entries `(u, v)` in row order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Edge list that rebuilds this graph: all entries when directed, `u < v`
    /// entries otherwise.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.entries().filter(|&(u, v)| self.directed || u < v).collect()
    }

    /// Undirected copy of this graph (identity when already undirected).
    pub fn symmetrized(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        build_graph(&self.edge_list(), self.n, false).expect("valid graph stays valid")
    }

    pub fn num_isolated(&self) -> usize {
        (0..self.n).filter(|&u| self.neighbors(u).is_empty()).count()
    }

    /// Rows `nodes` of the transposed adjacency: row `j` holds the in-neighbors
    /// of `nodes[j]`. Shape `|nodes| × n`.
    pub fn adjacency_rows<T: Scalar>(&self, nodes: &[usize]) -> Result<SparseMatrix<T>> {
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        for &u in nodes {
            self.check(u)?;
            indices.extend_from_slice(self.in_neighbors(u));
            offsets.push(indices.len());
        }
        let values = vec![T::one(); indices.len()];
        Ok(SparseMatrix::from_csr_unchecked(nodes.len(), self.n, offsets, indices, values))
    }

    /// Columns `nodes` of the adjacency matrix as an `n × |nodes|` 0/1 matrix:
    /// column `j` indicates the in-neighbors of `nodes[j]`.
    pub fn adjacency_columns<T: Scalar>(&self, nodes: &[usize]) -> Result<SparseMatrix<T>> {
        Ok(self.adjacency_rows(nodes)?.transpose())
    }

    /// Full adjacency matrix `A` with `A[u][v] = 1` for each stored entry `(u, v)`.
    pub fn adjacency<T: Scalar>(&self) -> SparseMatrix<T> {
        SparseMatrix::from_csr_unchecked(
            self.n,
            self.n,
            self.offsets.clone(),
            self.indices.clone(),
            vec![T::one(); self.indices.len()],
        )
    }
}

/// Integer class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    values: Vec<usize>,
    num_classes: usize,
}

impl Labels {
    pub fn new(values: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Invalid("number of classes must be at least 1".into()));
        }
        if let Some((node, &label)) = values.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange { node, label, num_classes });
        }
        Ok(Self { values, num_classes })
    }

    #[inline]
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    #[inline]
    pub fn get(&self, u: usize) -> usize {
        self.values[u]
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &k in &self.values {
            counts[k] += 1;
        }
        counts
    }

    /// Labels of `nodes`, in order.
    pub fn select(&self, nodes: &[usize]) -> Vec<usize> {
        nodes.iter().map(|&u| self.values[u]).collect()
    }

    /// Applies a class permutation `k -> perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Labels::new(self.values.iter().map(|&k| perm[k]).collect(), self.num_classes)
    }
}

/// Graph plus node features (`D × n`, one column per node) and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: DenseMatrix<f64>,
    pub labels: Labels,
}

impl Dataset {
    pub fn new(graph: Graph, features: DenseMatrix<f64>, labels: Labels) -> Result<Self> {
        let n = graph.num_nodes();
        if features.cols() != n {
            return Err(Error::LengthMismatch { what: "feature columns", got: features.cols(), expected: n });
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch { what: "labels", got: labels.len(), expected: n });
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("node features".into()));
        }
        Ok(Self { graph, features, labels })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    /// Same dataset with an undirected graph.
    pub fn symmetrized(&self) -> Dataset {
        Dataset { graph: self.graph.symmetrized(), features: self.features.clone(), labels: self.labels.clone() }
    }
}
