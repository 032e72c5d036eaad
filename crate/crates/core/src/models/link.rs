//! LINK: logistic regression on adjacency columns.
//!
//! The logit of node `u` for class `k` is the sum of `W[k][v]` over the
//! in-neighbors `v` of `u`, so each node is classified from the identities of
//! its neighbors.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{dsmm, DenseMatrix};
use crate::scalar::Scalar;

/// `W · A[:, nodes]` for a `C × n` weight `w`.
pub fn link_forward<T: Scalar>(w: &DenseMatrix<T>, graph: &Graph, nodes: &[usize]) -> Result<DenseMatrix<T>> {
    if w.cols() != graph.num_nodes() {
        return Err(Error::shape(
            "link_forward",
            format!("weight has {} columns for {} nodes", w.cols(), graph.num_nodes()),
        ));
    }
    dsmm(w, &graph.adjacency_columns(nodes)?)
}
