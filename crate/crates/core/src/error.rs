use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node index {index} out of range for graph with {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("label {label} at node {node} out of range for {num_classes} classes")]
    LabelOutOfRange { node: usize, label: usize, num_classes: usize },
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("graph has no edges")]
    NoEdges,
    #[error("every node is isolated")]
    AllIsolated,
    #[error("class {0} has zero total degree")]
    EmptyClass(usize),
    #[error("improved homophily is undefined for a single class")]
    SingleClass,
    #[error("no sampled node has a non-empty exact two-hop neighborhood")]
    NoTwoHop,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("{model} does not support {batch} batching: {reason}")]
    Unsupported { model: String, batch: String, reason: String },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
