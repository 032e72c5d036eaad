//! Homophily diagnostics and simple scalable node classifiers for
//! non-homophilous graphs.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision for common use.

pub mod cli;
pub mod error;
pub mod graph;
pub mod homophily;
pub mod io;
pub mod kernel;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use graph::{build_graph, Dataset, Graph, Labels};
pub use scalar::Scalar;

pub type Matrix = kernel::DenseMatrix<f64>;
pub type Matrix32 = kernel::DenseMatrix<f32>;
pub type Sparse = kernel::SparseMatrix<f64>;
pub type Sparse32 = kernel::SparseMatrix<f32>;
pub type Classifier = models::Model<f64>;
pub type Classifier32 = models::Model<f32>;
pub type Trained = train::SplitRun<f64>;
pub type Trained32 = train::SplitRun<f32>;
