//! Dense and sparse linear algebra plus the differentiable layers used by the
//! model zoo. All kernels are single-threaded with a fixed summation order, so
//! identical inputs give bit-identical outputs.

pub mod dense;
pub mod gradcheck;
pub mod ops;
pub mod sparse;

pub use dense::{matmul, matmul_nt, matmul_tn, DenseMatrix};
pub use gradcheck::gradcheck;
pub use ops::{linear_backward, linear_forward, relu, relu_backward, softmax_columns, softmax_xent};
pub use sparse::{dsmm, spmm, SparseMatrix};
