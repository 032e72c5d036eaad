use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    Weight,
    /// Excluded from weight decay. Stored as a column vector.
    Bias,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub role: ParamRole,
    pub value: DenseMatrix<T>,
}

/// Ordered, named parameter tensors of one model.
///
/// The order is fixed by the architecture and is the order used for
/// gradients, optimizer state and checkpoint files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<T> {
    params: Vec<Param<T>>,
}

/// Gradients aligned with a [`ParamSet`].
pub type Grads<T> = Vec<DenseMatrix<T>>;

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    /// Appends a parameter initialized uniformly in `±1/sqrt(fan_in)` and
    /// returns its index. A zero fan-in gives an all-zero tensor.
    pub(crate) fn push_init<R: Rng>(
        &mut self,
        name: impl Into<String>,
        role: ParamRole,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> usize {
        let bound = if fan_in == 0 { 0.0 } else { 1.0 / (fan_in as f64).sqrt() };
        let value = DenseMatrix::from_fn(rows, cols, |_, _| {
            if bound == 0.0 {
                T::zero()
            } else {
                T::of(rng.random_range(-bound..bound))
            }
        });
        self.params.push(Param { name: name.into(), role, value });
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.params.iter_mut()
    }

    #[inline]
    pub fn value(&self, i: usize) -> &DenseMatrix<T> {
        &self.params[i].value
    }

    pub fn value_mut(&mut self, i: usize) -> &mut DenseMatrix<T> {
        &mut self.params[i].value
    }

    /// Bias `i` as a slice.
    #[inline]
    pub fn bias(&self, i: usize) -> &[T] {
        self.params[i].value.as_slice()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.as_slice().len()).sum()
    }

    pub fn zeros_like(&self) -> Grads<T> {
        self.params.iter().map(|p| DenseMatrix::zeros(p.value.rows(), p.value.cols())).collect()
    }

    /// All parameters concatenated in order.
    pub fn to_flat(&self) -> Vec<T> {
        self.params.iter().flat_map(|p| p.value.as_slice().iter().copied()).collect()
    }

    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(Error::LengthMismatch { what: "flat parameters", got: flat.len(), expected: self.num_scalars() });
        }
        let mut offset = 0;
        for p in &mut self.params {
            let dst = p.value.as_mut_slice();
            dst.copy_from_slice(&flat[offset..offset + dst.len()]);
            offset += dst.len();
        }
        Ok(())
    }

    pub fn shapes(&self) -> Vec<(String, usize, usize)> {
        self.params.iter().map(|p| (p.name.clone(), p.value.rows(), p.value.cols())).collect()
    }
}

pub fn flatten_grads<T: Scalar>(grads: &Grads<T>) -> Vec<T> {
    grads.iter().flat_map(|g| g.as_slice().iter().copied()).collect()
}
