//! AdamW with decoupled weight decay.
//!
//! ```text
//! θ ← θ · (1 − lr · wd)          weights only; biases are not decayed
//! m ← β₁ m + (1 − β₁) g
//! v ← β₂ v + (1 − β₂) g²
//! θ ← θ − lr · m̂ / (√v̂ + ε)      m̂ = m / (1 − β₁ᵗ), v̂ = v / (1 − β₂ᵗ)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::DenseMatrix;
use crate::models::{Grads, ParamRole, ParamSet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self { lr: 0.01, weight_decay: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub first: Vec<DenseMatrix<T>>,
    pub second: Vec<DenseMatrix<T>>,
    pub step: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &ParamSet<T>) -> Self {
        Self { first: params.zeros_like(), second: params.zeros_like(), step: 0 }
    }
}

/// One AdamW update of `params` in place.
pub fn adamw_step<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &Grads<T>,
    state: &mut OptimizerState<T>,
    cfg: &AdamW,
) -> Result<()> {
    if grads.len() != params.len() || state.first.len() != params.len() {
        return Err(Error::LengthMismatch { what: "gradients", got: grads.len(), expected: params.len() });
    }
    for (p, g) in params.iter().zip(grads) {
        if p.value.shape() != g.shape() {
            return Err(Error::shape("adamw_step", format!("{}: {:?} vs {:?}", p.name, p.value.shape(), g.shape())));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("gradient of {}", p.name)));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let (one, lr, eps) = (T::one(), T::of(cfg.lr), T::of(cfg.eps));
    let correction1 = one - b1.powi(t);
    let correction2 = one - b2.powi(t);
    let shrink = one - T::of(cfg.lr * cfg.weight_decay);
    for (i, p) in params.iter_mut().enumerate() {
        let decay = p.role == ParamRole::Weight && cfg.weight_decay != 0.0;
        let m = state.first[i].as_mut_slice();
        let v = state.second[i].as_mut_slice();
        for (j, (theta, &g)) in p.value.as_mut_slice().iter_mut().zip(grads[i].as_slice()).enumerate() {
            if decay {
                *theta *= shrink;
            }
            m[j] = b1 * m[j] + (one - b1) * g;
            v[j] = b2 * v[j] + (one - b2) * g * g;
            let m_hat = m[j] / correction1;
            let v_hat = v[j] / correction2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
