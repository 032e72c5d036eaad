//! Central-difference gradient checking.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Below this magnitude differences are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-4;

/// Compares the analytic gradient returned by `f` against central differences
/// at every coordinate of `point`, returning the worst relative error
/// `|analytic − numeric| / max(|analytic|, |numeric|, RELATIVE_FLOOR)`.
///
/// `f` maps a flat parameter vector to `(value, gradient)`.
pub fn gradcheck<T, F>(mut f: F, point: &[T], epsilon: T) -> Result<f64>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<(T, Vec<T>)>,
{
    let (value, analytic) = f(point)?;
    if !value.is_finite() {
        return Err(Error::NonFinite("gradcheck objective".into()));
    }
    if analytic.len() != point.len() {
        return Err(Error::LengthMismatch { what: "gradient", got: analytic.len(), expected: point.len() });
    }
    let mut x = point.to_vec();
    let mut worst = 0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + epsilon;
        let (plus, _) = f(&x)?;
        x[i] = orig - epsilon;
        let (minus, _) = f(&x)?;
        x[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("gradcheck objective at coordinate {i}")));
        }
        let numeric = ((plus - minus) / (epsilon + epsilon)).as_f64();
        let a = analytic[i].as_f64();
        if !a.is_finite() {
            return Err(Error::NonFinite(format!("analytic gradient at coordinate {i}")));
        }
        let denom = a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
