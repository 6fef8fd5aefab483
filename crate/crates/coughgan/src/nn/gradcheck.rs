//! Central finite-difference gradient checking.
//!
//! This is the independent oracle for every backward rule in the crate: it
//! only ever calls the forward path supplied by the caller, so agreement with
//! an analytic gradient means forward and backward are mutually consistent.

use crate::error::Result;

use super::tensor::Tensor;

/// Central differences (f(x+e) - f(x-e)) / 2e, one coordinate at a time.
pub fn numerical_grad(
    f: &mut dyn FnMut(&Tensor) -> Result<f64>,
    x: &Tensor,
    eps: f64,
) -> Result<Tensor> {
    let mut grad = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += eps;
        let mut minus = x.clone();
        minus.data_mut()[i] -= eps;
        grad.data_mut()[i] = (f(&plus)? - f(&minus)?) / (2.0 * eps);
    }
    Ok(grad)
}

/// Max over coordinates of |a - n| / max(|a|, |n|, 1e-3). The floor keeps the
/// ratio meaningful where the true gradient is near zero, where central
/// differences are dominated by cancellation noise.
pub fn max_rel_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3))
        .fold(0.0, f64::max)
}
