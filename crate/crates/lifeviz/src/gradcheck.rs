//! Central finite-difference gradient checking.
//!
//! The checker is the independent oracle for every differentiable
//! operation: it perturbs each parameter entry by ±h, re-runs the loss
//! closure, and compares the two-sided difference quotient against the
//! gradient produced by [`Tensor::backward`].

use crate::error::Result;
use crate::tensor::optim::Parameter;
use crate::tensor::{Scalar, Tensor};

/// Default step for 64-bit checks.
pub const DEFAULT_H: f64 = 1e-5;

/// Runs `loss_fn` with the current parameter values, backpropagates, then
/// finite-differences every entry of every parameter. Returns the maximum
/// relative error, where the denominator is `max(|analytic|, |numeric|, 1)`.
pub fn max_relative_error<S, F>(params: &[Parameter<S>], loss_fn: F, h: f64) -> Result<f64>
where
    S: Scalar,
    F: Fn() -> Result<Tensor<S>>,
{
    for p in params {
        p.value.zero_grad();
    }
    let loss = loss_fn()?;
    loss.backward()?;
    let analytic: Vec<Vec<S>> = params
        .iter()
        .map(|p| p.value.grad().unwrap_or_else(|| vec![S::zero(); p.value.numel()]))
        .collect();

    let mut worst = 0.0f64;
    for (pi, p) in params.iter().enumerate() {
        let original = p.value.to_vec();
        for i in 0..original.len() {
            let mut bumped = original.clone();
            bumped[i] = original[i] + S::from_f64(h);
            p.value.set_data(bumped.clone())?;
            let up = loss_fn()?.item().to_f64();
            bumped[i] = original[i] - S::from_f64(h);
            p.value.set_data(bumped)?;
            let down = loss_fn()?.item().to_f64();
            p.value.set_data(original.clone())?;

            let numeric = (up - down) / (2.0 * h);
            let a = analytic[pi][i].to_f64();
            let denom = a.abs().max(numeric.abs()).max(1.0);
            let rel = (a - numeric).abs() / denom;
            if rel > worst {
                worst = rel;
            }
        }
        p.value.zero_grad();
    }
    Ok(worst)
}
