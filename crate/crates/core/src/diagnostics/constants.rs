use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::trapezoid_richardson;
use crate::outer_flow::{GradientClass, OuterFlowModel};
use crate::profile::Field;

const QUAD_NODES: usize = 4097;

/// Sampled constants of the Lyapunov inequality and their extrema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovConstants {
    pub taus: Vec<f64>,
    pub c0: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    /// Infimum of `c0`.
    pub lambda0: f64,
    /// Supremum of `c1`.
    pub lambda1: f64,
    /// Infimum of `c2`.
    pub lambda2: f64,
}

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = (b - a) / (QUAD_NODES - 1) as f64;
    let v: Vec<f64> = (0..QUAD_NODES).map(|k| f(if k + 1 == QUAD_NODES { b } else { a + h * k as f64 })).collect();
    trapezoid_richardson(&v, h).0
}

/// `L^(3/2) U_e(tau, 0) * integral_0^1 eta / sqrt(w1^2 + eta^2)`.
pub fn c0_value(length: f64, ue_inflow: f64, w1: impl Fn(f64) -> f64) -> f64 {
    let integral = quad(
        |eta| {
            let r = w1(eta).hypot(eta);
            if r == 0.0 {
                1.0
            } else {
                eta / r
            }
        },
        0.0,
        1.0,
    );
    length.powf(1.5) * ue_inflow * integral
}

/// `(1/2) integral_0^L sqrt(U_e^4 / (dP/dx))`.
pub fn c1_value(length: f64, ue: impl Fn(f64) -> f64, grad_p: impl Fn(f64) -> f64) -> f64 {
    0.5 * quad(|x| (ue(x).powi(4) / grad_p(x)).sqrt(), 0.0, length)
}

/// `(1/2) (2 integral_0^L sqrt(U_e / (dP/dx)) (L - x)^(3/2))^(-2)`.
pub fn c2_value(length: f64, ue: impl Fn(f64) -> f64, grad_p: impl Fn(f64) -> f64) -> f64 {
    let integral = quad(|x| (ue(x) / grad_p(x)).sqrt() * (length - x).max(0.0).powf(1.5), 0.0, length);
    0.5 * (2.0 * integral).powi(-2)
}

/// Evaluates the three constants at `n_samples` uniform times on `[0, T]`.
/// Requires a uniformly adverse pressure gradient.
pub fn constants(model: &OuterFlowModel, w1: &Field, n_samples: usize) -> Result<LyapunovConstants> {
    let report = model.classify_gradient(101, 101)?;
    if report.classification != GradientClass::Adverse {
        return Err(Error::Precondition(format!(
            "adverse classification required: min dP/dx = {} at (t={}, x={})",
            report.min_grad, report.argmin.0, report.argmin.1
        )));
    }
    let n = n_samples.max(1);
    let length = model.length();
    let taus: Vec<f64> =
        (0..n).map(|k| if n == 1 { 0.0 } else { model.horizon() * k as f64 / (n - 1) as f64 }).collect();
    let (mut c0, mut c1, mut c2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &tau in &taus {
        for k in 0..QUAD_NODES {
            let x = length * k as f64 / (QUAD_NODES - 1) as f64;
            let g = model.sample(tau, x).pressure_gradient();
            if !(g > 0.0) {
                return Err(Error::Precondition(format!("dP/dx = {g} is not positive at (t={tau}, x={x})")));
            }
        }
        let ue = |x: f64| model.sample(tau, x).ue;
        let gp = |x: f64| model.sample(tau, x).pressure_gradient();
        c0.push(c0_value(length, ue(0.0), |eta| w1(tau, eta)));
        c1.push(c1_value(length, ue, gp));
        c2.push(c2_value(length, ue, gp));
    }
    let lambda0 = c0.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda1 = c1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda2 = c2.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LyapunovConstants { taus, c0, c1, c2, lambda0, lambda1, lambda2 })
}
