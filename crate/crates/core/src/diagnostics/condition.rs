use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::trapezoid_uniform;
use crate::outer_flow::OuterFlowModel;
use crate::profile::Field;

/// Quadrature value of the initial-data condition integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionValue {
    /// Integral over `[0, L] x [0, y_cut]`.
    pub value: f64,
    pub error_estimate: Option<f64>,
    /// Estimate of the part beyond `y_cut`, where `u_y << u`:
    /// `integral (L - x)^(3/2) ln(U_e(0, x) / u0(x, y_cut)) dx`.
    pub tail_estimate: f64,
}

impl ConditionValue {
    pub fn total(&self) -> f64 {
        self.value + self.tail_estimate
    }
}

/// `integral_0^inf integral_0^L (L - x)^(3/2) u0_y / sqrt(u0_y^2 + u0^2) dx dy`
/// by composite trapezoid on uniform `n_x x n_y` nodes over
/// `[0, L] x [0, y_cut]`, with one Richardson step when both interval
/// counts are even.
pub fn condition_integral(
    u0: &Field,
    u0_y: &Field,
    model: &OuterFlowModel,
    y_cut: f64,
    n_x: usize,
    n_y: usize,
) -> Result<ConditionValue> {
    if n_x < 3 || n_y < 3 || !(y_cut > 0.0) {
        return Err(Error::Grid(format!(
            "condition quadrature needs n_x, n_y >= 3 and y_cut > 0, got {n_x} x {n_y}, {y_cut}"
        )));
    }
    let length = model.length();
    let dx = length / (n_x - 1) as f64;
    let dy = y_cut / (n_y - 1) as f64;
    let xs: Vec<f64> = (0..n_x).map(|i| if i + 1 == n_x { length } else { i as f64 * dx }).collect();
    let rows: Vec<Result<Vec<f64>>> = xs
        .par_iter()
        .map(|&x| {
            let weight = (length - x).max(0.0).powf(1.5);
            (0..n_y)
                .map(|j| {
                    let y = if j + 1 == n_y { y_cut } else { j as f64 * dy };
                    let d = u0_y(x, y);
                    if d < 0.0 || !d.is_finite() {
                        return Err(Error::Data(format!("u0_y({x}, {y}) = {d} is negative")));
                    }
                    let r = d.hypot(u0(x, y));
                    Ok(if r == 0.0 { 0.0 } else { weight * d / r })
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let level = |stride: usize| -> f64 {
        let inner: Vec<f64> = rows.iter().step_by(stride).map(|r| trapezoid_uniform(r, dy, stride)).collect();
        trapezoid_uniform(&inner, dx * stride as f64, 1)
    };
    let fine = level(1);
    let (value, error_estimate) = if (n_x - 1).is_multiple_of(2) && (n_y - 1).is_multiple_of(2) {
        let coarse = level(2);
        ((4.0 * fine - coarse) / 3.0, Some((fine - coarse).abs() / 3.0))
    } else {
        (fine, None)
    };
    let tail: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let ue = model.sample(0.0, x).ue;
            let u = u0(x, y_cut);
            (length - x).max(0.0).powf(1.5) * if u > 0.0 { (ue / u).ln().max(0.0) } else { 0.0 }
        })
        .collect();
    Ok(ConditionValue { value, error_estimate, tail_estimate: trapezoid_uniform(&tail, dx, 1) })
}
