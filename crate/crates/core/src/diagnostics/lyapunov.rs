use rayon::prelude::*;
use serde::Serialize;

use crate::crocco_transform::ShearField;
use crate::numerics::trapezoid_uniform;

/// Quadrature value of the functional with a Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovValue {
    pub value: f64,
    pub error_estimate: Option<f64>,
}

/// `G = integral over [0, L] x [0, 1] of (L - xi)^(3/2) / sqrt(w^2 + eta^2)`.
///
/// Composite trapezoid in both directions, with the first `eta` cell
/// integrated exactly for `w^2` linear across it, and one Richardson step
/// when both interval counts are even. Infinite once `w(xi, 0)` vanishes.
pub fn lyapunov_g(field: &ShearField) -> LyapunovValue {
    let g = field.grid;
    lyapunov_g_values(&field.values, g.n_xi(), g.n_eta(), g.length())
}

pub fn lyapunov_g_values(values: &[f64], n_xi: usize, n_eta: usize, length: f64) -> LyapunovValue {
    if length == 0.0 {
        return LyapunovValue { value: 0.0, error_estimate: Some(0.0) };
    }
    if (0..n_xi).any(|i| !(values[i * n_eta] > 0.0)) {
        return LyapunovValue { value: f64::INFINITY, error_estimate: None };
    }
    let refine = n_xi >= 3 && n_eta >= 5 && (n_xi - 1).is_multiple_of(2) && (n_eta - 1).is_multiple_of(2);
    let fine = level(values, n_xi, n_eta, length, 1);
    if refine {
        let coarse = level(values, n_xi, n_eta, length, 2);
        LyapunovValue { value: (4.0 * fine - coarse) / 3.0, error_estimate: Some((fine - coarse).abs() / 3.0) }
    } else {
        LyapunovValue { value: fine, error_estimate: None }
    }
}

fn level(values: &[f64], n_xi: usize, n_eta: usize, length: f64, stride: usize) -> f64 {
    let d_xi = length / (n_xi - 1) as f64;
    let d_eta = 1.0 / (n_eta - 1) as f64;
    let h = d_eta * stride as f64;
    let columns: Vec<f64> = (0..n_xi)
        .into_par_iter()
        .step_by(stride)
        .map(|i| {
            let col = &values[i * n_eta..(i + 1) * n_eta];
            let xi = (i as f64 * d_xi).min(length);
            let weight = (length - xi).powf(1.5);
            if weight == 0.0 {
                return 0.0;
            }
            let f = |j: usize| {
                let eta = j as f64 * d_eta;
                1.0 / (col[j] * col[j] + eta * eta).sqrt()
            };
            let first = first_cell_integral(col[0], col[stride], h);
            let last = n_eta - 1;
            let inner: f64 = (2 * stride..last).step_by(stride).map(f).sum();
            let rest = h * (0.5 * (f(stride) + f(last)) + inner);
            weight * (first + rest)
        })
        .collect();
    trapezoid_uniform(&columns, d_xi * stride as f64, 1)
}

/// Exact integral of `(q(eta) + eta^2)^(-1/2)` over `[0, h]` where
/// `q = w^2` is linear from `w0^2` to `w1^2`. Reduces to `asinh(h / w0)` for
/// constant `w`.
pub fn first_cell_integral(w0: f64, w1: f64, h: f64) -> f64 {
    let c = w0 * w0;
    let kappa = (w1 * w1 - c) / h;
    let p = 0.5 * kappa;
    let disc = c - p * p;
    let q = |eta: f64| eta * eta + kappa * eta + c;
    let anti = |eta: f64| -> f64 {
        let z = eta + p;
        if disc > 0.0 {
            (z / disc.sqrt()).asinh()
        } else if z > 0.0 {
            (z + q(eta).max(0.0).sqrt()).ln()
        } else {
            -(-z + q(eta).max(0.0).sqrt()).ln()
        }
    };
    anti(h) - anti(0.0)
}
