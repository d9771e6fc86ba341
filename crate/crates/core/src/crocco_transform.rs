//! Crocco change of variables `eta = u / U_e`, `w = (du/dy) / U_e`, its
//! inverse, and the coefficients of the transformed equation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::Pchip;
use crate::outer_flow::{OuterFlowModel, OuterSample};

/// Uniform grid on `[0, L] x [0, 1]` in `(xi, eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CroccoGrid {
    n_xi: usize,
    n_eta: usize,
    length: f64,
}

impl CroccoGrid {
    pub fn new(n_xi: usize, n_eta: usize, length: f64) -> Result<Self> {
        if n_xi < 2 || n_eta < 3 {
            return Err(Error::Grid(format!("Crocco grid too small: {n_xi} x {n_eta}")));
        }
        if !(length >= 0.0 && length.is_finite()) {
            return Err(Error::Grid(format!("length must be non-negative, got {length}")));
        }
        Ok(Self { n_xi, n_eta, length })
    }

    pub fn n_xi(&self) -> usize {
        self.n_xi
    }

    pub fn n_eta(&self) -> usize {
        self.n_eta
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn d_xi(&self) -> f64 {
        self.length / (self.n_xi - 1) as f64
    }

    pub fn d_eta(&self) -> f64 {
        1.0 / (self.n_eta - 1) as f64
    }

    pub fn xi(&self, i: usize) -> f64 {
        if i + 1 == self.n_xi {
            self.length
        } else {
            self.length * i as f64 / (self.n_xi - 1) as f64
        }
    }

    pub fn eta(&self, j: usize) -> f64 {
        if j + 1 == self.n_eta {
            1.0
        } else {
            j as f64 / (self.n_eta - 1) as f64
        }
    }
}

/// Normalised shear `w(tau, xi, eta)` on a [`CroccoGrid`], stored column by
/// column (`index = i * n_eta + j`).
#[derive(Debug, Clone, PartialEq)]
pub struct ShearField {
    pub tau: f64,
    pub grid: CroccoGrid,
    pub values: Vec<f64>,
}

impl ShearField {
    pub fn zeros(grid: CroccoGrid, tau: f64) -> Self {
        Self { tau, grid, values: vec![0.0; grid.n_xi * grid.n_eta] }
    }

    /// Samples `w(xi, eta)` at the grid nodes; the `eta = 1` row is set to 0.
    pub fn from_fn(grid: CroccoGrid, tau: f64, w: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(grid, tau);
        for i in 0..grid.n_xi {
            let xi = grid.xi(i);
            let col = field.column_mut(i);
            for (j, v) in col.iter_mut().enumerate().take(grid.n_eta - 1) {
                *v = w(xi, grid.eta(j));
            }
        }
        field
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let n = self.grid.n_eta;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.grid.n_eta;
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_eta + j]
    }

    /// Wall row `w(xi_i, 0)`.
    pub fn wall(&self) -> Vec<f64> {
        (0..self.grid.n_xi).map(|i| self.get(i, 0)).collect()
    }
}

/// Tolerance used for `u(0) = 0` in profile checks, relative to `U_e`.
const WALL_SLACK: f64 = 1e-12;

/// Maps a physical profile at fixed `(t, x)` to `w` on `n_eta` uniform
/// nodes in `eta`, by monotone cubic interpolation in `eta = u / U_e`.
///
/// The point `(eta = 1, w = 0)` is appended as the far-field anchor.
pub fn forward(u: &[f64], dudy: &[f64], ue: f64, n_eta: usize, far_tolerance: f64) -> Result<Vec<f64>> {
    if u.len() != dudy.len() || u.len() < 2 || n_eta < 2 {
        return Err(Error::Data("profile and derivative samples must match and have >= 2 nodes".into()));
    }
    if u[0].abs() > WALL_SLACK * ue.abs() {
        return Err(Error::Data(format!("u(0) = {} is not zero", u[0])));
    }
    // Strict increase is required below the far-field cut; saturated
    // samples above it only have to be non-decreasing.
    let used = u.iter().take_while(|&&uk| uk / ue < 1.0 - 1e-9).count();
    if let Some(k) = u.windows(2).position(|p| !(p[1] >= p[0])) {
        return Err(Error::Monotonicity { index: k + 1, value: u[k + 1] });
    }
    if let Some(k) = u[..used].windows(2).position(|p| !(p[1] > p[0])) {
        return Err(Error::Monotonicity { index: k + 1, value: u[k + 1] });
    }
    if let Some(k) = dudy[..used].iter().skip(1).position(|d| !(*d > 0.0)) {
        return Err(Error::Monotonicity { index: k + 1, value: dudy[k + 1] });
    }
    if !(dudy[0] > 0.0) {
        return Err(Error::Monotonicity { index: 0, value: dudy[0] });
    }
    let ratio = u[u.len() - 1] / ue;
    if ratio < 1.0 - far_tolerance {
        return Err(Error::Truncation { ratio, tolerance: far_tolerance });
    }
    let mut eta = Vec::with_capacity(u.len() + 1);
    let mut w = Vec::with_capacity(u.len() + 1);
    for (uk, dk) in u.iter().zip(dudy).take(used) {
        eta.push(uk / ue);
        w.push(dk / ue);
    }
    eta.push(1.0);
    w.push(0.0);
    let interp = Pchip::new(eta, w)?;
    let mut out: Vec<f64> = (0..n_eta).map(|j| interp.eval(j as f64 / (n_eta - 1) as f64)).collect();
    out[n_eta - 1] = 0.0;
    Ok(out)
}

/// Physical profile recovered from a shear profile.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseProfile {
    /// Last `eta` integrated to; `y` diverges at `eta = 1`.
    pub eta_cut: f64,
    pub eta: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
}

/// `y(eta) = integral of 1/w`, evaluated cell by cell exactly for `w`
/// linear in `eta`, up to `eta_cut = 1 - d_eta`.
pub fn inverse(w: &[f64], ue: f64) -> Result<InverseProfile> {
    let n = w.len();
    if n < 3 {
        return Err(Error::Data("shear profile needs at least three nodes".into()));
    }
    if let Some(k) = w[..n - 1].iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Invertibility { index: k, value: w[k] });
    }
    let d_eta = 1.0 / (n - 1) as f64;
    let last = n - 2;
    let eta: Vec<f64> = (0..=last).map(|j| j as f64 * d_eta).collect();
    let mut y = Vec::with_capacity(last + 1);
    y.push(0.0);
    for j in 0..last {
        let prev = y[j];
        y.push(prev + inverse_cell(w[j], w[j + 1], d_eta));
    }
    let u = eta.iter().map(|e| e * ue).collect();
    Ok(InverseProfile { eta_cut: eta[last], eta, y, u })
}

/// Integral of `1/w` over one cell with `w` varying linearly from `a` to `b`.
fn inverse_cell(a: f64, b: f64, h: f64) -> f64 {
    let diff = a - b;
    if diff.abs() <= 1e-6 * a.max(b) {
        let m = 0.5 * (a + b);
        h / m * (1.0 + (diff / (2.0 * m)).powi(2) / 3.0)
    } else {
        h * (a / b).ln() / diff
    }
}

/// Coefficients of the Crocco equation
/// `w_tau + eta U_e w_xi + A w_eta + B w = w^2 w_eta_eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
}

impl Coefficients {
    #[inline]
    pub fn from_sample(s: &OuterSample, eta: f64) -> Self {
        let rate = s.dt_ue / s.ue;
        Self { a: (1.0 - eta * eta) * s.dx_ue + (1.0 - eta) * rate, b: eta * s.dx_ue + rate }
    }
}

pub fn coefficients(model: &OuterFlowModel, t: f64, xi: f64, eta: f64) -> Result<Coefficients> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Data(format!("eta = {eta} outside [0, 1]")));
    }
    model.ue(t, xi)?;
    Ok(Coefficients::from_sample(&model.sample(t, xi), eta))
}

/// `(w^2 + eta^2)^(-1/2)`; infinite at `w = eta = 0`.
pub fn auxiliary_w(w: f64, eta: f64) -> f64 {
    let r = w.hypot(eta);
    if r == 0.0 {
        f64::INFINITY
    } else {
        1.0 / r
    }
}
