//! Outer Euler flow trace `U_e(t, x)` and the pressure gradient given by
//! Bernoulli's law, `dP/dx = -(dU_e/dt + U_e dU_e/dx)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Built-in analytic outer flows with hand-coded derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum OuterFlowKind {
    /// `U_e = exp(-rate * t) * (intercept + slope * x)`.
    DecayingLinear { intercept: f64, slope: f64, rate: f64 },
    /// `U_e = intercept + slope * x`.
    AffineSteady { intercept: f64, slope: f64 },
    /// `U_e = value`.
    Constant { value: f64 },
}

/// Values of the outer flow at one point. No domain check is made when these
/// are produced through [`OuterFlowModel::sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterSample {
    pub ue: f64,
    pub dt_ue: f64,
    pub dx_ue: f64,
}

impl OuterSample {
    pub fn pressure_gradient(&self) -> f64 {
        -(self.dt_ue + self.ue * self.dx_ue)
    }
}

/// An outer flow on `[0, T] x [0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterFlowModel {
    kind: OuterFlowKind,
    length: f64,
    horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientClass {
    Adverse,
    Favourable,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientReport {
    pub classification: GradientClass,
    pub min_grad: f64,
    pub max_grad: f64,
    /// Location `(t, x)` of the smallest sampled gradient.
    pub argmin: (f64, f64),
    pub nt: usize,
    pub nx: usize,
}

const POSITIVITY_SAMPLES: usize = 101;

impl OuterFlowModel {
    /// Builds a model and checks `U_e > 0` on a 101 x 101 sampling grid.
    pub fn new(kind: OuterFlowKind, length: f64, horizon: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Model(format!("length must be positive, got {length}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Model(format!("horizon must be positive, got {horizon}")));
        }
        let params: Vec<f64> = match kind {
            OuterFlowKind::DecayingLinear { intercept, slope, rate } => vec![intercept, slope, rate],
            OuterFlowKind::AffineSteady { intercept, slope } => vec![intercept, slope],
            OuterFlowKind::Constant { value } => vec![value],
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Model("parameters must be finite".into()));
        }
        let model = Self { kind, length, horizon };
        let n = POSITIVITY_SAMPLES;
        for a in 0..n {
            let t = horizon * a as f64 / (n - 1) as f64;
            for b in 0..n {
                let x = length * b as f64 / (n - 1) as f64;
                let ue = model.sample(t, x).ue;
                if !(ue > 0.0) {
                    return Err(Error::Model(format!("U_e = {ue} is not positive at (t={t}, x={x})")));
                }
            }
        }
        Ok(model)
    }

    pub fn kind(&self) -> OuterFlowKind {
        self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Outer-flow values without a domain check (solver hot path).
    #[inline]
    pub fn sample(&self, t: f64, x: f64) -> OuterSample {
        match self.kind {
            OuterFlowKind::DecayingLinear { intercept, slope, rate } => {
                let e = (-rate * t).exp();
                let ue = e * (intercept + slope * x);
                OuterSample { ue, dt_ue: -rate * ue, dx_ue: e * slope }
            }
            OuterFlowKind::AffineSteady { intercept, slope } => {
                OuterSample { ue: intercept + slope * x, dt_ue: 0.0, dx_ue: slope }
            }
            OuterFlowKind::Constant { value } => OuterSample { ue: value, dt_ue: 0.0, dx_ue: 0.0 },
        }
    }

    fn checked(&self, t: f64, x: f64) -> Result<OuterSample> {
        let slack_t = 1e-12 * self.horizon.max(1.0);
        let slack_x = 1e-12 * self.length.max(1.0);
        if !(t >= -slack_t && t <= self.horizon + slack_t && x >= -slack_x && x <= self.length + slack_x) {
            return Err(Error::Domain { t, x, horizon: self.horizon, length: self.length });
        }
        Ok(self.sample(t, x))
    }

    pub fn ue(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.checked(t, x)?.ue)
    }

    pub fn dt_ue(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.checked(t, x)?.dt_ue)
    }

    pub fn dx_ue(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.checked(t, x)?.dx_ue)
    }

    /// `dP/dx` from Bernoulli's law.
    pub fn pressure_gradient(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.checked(t, x)?.pressure_gradient())
    }

    /// Largest `U_e` over the domain (attained at a corner for every
    /// built-in form).
    pub fn max_ue(&self) -> f64 {
        [(0.0, 0.0), (0.0, self.length), (self.horizon, 0.0), (self.horizon, self.length)]
            .iter()
            .map(|&(t, x)| self.sample(t, x).ue)
            .fold(f64::MIN, f64::max)
    }

    /// Samples `dP/dx` on an `nt x nx` uniform grid and classifies it.
    pub fn classify_gradient(&self, nt: usize, nx: usize) -> Result<GradientReport> {
        if nt < 2 || nx < 2 {
            return Err(Error::Grid(format!("sampling grid needs nt, nx >= 2, got {nt} x {nx}")));
        }
        let mut min_grad = f64::INFINITY;
        let mut max_grad = f64::NEG_INFINITY;
        let mut argmin = (0.0, 0.0);
        for a in 0..nt {
            let t = self.horizon * a as f64 / (nt - 1) as f64;
            for b in 0..nx {
                let x = self.length * b as f64 / (nx - 1) as f64;
                let g = self.pressure_gradient(t, x)?;
                if g < min_grad {
                    min_grad = g;
                    argmin = (t, x);
                }
                max_grad = max_grad.max(g);
            }
        }
        let classification = if min_grad > 0.0 {
            GradientClass::Adverse
        } else if max_grad <= 0.0 {
            GradientClass::Favourable
        } else {
            GradientClass::Mixed
        };
        Ok(GradientReport { classification, min_grad, max_grad, argmin, nt, nx })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decaying(l: f64) -> OuterFlowModel {
        let kind = OuterFlowKind::DecayingLinear { intercept: 2.0 * l, slope: -1.0, rate: l.powi(5) };
        OuterFlowModel::new(kind, l, 2.0 / l.powi(5)).unwrap()
    }

    fn affine(slope: f64) -> OuterFlowModel {
        OuterFlowModel::new(OuterFlowKind::AffineSteady { intercept: 2.0, slope }, 1.0, 1.0).unwrap()
    }

    fn constant() -> OuterFlowModel {
        OuterFlowModel::new(OuterFlowKind::Constant { value: 1.0 }, 1.0, 1.0).unwrap()
    }

    #[test]
    fn evaluates_outer_velocity() {
        assert_eq!(decaying(1.0).ue(0.0, 0.0).unwrap(), 2.0);
        assert_eq!(affine(-1.0).ue(0.37, 1.0).unwrap(), 1.0);
        assert_eq!(constant().ue(0.5, 0.25).unwrap(), 1.0);
    }

    #[test]
    fn pressure_gradient_follows_bernoulli() {
        let m = affine(-1.0);
        for x in [0.0, 0.3, 1.0] {
            assert_relative_eq!(m.pressure_gradient(0.2, x).unwrap(), 2.0 - x, max_relative = 1e-15);
        }
        let l: f64 = 1.3;
        let m = decaying(l);
        for (t, x) in [(0.0, 0.0), (0.1, 0.7), (0.3, 1.3)] {
            let k = l.powi(5);
            let expect = k * (-k * t).exp() * (2.0 * l - x) + (-2.0 * k * t).exp() * (2.0 * l - x);
            assert_relative_eq!(m.pressure_gradient(t, x).unwrap(), expect, max_relative = 1e-13);
        }
        assert_eq!(constant().pressure_gradient(0.1, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let m = constant();
        assert!(matches!(m.ue(1.5, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(m.pressure_gradient(0.0, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn nonpositive_outer_flow_is_rejected() {
        let kind = OuterFlowKind::AffineSteady { intercept: 1.0, slope: -2.0 };
        assert!(matches!(OuterFlowModel::new(kind, 1.0, 1.0), Err(Error::Model(_))));
    }

    #[test]
    fn classifies_gradients() {
        assert_eq!(decaying(3.0).classify_gradient(101, 101).unwrap().classification, GradientClass::Adverse);
        let c = constant().classify_gradient(11, 11).unwrap();
        assert_eq!(c.classification, GradientClass::Favourable);
        assert_eq!((c.min_grad, c.max_grad), (0.0, 0.0));
        assert_eq!(affine(1.0).classify_gradient(11, 11).unwrap().classification, GradientClass::Favourable);
        let mixed = OuterFlowModel::new(OuterFlowKind::AffineSteady { intercept: 1.0, slope: 0.5 }, 1.0, 1.0)
            .unwrap()
            .classify_gradient(5, 5)
            .unwrap();
        assert_eq!(mixed.classification, GradientClass::Favourable);
    }

    #[test]
    fn derivatives_match_centered_differences_at_second_order() {
        let m = decaying(1.2);
        let (t, x) = (0.05, 0.4);
        let err = |h: f64| {
            let ft = (m.ue(t + h, x).unwrap() - m.ue(t - h, x).unwrap()) / (2.0 * h);
            let fx = (m.ue(t, x + h).unwrap() - m.ue(t, x - h).unwrap()) / (2.0 * h);
            ((ft - m.dt_ue(t, x).unwrap()).abs(), (fx - m.dx_ue(t, x).unwrap()).abs())
        };
        let (a1, _) = err(2e-3);
        let (a2, _) = err(1e-3);
        let ratio = a1 / a2;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }
}
