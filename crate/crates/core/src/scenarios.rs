//! Shipped test cases: the two decelerating-flow examples, a favourable
//! control and the heat-equation oracle.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;
use statrs::function::erf::{erf, erf_inv};

use crate::diagnostics::{condition_integral, constants, critical_threshold, ComparisonOde};
use crate::error::{Error, Result};
use crate::numerics::trapezoid_richardson;
use crate::outer_flow::{OuterFlowKind, OuterFlowModel};
use crate::profile::{field, Field};

/// CLI names of the shipped scenarios.
pub const NAMES: [&str; 4] = ["example4.1", "example4.2", "favourable", "heat-oracle"];

/// Grid and run defaults of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridDefaults {
    pub n_x: usize,
    pub n_y: usize,
    pub y_max: f64,
    pub stretch: f64,
    pub n_xi: usize,
    pub n_eta: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Upper `y` limit of the condition quadrature.
    pub cond_y_cut: f64,
    pub cond_n_x: usize,
    pub cond_n_y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedOutcome {
    BackflowExpected,
    NoBackflowExpected,
    Oracle,
}

impl ExpectedOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExpectedOutcome::BackflowExpected => "backflow-expected",
            ExpectedOutcome::NoBackflowExpected => "no-backflow-expected",
            ExpectedOutcome::Oracle => "oracle",
        }
    }
}

/// Condition value against the critical threshold that decided the
/// expected outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub condition_value: f64,
    pub c_star: f64,
    pub ode: ComparisonOde,
}

/// Exact solution of an oracle scenario.
#[derive(Clone)]
pub struct Oracle {
    /// `u(t, y)`.
    pub u: Field,
    /// `w(tau, eta)`.
    pub w: Field,
}

/// One fully specified initial-boundary-value problem.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub model: OuterFlowModel,
    /// `u0(x, y)` and its `y` derivative.
    pub u0: Field,
    pub u0_y: Field,
    /// Physical inflow `u1(t, y)` at `x = 0`.
    pub u1: Field,
    /// Crocco image of the initial data, `w0(xi, eta)`.
    pub w0: Field,
    /// Crocco inflow `w1(tau, eta)`.
    pub w1: Field,
    pub defaults: GridDefaults,
    pub expected: ExpectedOutcome,
    pub prediction: Option<Prediction>,
    pub oracle: Option<Oracle>,
    pub metadata: BTreeMap<String, String>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("model", &self.model)
            .field("defaults", &self.defaults)
            .field("expected", &self.expected)
            .field("prediction", &self.prediction)
            .finish_non_exhaustive()
    }
}

impl Scenario {
    /// Condition integral of the initial data with the default quadrature.
    pub fn condition_value(&self) -> Result<f64> {
        let d = &self.defaults;
        Ok(condition_integral(&self.u0, &self.u0_y, &self.model, d.cond_y_cut, d.cond_n_x, d.cond_n_y)?.total())
    }
}

/// Looks a scenario up by its CLI name, with default parameters.
pub fn by_name(name: &str) -> Result<Scenario> {
    match name {
        "example4.1" => decelerating_outer_flow(3.0),
        "example4.2" => slow_growth_profile(50.0, 0.01),
        "favourable" => favourable_control(),
        "heat-oracle" => heat_oracle(0.05),
        other => Err(Error::Data(format!("unknown scenario '{other}', expected one of {}", NAMES.join(", ")))),
    }
}

fn meta(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// `integral_0^inf f'/sqrt(f'^2 + f^2) dy` for `f = 1 - exp(-y)`.
fn shear_layer_c0() -> f64 {
    let n = 1 << 16;
    let h = 40.0 / n as f64;
    let v: Vec<f64> = (0..=n)
        .map(|k| {
            let y = k as f64 * h;
            let d = (-y).exp();
            d / d.hypot(1.0 - d)
        })
        .collect();
    trapezoid_richardson(&v, h).0
}

/// `U_e = exp(-L^5 t)(2L - x)` on `[0, L]`, horizon `3 / L^5`, with the
/// shear-layer profile `u0 = U_e(0, x)(1 - exp(-y))`. The expected outcome
/// compares `(2/5) c0 L^(5/2)` against the critical threshold of the
/// computed constants.
pub fn decelerating_outer_flow(length: f64) -> Result<Scenario> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Model(format!("length must be positive, got {length}")));
    }
    let rate = length.powi(5);
    let horizon = 3.0 / rate;
    let model = OuterFlowModel::new(
        OuterFlowKind::DecayingLinear { intercept: 2.0 * length, slope: -1.0, rate },
        length,
        horizon,
    )?;
    let u0 = field(move |x, y| (2.0 * length - x) * (1.0 - (-y).exp()));
    let u0_y = field(move |x, y| (2.0 * length - x) * (-y).exp());
    let u1 = field(move |t, y| 2.0 * length * (-rate * t).exp() * (1.0 - (-y).exp()));
    let w0 = field(|_, eta| 1.0 - eta);
    let w1 = w0.clone();

    let c0 = shear_layer_c0();
    let condition_value = 0.4 * c0 * length.powf(2.5);
    let k = constants(&model, &w1, 65)?;
    let ode = ComparisonOde::from_constants(&k);
    let c_star = critical_threshold(&ode, horizon)?.c_star;
    let expected =
        if condition_value >= c_star { ExpectedOutcome::BackflowExpected } else { ExpectedOutcome::NoBackflowExpected };

    let t_r = PI / (4.0 * (rate + 1.0).powi(2));
    let defaults = GridDefaults {
        n_x: 65,
        n_y: 2049,
        y_max: 10.0,
        stretch: 1.0,
        n_xi: 65,
        n_eta: 65537,
        dt: t_r / 512.0,
        t_end: horizon.min(40.0 * t_r),
        cond_y_cut: 40.0,
        cond_n_x: 129,
        cond_n_y: 8193,
    };
    Ok(Scenario {
        name: "example4.1".into(),
        model,
        u0,
        u0_y,
        u1,
        w0,
        w1,
        defaults,
        expected,
        prediction: Some(Prediction { condition_value, c_star, ode }),
        oracle: None,
        metadata: meta(&[
            ("initial_profile", "shear layer U_e(0,x)(1-exp(-y)), chosen for its closed-form Crocco image".into()),
            ("inflow", "initial inflow profile rescaled by U_e(t,0)/U_e(0,0)".into()),
            ("horizon", format!("3/L^5 = {horizon}")),
            ("c0", format!("{c0}")),
            ("c_star", "smallest G0 whose comparison trajectory blows up before the horizon".into()),
        ]),
    })
}

/// `phi(y) = alpha y` up to `M`, then the C1 blend
/// `1 - (1 - alpha M) exp(-alpha (y - M) / (1 - alpha M))`.
fn blended_profile(m: f64, alpha: f64) -> (impl Fn(f64) -> f64 + Copy, impl Fn(f64) -> f64 + Copy) {
    let rest = 1.0 - alpha * m;
    let phi = move |y: f64| {
        if y <= m {
            alpha * y
        } else {
            1.0 - rest * (-alpha * (y - m) / rest).exp()
        }
    };
    let dphi = move |y: f64| {
        if y <= m {
            alpha
        } else {
            alpha * (-alpha * (y - m) / rest).exp()
        }
    };
    (phi, dphi)
}

/// Steady `U_e = 2 - x` on `[0, 1]` with `u0 = U_e(x) phi(y)`. The expected
/// outcome compares `(2/5) asinh(M)` against the threshold of
/// `G' = (25/32) G^3 - (3/4) G - (4 sqrt 2 - 1)/5`, the inflow constant
/// being dropped as a conservative lower bound.
pub fn slow_growth_profile(m: f64, alpha: f64) -> Result<Scenario> {
    if !(m > 0.0 && alpha > 0.0 && alpha * m < 1.0) {
        return Err(Error::Model(format!("need M > 0 and 0 < alpha < 1/M, got M = {m}, alpha = {alpha}")));
    }
    let horizon = 1.0;
    let model = OuterFlowModel::new(OuterFlowKind::AffineSteady { intercept: 2.0, slope: -1.0 }, 1.0, horizon)?;
    let (phi, dphi) = blended_profile(m, alpha);
    let rest = 1.0 - alpha * m;
    let u0 = field(move |x, y| (2.0 - x) * phi(y));
    let u0_y = field(move |x, y| (2.0 - x) * dphi(y));
    let u1 = field(move |_, y| 2.0 * phi(y));
    let w0 = field(move |_, eta| alpha * ((1.0 - eta) / rest).clamp(0.0, 1.0));
    let w1 = w0.clone();

    let condition_value = 0.4 * m.asinh();
    let k = constants(&model, &w1, 5)?;
    let ode = ComparisonOde { cubic: k.lambda2, linear: 0.75, forcing: -k.lambda1 };
    let c_star = critical_threshold(&ode, horizon)?.c_star;
    let expected =
        if condition_value >= c_star { ExpectedOutcome::BackflowExpected } else { ExpectedOutcome::NoBackflowExpected };

    let t_r = PI * alpha * alpha / 4.0;
    let defaults = GridDefaults {
        n_x: 33,
        n_y: 4097,
        y_max: 400.0_f64.max(8.0 * m),
        stretch: 1.0,
        n_xi: 33,
        n_eta: 65537,
        dt: t_r / 512.0,
        t_end: horizon.min(40.0 * t_r),
        cond_y_cut: m + 40.0 * rest / alpha,
        cond_n_x: 65,
        cond_n_y: 65537,
    };
    Ok(Scenario {
        name: "example4.2".into(),
        model,
        u0,
        u0_y,
        u1,
        w0,
        w1,
        defaults,
        expected,
        prediction: Some(Prediction { condition_value, c_star, ode }),
        oracle: None,
        metadata: meta(&[
            ("initial_profile", format!("alpha*y up to M, exponential C1 blend beyond (M = {m}, alpha = {alpha})")),
            ("inflow", "initial inflow profile (steady outer flow)".into()),
            ("condition_bound", "(2/5) asinh(M), the linear-region lower bound".into()),
            ("comparison_ode", "inflow constant dropped: G' = lambda2 G^3 - 3/4 G - lambda1".into()),
        ]),
    })
}

/// Accelerating `U_e = 2 + x`, so `dP/dx = -(2 + x) <= 0`.
pub fn favourable_control() -> Result<Scenario> {
    let model = OuterFlowModel::new(OuterFlowKind::AffineSteady { intercept: 2.0, slope: 1.0 }, 1.0, 1.0)?;
    let u0 = field(|x, y| (2.0 + x) * (1.0 - (-y).exp()));
    let u0_y = field(|x, y| (2.0 + x) * (-y).exp());
    let u1 = field(|_, y| 2.0 * (1.0 - (-y).exp()));
    let w0 = field(|_, eta| 1.0 - eta);
    let w1 = w0.clone();
    Ok(Scenario {
        name: "favourable".into(),
        model,
        u0,
        u0_y,
        u1,
        w0,
        w1,
        defaults: GridDefaults {
            n_x: 65,
            n_y: 129,
            y_max: 10.0,
            stretch: 1.0,
            n_xi: 33,
            n_eta: 129,
            dt: 1e-3,
            t_end: 1.0,
            cond_y_cut: 40.0,
            cond_n_x: 65,
            cond_n_y: 4097,
        },
        expected: ExpectedOutcome::NoBackflowExpected,
        prediction: None,
        oracle: None,
        metadata: meta(&[("initial_profile", "shear layer U_e(0,x)(1-exp(-y))".into())]),
    })
}

/// `U_e = 1`, `u0 = erf(y / (2 sqrt(t0)))`: the flow is the similarity
/// solution `erf(y / (2 sqrt(t + t0)))`, and in Crocco variables
/// `w = exp(-z^2) / sqrt(pi (tau + t0))` with `eta = erf(z)`.
pub fn heat_oracle(t0: f64) -> Result<Scenario> {
    if !(t0 > 0.0) {
        return Err(Error::Model(format!("t0 must be positive, got {t0}")));
    }
    let horizon = 0.2;
    let model = OuterFlowModel::new(OuterFlowKind::Constant { value: 1.0 }, 1.0, horizon)?;
    let exact_u = move |t: f64, y: f64| erf(y / (2.0 * (t + t0).sqrt()));
    let exact_w = move |tau: f64, eta: f64| {
        if eta >= 1.0 {
            return 0.0;
        }
        let z = erf_inv(eta);
        (-z * z).exp() / (PI * (tau + t0)).sqrt()
    };
    let u0 = field(move |_, y| exact_u(0.0, y));
    let u0_y = field(move |_, y| (-y * y / (4.0 * t0)).exp() / (PI * t0).sqrt());
    let u1 = field(exact_u);
    let w0 = field(move |_, eta| exact_w(0.0, eta));
    let w1 = field(exact_w);
    Ok(Scenario {
        name: "heat-oracle".into(),
        model,
        u0,
        u0_y,
        u1: u1.clone(),
        w0,
        w1: w1.clone(),
        defaults: GridDefaults {
            n_x: 16,
            n_y: 257,
            y_max: 8.0,
            stretch: 1.0,
            n_xi: 16,
            n_eta: 257,
            dt: 1e-4,
            t_end: horizon,
            cond_y_cut: 8.0,
            cond_n_x: 65,
            cond_n_y: 4097,
        },
        expected: ExpectedOutcome::Oracle,
        prediction: None,
        oracle: Some(Oracle { u: u1, w: w1 }),
        metadata: meta(&[("t0", format!("{t0}")), ("inflow", "exact similarity solution".into())]),
    })
}
