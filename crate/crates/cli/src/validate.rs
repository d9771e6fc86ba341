//! The `validate` subcommand: a fixed suite of runs against closed-form
//! solutions and known constants.

use std::f64::consts::PI;

use serde::Serialize;

use prandtl_core::crocco::CroccoProblem;
use prandtl_core::crocco_transform::{forward, inverse, CroccoGrid, ShearField};
use prandtl_core::diagnostics::{comparison_ode, constants, critical_threshold, lyapunov_g, ComparisonOde};
use prandtl_core::outer_flow::{OuterFlowKind, OuterFlowModel};
use prandtl_core::physical::{wall_shear, PhysicalGrid, PhysicalProblem};
use prandtl_core::profile::field;
use prandtl_core::scenarios::heat_oracle;
use prandtl_core::series::StopRule;

const HEAT_T0: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn case(name: &'static str, value: f64, threshold: f64, detail: String) -> CaseResult {
    CaseResult { name, passed: value <= threshold, value, threshold, detail }
}

/// Options of the suite. `wall_shear_gain` scales the measured wall shear
/// before it is compared; anything other than 1 must make the suite fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub wall_shear_gain: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { wall_shear_gain: 1.0 }
    }
}

fn heat_physical(opts: ValidateOptions) -> prandtl_core::Result<[CaseResult; 2]> {
    let s = heat_oracle(HEAT_T0)?;
    let d = s.defaults;
    let grid = PhysicalGrid::new(d.n_x, d.n_y, s.model.length(), d.y_max, d.stretch, d.dt)?;
    let problem = PhysicalProblem::new(grid.clone(), s.model, s.u1.clone(), 1e-3)?;
    let mut shear_error: f64 = 0.0;
    let out = problem.run(problem.init(&s.u0)?, StopRule::new(d.t_end), &mut |_, state| {
        let exact = 1.0 / (PI * (state.t + HEAT_T0)).sqrt();
        for tau in wall_shear(state, &grid) {
            shear_error = shear_error.max((opts.wall_shear_gain * tau - exact).abs() / exact);
        }
    })?;
    let exact = &s.oracle.as_ref().expect("heat scenario has an oracle").u;
    let f = &out.final_state;
    let err = (0..grid.n_x)
        .flat_map(|i| f.column(i).iter().zip(grid.y()).map(move |(u, &y)| (u - exact(f.t, y)).abs()))
        .fold(0.0, f64::max);
    Ok([
        case("heat_physical_profile", err, 1e-3, format!("max |u - erf| at t = {:.3}", f.t)),
        case(
            "heat_physical_wall_shear",
            shear_error,
            1e-2,
            format!("max relative error against 1/sqrt(pi (t + {HEAT_T0})) over {} levels", out.series.steps.len() + 1),
        ),
    ])
}

fn heat_crocco() -> prandtl_core::Result<CaseResult> {
    let s = heat_oracle(HEAT_T0)?;
    let d = s.defaults;
    let grid = CroccoGrid::new(d.n_xi, d.n_eta, s.model.length())?;
    let problem = CroccoProblem::new(grid, s.model, s.w1.clone(), d.dt)?;
    let out = problem.run(problem.init(&s.w0)?, StopRule::new(d.t_end), &mut |_, _| {})?;
    let exact = &s.oracle.as_ref().expect("heat scenario has an oracle").w;
    let f = &out.final_field;
    let err = (0..grid.n_xi())
        .flat_map(|i| (0..grid.n_eta()).map(move |j| (f.get(i, j) - exact(f.tau, grid.eta(j))).abs()))
        .fold(0.0, f64::max);
    Ok(case("heat_crocco_shear", err, 5e-3, format!("max |w - w_exact| at tau = {:.3}", f.tau)))
}

fn round_trip() -> prandtl_core::Result<CaseResult> {
    let y: Vec<f64> = (0..8001).map(|k| k as f64 * 0.005).collect();
    let u: Vec<f64> = y.iter().map(|y| 1.0 - (-y).exp()).collect();
    let du: Vec<f64> = y.iter().map(|y| (-y).exp()).collect();
    let back = inverse(&forward(&u, &du, 1.0, 129, 1e-6)?, 1.0)?;
    let err = back.y.iter().zip(&back.u).map(|(y, u)| (u - (1.0 - (-y).exp())).abs()).fold(0.0, f64::max);
    Ok(case("crocco_round_trip", err, 1e-4, "exponential layer through 129 eta nodes".into()))
}

fn unit_functional() -> CaseResult {
    let grid = CroccoGrid::new(513, 513, 1.0).expect("valid grid");
    let mut f = ShearField::from_fn(grid, 0.0, |_, _| 1.0);
    for i in 0..grid.n_xi() {
        f.column_mut(i)[grid.n_eta() - 1] = 1.0;
    }
    let g = lyapunov_g(&f).value;
    let exact = 0.4 * 2f64.sqrt().ln_1p();
    case("functional_of_unit_shear", (g - exact).abs(), 1e-5, format!("G = {g:.10}, expected (2/5) ln(1 + sqrt 2)"))
}

fn affine_constants() -> prandtl_core::Result<CaseResult> {
    let model = OuterFlowModel::new(OuterFlowKind::AffineSteady { intercept: 2.0, slope: -1.0 }, 1.0, 1.0)?;
    let k = constants(&model, &field(|_, eta| 1.0 - eta), 3)?;
    let l1 = (4.0 * 2f64.sqrt() - 1.0) / 5.0;
    let err = (k.lambda1 - l1).abs().max((k.lambda2 - 25.0 / 32.0).abs());
    Ok(case("affine_flow_constants", err, 1e-9, format!("lambda1 = {:.12}, lambda2 = {:.12}", k.lambda1, k.lambda2)))
}

fn pure_cubic() -> CaseResult {
    let ode = ComparisonOde { cubic: 1.0, linear: 0.0, forcing: 0.0 };
    let t = comparison_ode(1.0, &ode, 2.0).blowup_time.unwrap_or(f64::INFINITY);
    case("cubic_blowup_time", (t - 0.5).abs(), 1e-4, format!("G' = G^3 from 1 blows up at {t:.6}"))
}

fn threshold_bracket() -> prandtl_core::Result<CaseResult> {
    let ode = ComparisonOde { cubic: 25.0 / 32.0, linear: 0.75, forcing: -(4.0 * 2f64.sqrt() - 1.0) / 5.0 };
    let r = critical_threshold(&ode, 5.0)?;
    let above = comparison_ode(r.c_star * (1.0 + 1e-6), &ode, 5.0).blowup_time.is_some_and(|t| t <= 5.0);
    let below = comparison_ode(r.lower * (1.0 - 1e-6), &ode, 5.0).blowup_time.is_some_and(|t| t <= 5.0);
    let width = (r.c_star - r.lower) / r.c_star;
    let mut c = case("threshold_bracket", width, 1e-9, format!("C* = {:.10}, bracket [{:.10}, C*]", r.c_star, r.lower));
    c.passed &= above && !below;
    Ok(c)
}

/// Runs every case. A case that errors is reported as failed.
pub fn run_suite(opts: ValidateOptions) -> Vec<CaseResult> {
    let failed = |name: &'static str, e: prandtl_core::Error| CaseResult {
        name,
        passed: false,
        value: f64::NAN,
        threshold: f64::NAN,
        detail: e.to_string(),
    };
    let mut out = Vec::new();
    match heat_physical(opts) {
        Ok(cases) => out.extend(cases),
        Err(e) => out.push(failed("heat_physical", e)),
    }
    out.push(heat_crocco().unwrap_or_else(|e| failed("heat_crocco_shear", e)));
    out.push(round_trip().unwrap_or_else(|e| failed("crocco_round_trip", e)));
    out.push(unit_functional());
    out.push(affine_constants().unwrap_or_else(|e| failed("affine_flow_constants", e)));
    out.push(pure_cubic());
    out.push(threshold_bracket().unwrap_or_else(|e| failed("threshold_bracket", e)));
    out
}
