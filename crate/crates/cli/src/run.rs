//! Runs the selected solvers on one scenario and evaluates the runtime checks.

use std::collections::HashMap;

use serde::Serialize;

use prandtl_core::crocco::{self, CroccoOutcome, CroccoProblem};
use prandtl_core::crocco_transform::{CroccoGrid, ShearField};
use prandtl_core::diagnostics::{
    check_interior_positivity, check_lyapunov_inequality, check_shear_bound, interior_minimum, ComparisonOde,
    InequalityReport, InteriorReport, ShearBoundReport,
};
use prandtl_core::outer_flow::{GradientClass, OuterFlowModel};
use prandtl_core::physical::{self, wall_curvature, wall_shear, PhysicalGrid, PhysicalOutcome, PhysicalProblem};
use prandtl_core::scenarios::Scenario;
use prandtl_core::series::{BackFlowEvent, Source, StopRule};

use crate::config::RunConfig;

/// One stored level of a field, subsampled in the wall-normal direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub source: Source,
    pub t: f64,
    pub x: Vec<f64>,
    /// `y` (physical) or `eta` (Crocco) coordinates of the rows.
    pub rows: Vec<f64>,
    /// Row-major values, `rows.len() x x.len()`.
    pub values: Vec<f64>,
}

fn row_stride(n: usize, max_rows: usize) -> Vec<usize> {
    let stride = (n - 1).div_ceil(max_rows - 1).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

/// Per-level record of the physical run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalLevel {
    pub t: f64,
    pub wall_shear: Vec<f64>,
    /// Largest `|d2u/dy2(x, 0) - dP/dx| / |dP/dx|` over `x > 0`.
    pub compatibility: Option<f64>,
    pub interior: Option<InteriorReport>,
}

#[derive(Debug, Clone)]
pub struct PhysicalTrack {
    pub grid: PhysicalGrid,
    pub outcome: PhysicalOutcome,
    pub levels: Vec<PhysicalLevel>,
    pub event_interior: Option<InteriorReport>,
    /// `|d(wall shear)/dt| y1 y2 / 6` at the event column: truncation size of
    /// the one-sided wall stencil.
    pub resolution_floor: Option<f64>,
    pub inequality: Option<InequalityReport>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone)]
pub struct CroccoTrack {
    pub grid: CroccoGrid,
    pub outcome: CroccoOutcome,
    /// `(tau, U_e w(xi, 0))` per level.
    pub wall_shear: Vec<(f64, Vec<f64>)>,
    pub shear_bound: ShearBoundReport,
    pub inequality: Option<InequalityReport>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossValidation {
    /// Largest time compared (`0.9 t*` when an event was found).
    pub t_limit: f64,
    pub levels: usize,
    /// `max |physical - crocco| / max |physical|` of the wall shear.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub source: Option<Source>,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, source: Option<Source>, passed: bool, value: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), source, passed, value, threshold, detail }
    }
}

pub struct RunReport {
    pub config: RunConfig,
    pub scenario: Scenario,
    pub dt: f64,
    pub classification: GradientClass,
    pub physical: Option<PhysicalTrack>,
    pub crocco: Option<CroccoTrack>,
    pub cross: Option<CrossValidation>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn events(&self) -> Vec<BackFlowEvent> {
        let p = self.physical.as_ref().and_then(|p| p.outcome.event);
        let c = self.crocco.as_ref().and_then(|c| c.outcome.event);
        p.into_iter().chain(c).collect()
    }
}

/// Step size: the configured one, or the CFL factor times the tighter of the
/// selected solvers' advective limits.
pub fn resolve_dt(config: &RunConfig, model: &OuterFlowModel) -> prandtl_core::Result<f64> {
    let Some(cfl) = config.cfl else {
        return Ok(config.dt);
    };
    let mut limit = f64::INFINITY;
    if config.solver.physical() {
        let g = PhysicalGrid::new(config.n_x, config.n_y, model.length(), config.y_max, config.stretch, 0.0)?;
        limit = limit.min(physical::cfl_limit(&g, model));
    }
    if config.solver.crocco() {
        let g = CroccoGrid::new(config.n_xi, config.n_eta, model.length())?;
        limit = limit.min(crocco::cfl_limit(&g, model));
    }
    Ok(cfl * limit)
}

fn inequality(series: &[(f64, f64)], ode: Option<ComparisonOde>, config: &RunConfig) -> Option<InequalityReport> {
    ode.map(|ode| check_lyapunov_inequality(series, &ode, config.inequality_tolerance, config.inequality_exclude))
}

fn run_physical(
    config: &RunConfig,
    scenario: &Scenario,
    dt: f64,
    adverse: bool,
) -> prandtl_core::Result<PhysicalTrack> {
    let model = scenario.model;
    let grid = PhysicalGrid::new(config.n_x, config.n_y, model.length(), config.y_max, config.stretch, dt)?;
    let problem = PhysicalProblem::new(grid.clone(), model, scenario.u1.clone(), config.far_tolerance)?;
    let initial = problem.init(&scenario.u0)?;
    let initial_shear = wall_shear(&initial, &grid);
    let initial_interior: Vec<f64> = (0..grid.n_x).map(|i| interior_minimum(initial.column(i), &grid).1).collect();
    let rows = row_stride(grid.n_y, config.snapshot_max_rows);
    let snapshot = |s: &physical::VelocityField| Snapshot {
        source: Source::Physical,
        t: s.t,
        x: grid.x().to_vec(),
        rows: rows.iter().map(|&j| grid.y()[j]).collect(),
        values: rows.iter().flat_map(|&j| (0..grid.n_x).map(move |i| s.u[i * grid.n_y + j])).collect(),
    };
    let mut levels = Vec::new();
    let mut snapshots = Vec::new();
    let mut stop = StopRule::new(config.t_end);
    stop.bisections = config.bisections;
    let outcome = problem.run(initial, stop, &mut |step, s| {
        let shear = wall_shear(s, &grid);
        let compatibility = (step > 0).then(|| {
            let curv = wall_curvature(s, &grid);
            (1..grid.n_x)
                .filter_map(|i| {
                    let gp = model.sample(s.t, grid.x()[i]).pressure_gradient();
                    (gp != 0.0).then(|| (curv[i] - gp).abs() / gp.abs())
                })
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        });
        let interior = adverse.then(|| {
            let (i, _) = argmin(&shear);
            check_interior_positivity(s, &grid, i, (initial_shear[i], initial_interior[i]), false)
        });
        if step == 0 || (config.snapshot_every > 0 && step % config.snapshot_every == 0) {
            snapshots.push(snapshot(s));
        }
        levels.push(PhysicalLevel { t: s.t, wall_shear: shear, compatibility: compatibility.flatten(), interior });
    })?;
    if snapshots.last().map(|s| s.t) != Some(outcome.final_state.t) {
        snapshots.push(snapshot(&outcome.final_state));
    }
    let (event_interior, resolution_floor) = match outcome.event {
        Some(e) => {
            let i = grid.x().iter().position(|&x| x == e.x_star).unwrap_or(0);
            let report = check_interior_positivity(
                &outcome.final_state,
                &grid,
                i,
                (initial_shear[i], initial_interior[i]),
                true,
            );
            // rate of the wall shear over the last full step before the event
            let n = levels.len();
            let floor = (n >= 3).then(|| {
                let (a, b) = (&levels[n - 3], &levels[n - 2]);
                let rate = (b.wall_shear[i] - a.wall_shear[i]) / (b.t - a.t);
                let (y1, y2) = (grid.y()[1], grid.y()[2]);
                rate.abs() * y1 * y2 / 6.0
            });
            (Some(report), floor)
        }
        None => (None, None),
    };
    let inequality = inequality(&outcome.series.g_series(), scenario.prediction.map(|p| p.ode), config);
    Ok(PhysicalTrack { grid, outcome, levels, event_interior, resolution_floor, inequality, snapshots })
}

fn run_crocco(config: &RunConfig, scenario: &Scenario, dt: f64) -> prandtl_core::Result<CroccoTrack> {
    let model = scenario.model;
    let grid = CroccoGrid::new(config.n_xi, config.n_eta, model.length())?;
    let problem = CroccoProblem::new(grid, model, scenario.w1.clone(), dt)?;
    let initial = problem.init(&scenario.w0)?;
    let rows = row_stride(grid.n_eta(), config.snapshot_max_rows);
    let xs: Vec<f64> = (0..grid.n_xi()).map(|i| grid.xi(i)).collect();
    let snapshot = |f: &ShearField| Snapshot {
        source: Source::Crocco,
        t: f.tau,
        x: xs.clone(),
        rows: rows.iter().map(|&j| grid.eta(j)).collect(),
        values: rows.iter().flat_map(|&j| (0..grid.n_xi()).map(move |i| f.get(i, j))).collect(),
    };
    let mut shear_levels = Vec::new();
    let mut snapshots = Vec::new();
    let mut stop = StopRule::new(config.t_end);
    stop.bisections = config.bisections;
    let outcome = problem.run(initial, stop, &mut |step, f| {
        let shear: Vec<f64> = xs.iter().enumerate().map(|(i, &x)| model.sample(f.tau, x).ue * f.get(i, 0)).collect();
        shear_levels.push((f.tau, shear));
        if step == 0 || (config.snapshot_every > 0 && step % config.snapshot_every == 0) {
            snapshots.push(snapshot(f));
        }
    })?;
    if snapshots.last().map(|s| s.t) != Some(outcome.final_field.tau) {
        snapshots.push(snapshot(&outcome.final_field));
    }
    let shear_bound = check_shear_bound(&outcome.history, &model, &grid, config.shear_bound_allowance)?;
    let inequality = inequality(&outcome.series.g_series(), scenario.prediction.map(|p| p.ode), config);
    Ok(CroccoTrack { grid, outcome, wall_shear: shear_levels, shear_bound, inequality, snapshots })
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter().copied().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, x)| if x < bv { (i, x) } else { (bi, bv) })
}

/// Linear interpolation of `values` given on `xs` at `x`.
fn interpolate(xs: &[f64], values: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&p| p <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let s = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    values[k - 1] + s * (values[k] - values[k - 1])
}

fn cross_validate(p: &PhysicalTrack, c: &CroccoTrack, dt: f64) -> CrossValidation {
    let t_star = p.outcome.event.or(c.outcome.event).map(|e| e.t_star);
    let t_limit = t_star.map_or(f64::INFINITY, |t| 0.9 * t);
    let xi: Vec<f64> = (0..c.grid.n_xi()).map(|i| c.grid.xi(i)).collect();
    let crocco_at: HashMap<u64, &Vec<f64>> = c.wall_shear.iter().map(|(t, v)| (((t / dt).round()) as u64, v)).collect();
    let (mut diff, mut scale, mut levels) = (0.0f64, 0.0f64, 0usize);
    let mut last_t: f64 = 0.0;
    for level in p.levels.iter().filter(|l| l.t <= t_limit) {
        let key = (level.t / dt).round() as u64;
        if ((level.t / dt) - key as f64).abs() > 1e-6 {
            continue;
        }
        let Some(cw) = crocco_at.get(&key) else {
            continue;
        };
        levels += 1;
        last_t = level.t;
        for (x, pw) in p.grid.x().iter().zip(&level.wall_shear) {
            diff = diff.max((pw - interpolate(&xi, cw, *x)).abs());
            scale = scale.max(pw.abs());
        }
    }
    CrossValidation {
        t_limit: if t_limit.is_finite() { t_limit } else { last_t },
        levels,
        relative_error: if scale > 0.0 { diff / scale } else { 0.0 },
    }
}

fn event_check(e: &BackFlowEvent, model: &OuterFlowModel, tol: f64) -> Check {
    let gp = model.sample(e.t_star, e.x_star).pressure_gradient();
    let mismatch = e.curvature_mismatch(gp);
    Check::new(
        "event_curvature",
        Some(e.source),
        e.wall_curvature > 0.0 && mismatch <= tol,
        mismatch,
        tol,
        format!("d2u/dy2 = {:.6e}, dP/dx = {gp:.6e} at (t = {:.6e}, x = {:.6e})", e.wall_curvature, e.t_star, e.x_star),
    )
}

fn inequality_check(report: &InequalityReport, source: Source, config: &RunConfig) -> Check {
    let worst = report.worst.map_or(String::new(), |(t, m)| format!(", worst margin {m:.3e} at t = {t:.6e}"));
    Check::new(
        "lyapunov_inequality",
        Some(source),
        report.pass_fraction >= 0.95,
        report.pass_fraction,
        0.95,
        format!(
            "{} of {} steps satisfy the comparison inequality (tolerance {}, last {} steps excluded){worst}",
            report.passed_steps, report.checked, config.inequality_tolerance, config.inequality_exclude
        ),
    )
}

fn physical_checks(t: &PhysicalTrack, model: &OuterFlowModel, config: &RunConfig, out: &mut Vec<Check>) {
    let src = Some(Source::Physical);
    if let Some(e) = &t.outcome.event {
        out.push(event_check(e, model, config.curvature_tolerance));
    }
    let pre_event = if t.outcome.event.is_some() { t.levels.len() - 1 } else { t.levels.len() };
    let compat = t.levels[..pre_event].iter().filter_map(|l| l.compatibility.map(|c| (l.t, c)));
    if let Some((tw, worst)) = compat.fold(None, |m: Option<(f64, f64)>, v| match m {
        Some(b) if b.1 >= v.1 => Some(b),
        _ => Some(v),
    }) {
        out.push(Check::new(
            "wall_compatibility",
            src,
            worst <= config.curvature_tolerance,
            worst,
            config.curvature_tolerance,
            format!("largest |d2u/dy2 - dP/dx| / |dP/dx| over x > 0 and 0 < t < t*: at t = {tw:.6e}"),
        ));
    }
    let interiors: Vec<&InteriorReport> = t.levels[..pre_event].iter().filter_map(|l| l.interior.as_ref()).collect();
    if !interiors.is_empty() {
        let failed = interiors.iter().find(|r| !r.passed);
        let min = interiors.iter().map(|r| r.interior_min).fold(f64::INFINITY, f64::min);
        out.push(Check::new(
            "interior_positivity",
            src,
            failed.is_none(),
            min,
            0.0,
            failed.map_or(format!("{} levels, interior du/dy stays positive", interiors.len()), |r| {
                format!("t = {:.6e}, x = {:.4}: {}", r.t, r.x, r.note)
            }),
        ));
    }
    if let Some(r) = &t.event_interior {
        out.push(Check::new(
            "wall_first_at_event",
            src,
            r.passed,
            r.global_argmin as f64,
            0.0,
            format!("x* = {:.6e}: {}", r.x, r.note),
        ));
        if let Some(floor) = t.resolution_floor {
            out.push(Check::new(
                "interior_above_resolution_floor",
                src,
                r.interior_min > 10.0 * floor,
                r.interior_min,
                10.0 * floor,
                format!(
                    "interior min du/dy {:.6e} at y = {:.6e}, wall stencil floor {floor:.6e}",
                    r.interior_min, r.interior_argmin_y
                ),
            ));
        }
    }
    if let Some(r) = &t.inequality {
        out.push(inequality_check(r, Source::Physical, config));
    }
}

fn crocco_checks(
    t: &CroccoTrack,
    model: &OuterFlowModel,
    classification: GradientClass,
    config: &RunConfig,
    out: &mut Vec<Check>,
) {
    if let Some(e) = &t.outcome.event {
        out.push(event_check(e, model, config.curvature_tolerance));
    }
    let b = &t.shear_bound;
    // a favourable gradient feeds shear in through the wall closure, so the
    // growth bound is only asserted for adverse and zero gradients
    let zero_gradient = classification == GradientClass::Favourable
        && model.classify_gradient(101, 101).is_ok_and(|r| r.min_grad == 0.0 && r.max_grad == 0.0);
    if classification == GradientClass::Adverse || zero_gradient {
        out.push(Check::new(
            "shear_growth_bound",
            Some(Source::Crocco),
            b.passed,
            b.margin,
            0.0,
            format!(
                "N = {:.6e}, reference sup w^2 = {:.6e}, worst exp(-N tau) sup w^2 = {:.6e}, allowance {}",
                b.growth_rate, b.reference, b.worst, config.shear_bound_allowance
            ),
        ));
    }
    if let Some(r) = &t.inequality {
        out.push(inequality_check(r, Source::Crocco, config));
    }
}

/// Runs the configured solvers (concurrently when both are selected) and
/// evaluates every applicable check.
pub fn execute(config: &RunConfig) -> anyhow::Result<RunReport> {
    let scenario = config.scenario()?;
    let model = scenario.model;
    let dt = resolve_dt(config, &model)?;
    let classification = model.classify_gradient(101, 101)?.classification;
    let adverse = classification == GradientClass::Adverse;
    let (physical, crocco) = rayon::join(
        || config.solver.physical().then(|| run_physical(config, &scenario, dt, adverse)).transpose(),
        || config.solver.crocco().then(|| run_crocco(config, &scenario, dt)).transpose(),
    );
    let (physical, crocco) = (physical?, crocco?);
    let mut checks = Vec::new();
    if let Some(p) = &physical {
        physical_checks(p, &model, config, &mut checks);
    }
    if let Some(c) = &crocco {
        crocco_checks(c, &model, classification, config, &mut checks);
    }
    let cross = match (&physical, &crocco) {
        (Some(p), Some(c)) => {
            let x = cross_validate(p, c, dt);
            checks.push(Check::new(
                "cross_validation",
                None,
                x.relative_error <= config.cross_tolerance,
                x.relative_error,
                config.cross_tolerance,
                format!("wall shear of both solvers over {} levels up to t = {:.6e}", x.levels, x.t_limit),
            ));
            Some(x)
        }
        _ => None,
    };
    Ok(RunReport { config: config.clone(), scenario, dt, classification, physical, crocco, cross, checks })
}
