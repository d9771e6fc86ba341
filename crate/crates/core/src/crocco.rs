//! Prandtl equations in Crocco variables.
//!
//! The state is advanced as `s = w^2`, which satisfies
//! `s_tau + eta U_e s_xi + A s_eta + 2 B s = s s_eta_eta - s_eta^2 / 2`
//! with the wall flux `s_eta(0) = 2 dP/dx / U_e`. Near an adverse wall `s`
//! is close to linear in `eta` while `w` has a square-root profile, so the
//! squared variable is the one that is well resolved there.

use rayon::prelude::*;
use serde::Serialize;

use crate::crocco_transform::{Coefficients, CroccoGrid, ShearField};
use crate::diagnostics::lyapunov_g;
use crate::error::{Error, Result};
use crate::outer_flow::OuterFlowModel;
use crate::profile::Field;
use crate::series::{argmin, BackFlowEvent, DiagnosticSeries, Source, StepRecord, StepReport, StopRule};

/// Largest negative `s = w^2` that is clamped to zero instead of rejected.
pub const CLAMP_FLOOR: f64 = -1e-10;

/// Wall value from the one-sided closure
/// `w(0)^2 = w(d_eta)^2 - 2 d_eta (dP/dx) / U_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallClosure {
    pub value: f64,
    pub radicand: f64,
    /// Set when the radicand is not positive.
    pub backflow: bool,
}

pub fn wall_closure(w_interior: f64, grad_p_over_ue: f64, d_eta: f64) -> WallClosure {
    let radicand = w_interior * w_interior - 2.0 * d_eta * grad_p_over_ue;
    if radicand <= 0.0 {
        WallClosure { value: 0.0, radicand, backflow: true }
    } else {
        WallClosure { value: radicand.sqrt(), radicand, backflow: false }
    }
}

/// Column whose wall closure signalled back-flow during a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallSignal {
    pub column: usize,
    pub xi: f64,
    /// Smaller of the closure radicand and the updated wall value of `s`.
    pub radicand: f64,
    /// Signed wall shear estimate `-U_e sqrt(|radicand|)`. Columns are
    /// ranked by it, as the physical solver ranks its wall shear.
    pub shear_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CroccoStepReport {
    pub report: StepReport,
    pub signal: Option<WallSignal>,
    /// Number of slightly negative `s` values set to zero.
    pub clamped: usize,
}

thread_local! {
    static SCRATCH: std::cell::Cell<Vec<f64>> = const { std::cell::Cell::new(Vec::new()) };
}

/// Column work space, handed back to the thread on drop so large buffers
/// are not reallocated every step.
struct Scratch(Vec<f64>);

impl Drop for Scratch {
    fn drop(&mut self) {
        let v = std::mem::take(&mut self.0);
        SCRATCH.with(|c| c.set(v));
    }
}

/// Per-level summary kept for the growth bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSummary {
    pub tau: f64,
    pub max_w_sq: f64,
    pub inflow_max_w_sq: f64,
}

impl LevelSummary {
    pub fn of(field: &ShearField) -> Self {
        let max_w_sq = field.values.iter().fold(0.0f64, |m, w| m.max(w * w));
        let inflow_max_w_sq = field.column(0).iter().fold(0.0f64, |m, w| m.max(w * w));
        Self { tau: field.tau, max_w_sq, inflow_max_w_sq }
    }
}

/// Solver state: the shear field and the nominal time step.
#[derive(Debug, Clone, PartialEq)]
pub struct CroccoRunState {
    pub field: ShearField,
    pub dt: f64,
}

/// Grid, outer flow and inflow shear of one Crocco-variable run.
#[derive(Clone)]
pub struct CroccoProblem {
    pub grid: CroccoGrid,
    pub model: OuterFlowModel,
    /// Inflow shear `w1(tau, eta)` held at `xi = 0`.
    pub inflow: Field,
    pub dt: f64,
}

impl CroccoProblem {
    pub fn new(grid: CroccoGrid, model: OuterFlowModel, inflow: Field, dt: f64) -> Result<Self> {
        if (grid.length() - model.length()).abs() > 1e-12 * model.length() {
            return Err(Error::Grid("grid length differs from the model length".into()));
        }
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::Grid(format!("time step must be non-negative, got {dt}")));
        }
        let limit = cfl_limit(&grid, &model);
        if dt > limit {
            return Err(Error::Grid(format!("time step {dt} exceeds the advective limit {limit}")));
        }
        Ok(Self { grid, model, inflow, dt })
    }

    /// Samples `w0` and checks positivity below `eta = 1` and the Dirichlet
    /// row at `eta = 1`.
    pub fn init(&self, w0: &Field) -> Result<CroccoRunState> {
        let g = &self.grid;
        let mut field = ShearField::zeros(*g, 0.0);
        for i in 0..g.n_xi() {
            let xi = g.xi(i);
            let top = w0(xi, 1.0);
            if top.abs() > 1e-12 {
                return Err(Error::Data(format!("w0({xi}, 1) = {top}, expected 0")));
            }
            let col = field.column_mut(i);
            for (j, c) in col[..g.n_eta() - 1].iter_mut().enumerate() {
                let v = w0(xi, g.eta(j));
                if !(v > 0.0) {
                    return Err(Error::Data(format!("w0 not positive at node ({i}, {j}): {v}")));
                }
                *c = v;
            }
        }
        Ok(CroccoRunState { field, dt: self.dt })
    }

    /// Advances the shear field by `dt`.
    pub fn step(&self, field: &ShearField, dt: f64) -> Result<(ShearField, CroccoStepReport)> {
        let g = &self.grid;
        let n = g.n_eta();
        let tau = field.tau;
        let tau_new = tau + dt;
        if dt == 0.0 {
            let report = StepReport {
                t_new: tau,
                max_residual: 0.0,
                min_wall_shear: self.min_wall_shear(field).1,
                monotone_flag: true,
            };
            return Ok((field.clone(), CroccoStepReport { report, signal: None, clamped: 0 }));
        }
        let de = g.d_eta();
        let dxi = g.d_xi();
        let inv_de2 = 1.0 / (de * de);
        let inv_de = 1.0 / de;
        let half_inv_de = 0.5 * inv_de;
        let inv_dxi = 1.0 / dxi;
        let mut next = ShearField::zeros(*g, tau_new);
        let columns: Vec<Result<(f64, Option<f64>, usize)>> = next
            .values
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, out)| {
                let xi = g.xi(i);
                if i == 0 {
                    for (j, o) in out.iter_mut().enumerate().take(n - 1) {
                        *o = (self.inflow)(tau_new, g.eta(j));
                    }
                    out[n - 1] = 0.0;
                    return Ok((0.0, None, 0));
                }
                let old = self.model.sample(tau, xi);
                let new = self.model.sample(tau_new, xi);
                let g_wall = new.pressure_gradient() / new.ue;
                let w = field.column(i);
                let w_left = field.column(i - 1);
                let sq = |j: usize| w[j] * w[j];
                let rate = old.dt_ue / old.ue;
                // Rows are assembled and eliminated in one forward sweep;
                // `d` and `b` keep the off-diagonal weight and the right-hand
                // side for the residual.
                let mut buffers = Scratch(SCRATCH.with(|c| c.take()));
                buffers.0.resize(4 * n, 0.0);
                let (d, rest): (&mut [f64], &mut [f64]) = buffers.0.split_at_mut(n);
                let (b, rest): (&mut [f64], &mut [f64]) = rest.split_at_mut(n);
                let (cp, x): (&mut [f64], &mut [f64]) = rest.split_at_mut(n);

                let s0 = sq(0);
                let c0 = 2.0 * s0 * inv_de2;
                d[0] = dt * c0;
                b[0] = s0 - dt * (c0 * 2.0 * de * g_wall + 2.0 * rate * s0);
                let mut pivot = 1.0 + d[0];
                cp[0] = -d[0] / pivot;
                x[0] = b[0] / pivot;

                let (mut s_prev, mut s_here) = (s0, sq(1));
                for j in 1..n - 1 {
                    let s_next = sq(j + 1);
                    let eta = j as f64 * de;
                    let k_a = (1.0 - eta * eta) * old.dx_ue + (1.0 - eta) * rate;
                    let k_b = eta * old.dx_ue + rate;
                    let central = (s_next - s_prev) * half_inv_de;
                    let speed = k_a + 0.5 * central;
                    let slope = if speed.abs() * de < 2.0 * s_here {
                        central
                    } else if speed > 0.0 {
                        (s_here - s_prev) * inv_de
                    } else {
                        (s_next - s_here) * inv_de
                    };
                    let xi_adv = eta * old.ue * (s_here - w_left[j] * w_left[j]) * inv_dxi;
                    let rhs = s_here - dt * (xi_adv + speed * slope + 2.0 * k_b * s_here);
                    let dj = dt * s_here * inv_de2;
                    d[j] = dj;
                    b[j] = rhs;
                    pivot = 1.0 + 2.0 * dj + dj * cp[j - 1];
                    if pivot == 0.0 || !pivot.is_finite() {
                        return Err(Error::SingularPivot(j));
                    }
                    let inv = 1.0 / pivot;
                    cp[j] = -dj * inv;
                    x[j] = (rhs + dj * x[j - 1]) * inv;
                    s_prev = s_here;
                    s_here = s_next;
                }
                x[n - 1] = 0.0;
                for j in (0..n - 1).rev() {
                    x[j] -= cp[j] * x[j + 1];
                }
                if let Some(j) = x.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Instability { i, j, t: tau_new });
                }
                let mut residual = ((1.0 + d[0]) * x[0] - d[0] * x[1] - b[0]).abs();
                for j in 1..n - 1 {
                    let r = (1.0 + 2.0 * d[j]) * x[j] - d[j] * (x[j - 1] + x[j + 1]) - b[j];
                    residual = residual.max(r.abs());
                }
                let rhs = x;

                let closure = wall_closure(rhs[1].max(0.0).sqrt(), g_wall, de);
                let signal = if closure.backflow || rhs[0] <= 0.0 { Some(closure.radicand.min(rhs[0])) } else { None };
                let mut clamped = 0;
                for (j, v) in rhs.iter_mut().enumerate().take(n - 1).skip(1) {
                    if *v < 0.0 {
                        if *v < CLAMP_FLOOR && signal.is_none() {
                            return Err(Error::Instability { i, j, t: tau_new });
                        }
                        *v = 0.0;
                        clamped += 1;
                    }
                }
                for (o, v) in out.iter_mut().zip(rhs.iter()) {
                    *o = v.max(0.0).sqrt();
                }
                if signal.is_some() {
                    out[0] = 0.0;
                }
                out[n - 1] = 0.0;
                Ok((residual, signal, clamped))
            })
            .collect();

        let mut max_residual: f64 = 0.0;
        let mut clamped = 0;
        let mut signal: Option<WallSignal> = None;
        for (i, c) in columns.into_iter().enumerate() {
            let (res, sig, cl) = c?;
            max_residual = max_residual.max(res);
            clamped += cl;
            if let Some(r) = sig {
                let xi = g.xi(i);
                let shear_estimate = -self.model.sample(tau_new, xi).ue * r.abs().sqrt();
                if signal.is_none_or(|s| shear_estimate < s.shear_estimate) {
                    signal = Some(WallSignal { column: i, xi, radicand: r, shear_estimate });
                }
            }
        }
        let report = StepReport {
            t_new: tau_new,
            max_residual,
            min_wall_shear: self.min_wall_shear(&next).1,
            monotone_flag: clamped == 0,
        };
        Ok((next, CroccoStepReport { report, signal, clamped }))
    }

    /// Smallest `U_e w(xi, 0)` and its column.
    pub fn min_wall_shear(&self, field: &ShearField) -> (usize, f64) {
        let shear: Vec<f64> =
            (0..self.grid.n_xi()).map(|i| self.model.sample(field.tau, self.grid.xi(i)).ue * field.get(i, 0)).collect();
        argmin(&shear)
    }

    /// Steps until `stop.t_end` or until the wall closure signals back-flow;
    /// the signalling time is bracketed by repeated halving of the step.
    pub fn run(
        &self,
        initial: CroccoRunState,
        stop: StopRule,
        observer: &mut dyn FnMut(usize, &ShearField),
    ) -> Result<CroccoOutcome> {
        let g = &self.grid;
        let record = |f: &ShearField| -> StepRecord {
            let (i, m) = self.min_wall_shear(f);
            StepRecord::new(f.tau, m, g.xi(i), lyapunov_g(f).value)
        };
        let first = record(&initial.field);
        if stop.detect_backflow && first.min_wall_shear <= 0.0 {
            return Err(Error::Data("wall shear is not positive at the initial time".into()));
        }
        let mut series = DiagnosticSeries::new(Source::Crocco, first);
        let mut history = vec![LevelSummary::of(&initial.field)];
        let mut clamped = 0usize;
        observer(0, &initial.field);
        let dt_nominal = initial.dt;
        let mut field = initial.field;
        let mut steps = 0usize;
        let slack = 1e-9 * dt_nominal.max(f64::MIN_POSITIVE);
        while dt_nominal > 0.0 && field.tau < stop.t_end - slack {
            let dt = dt_nominal.min(stop.t_end - field.tau);
            let (next, report) = self.step(&field, dt)?;
            steps += 1;
            clamped += report.clamped;
            if let Some(first) = report.signal.filter(|_| stop.detect_backflow) {
                let (lo, hi, signal) = self.bisect(field, next, first, dt, stop.bisections)?;
                let event = self.event_at(&hi, signal);
                history.push(LevelSummary::of(&hi));
                series.steps.push(record(&hi));
                observer(steps, &hi);
                return Ok(CroccoOutcome {
                    series,
                    event: Some(event),
                    history,
                    clamped,
                    last_positive: Some(lo),
                    final_field: hi,
                });
            }
            history.push(LevelSummary::of(&next));
            series.steps.push(record(&next));
            observer(steps, &next);
            field = next;
        }
        Ok(CroccoOutcome { series, event: None, history, clamped, last_positive: None, final_field: field })
    }

    fn bisect(
        &self,
        mut lo: ShearField,
        mut hi: ShearField,
        mut signal: WallSignal,
        dt: f64,
        halvings: u32,
    ) -> Result<(ShearField, ShearField, WallSignal)> {
        let mut h = dt;
        for _ in 0..halvings {
            h *= 0.5;
            let (mid, report) = self.step(&lo, h)?;
            match report.signal {
                Some(s) => {
                    hi = mid;
                    signal = s;
                }
                None => lo = mid,
            }
        }
        Ok((lo, hi, signal))
    }

    fn event_at(&self, field: &ShearField, signal: WallSignal) -> BackFlowEvent {
        let i = signal.column;
        let de = self.grid.d_eta();
        let sample = self.model.sample(field.tau, signal.xi);
        let s1 = field.get(i, 1).powi(2);
        let s0 = signal.radicand.max(0.0);
        BackFlowEvent {
            t_star: field.tau,
            x_star: signal.xi,
            wall_curvature: sample.ue * (s1 - s0) / (2.0 * de),
            source: Source::Crocco,
        }
    }
}

/// Result of [`CroccoProblem::run`].
#[derive(Debug, Clone)]
pub struct CroccoOutcome {
    pub series: DiagnosticSeries,
    pub event: Option<BackFlowEvent>,
    /// Maximum of `w^2` at every stored level, initial level first.
    pub history: Vec<LevelSummary>,
    /// Total number of clamped negative values.
    pub clamped: usize,
    pub last_positive: Option<ShearField>,
    pub final_field: ShearField,
}

/// Largest stable advective step:
/// `min(0.5 d_xi / max(eta U_e), 0.5 d_eta / max|A|)`, sampled over the
/// horizon.
pub fn cfl_limit(grid: &CroccoGrid, model: &OuterFlowModel) -> f64 {
    let nt = 21;
    let ne = 101;
    let mut max_a: f64 = 0.0;
    for a in 0..nt {
        let t = model.horizon() * a as f64 / (nt - 1) as f64;
        for i in 0..grid.n_xi() {
            let s = model.sample(t, grid.xi(i));
            for e in 0..ne {
                let eta = e as f64 / (ne - 1) as f64;
                max_a = max_a.max(Coefficients::from_sample(&s, eta).a.abs());
            }
        }
    }
    let xi_limit = 0.5 * grid.d_xi() / model.max_ue();
    let eta_limit = if max_a > 0.0 { 0.5 * grid.d_eta() / max_a } else { f64::INFINITY };
    xi_limit.min(eta_limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outer_flow::OuterFlowKind;
    use crate::profile::field;
    use approx::assert_abs_diff_eq;

    fn affine_problem(slope: f64, n_xi: usize, n_eta: usize, dt: f64) -> CroccoProblem {
        let model = OuterFlowModel::new(OuterFlowKind::AffineSteady { intercept: 2.0, slope }, 1.0, 1.0).unwrap();
        let grid = CroccoGrid::new(n_xi, n_eta, 1.0).unwrap();
        CroccoProblem::new(grid, model, field(|_, eta| 1.0 - eta), dt).unwrap()
    }

    #[test]
    fn closure_examples() {
        assert_eq!(wall_closure(1.0, 0.0, 0.1), WallClosure { value: 1.0, radicand: 1.0, backflow: false });
        let c = wall_closure(1.0, 1.0, 0.5);
        assert!(c.backflow);
        assert_eq!(c.value, 0.0);
        let c = wall_closure(0.2, 1.0, 0.01);
        assert_abs_diff_eq!(c.value, 0.02f64.sqrt(), epsilon = 1e-15);
        assert!(!c.backflow);
    }

    #[test]
    fn init_checks_data() {
        let p = affine_problem(-1.0, 9, 33, 1e-3);
        assert!(p.init(&field(|_, eta| 1.0 - eta)).is_ok());
        assert!(matches!(p.init(&field(|_, _| 0.0)), Err(Error::Data(_))));
        assert!(matches!(p.init(&field(|_, eta| 1.1 - eta)), Err(Error::Data(_))));
    }

    #[test]
    fn zero_step_is_identity() {
        let p = affine_problem(-1.0, 9, 33, 1e-3);
        let s = p.init(&field(|_, eta| 1.0 - eta)).unwrap();
        let (next, r) = p.step(&s.field, 0.0).unwrap();
        assert_eq!(next, s.field);
        assert!(r.signal.is_none());
    }

    #[test]
    fn stop_at_zero_is_empty() {
        let p = affine_problem(1.0, 9, 33, 1e-3);
        let s = p.init(&field(|_, eta| 1.0 - eta)).unwrap();
        let out = p.run(s, StopRule::new(0.0), &mut |_, _| {}).unwrap();
        assert!(out.series.steps.is_empty());
        assert!(out.event.is_none());
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn dirichlet_row_is_kept() {
        let p = affine_problem(-1.0, 9, 33, 1e-3);
        let s = p.init(&field(|_, eta| 1.0 - eta)).unwrap();
        let (next, _) = p.step(&s.field, 1e-3).unwrap();
        for i in 0..9 {
            assert_eq!(next.get(i, 32), 0.0);
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let model = OuterFlowModel::new(OuterFlowKind::AffineSteady { intercept: 2.0, slope: -1.0 }, 1.0, 1.0).unwrap();
        let grid = CroccoGrid::new(9, 33, 1.0).unwrap();
        assert!(matches!(CroccoProblem::new(grid, model, field(|_, e| 1.0 - e), 0.1), Err(Error::Grid(_))));
    }
}
