//! Prandtl equations in physical variables on a truncated, wall-stretched
//! grid: implicit diffusion, explicit upwind advection and forcing, `v` from
//! continuity.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{solve_tridiagonal, trapezoid_nodes, trapezoid_uniform, tridiagonal_residual};
use crate::outer_flow::OuterFlowModel;
use crate::profile::Field;
use crate::series::{argmin, BackFlowEvent, DiagnosticSeries, Source, StepRecord, StepReport, StopRule};

/// Grid on `[0, L] x [0, Y_max]`, uniform in `x` and stretched towards the
/// wall in `y`: `y_j = Y_max s^2 / (stretch + (1 - stretch) s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalGrid {
    pub n_x: usize,
    pub n_y: usize,
    pub length: f64,
    pub y_max: f64,
    pub stretch: f64,
    pub dt: f64,
    #[serde(skip)]
    x: Vec<f64>,
    #[serde(skip)]
    y: Vec<f64>,
}

impl PhysicalGrid {
    pub fn new(n_x: usize, n_y: usize, length: f64, y_max: f64, stretch: f64, dt: f64) -> Result<Self> {
        if n_x < 3 || n_y < 4 {
            return Err(Error::Grid(format!("physical grid too small: {n_x} x {n_y}")));
        }
        if !(length > 0.0 && y_max > 0.0) {
            return Err(Error::Grid("length and y_max must be positive".into()));
        }
        if !(stretch > 0.0 && stretch <= 1.0) {
            return Err(Error::Grid(format!("stretch must lie in (0, 1], got {stretch}")));
        }
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::Grid(format!("time step must be non-negative, got {dt}")));
        }
        let x = (0..n_x).map(|i| if i + 1 == n_x { length } else { length * i as f64 / (n_x - 1) as f64 }).collect();
        let y = (0..n_y)
            .map(|j| {
                if j + 1 == n_y {
                    return y_max;
                }
                let s = j as f64 / (n_y - 1) as f64;
                y_max * s * s / (stretch + (1.0 - stretch) * s)
            })
            .collect();
        Ok(Self { n_x, n_y, length, y_max, stretch, dt, x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.n_x - 1) as f64
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.n_x, self.n_y, self.length, self.y_max, self.stretch, dt)
    }
}

/// Velocity at one time level, stored column by column
/// (`index = i * n_y + j`).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub t: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VelocityField {
    pub fn column(&self, i: usize) -> &[f64] {
        &self.u[i * self.n_y..(i + 1) * self.n_y]
    }
}

/// Grid, outer flow and inflow data of one physical-variable run.
#[derive(Clone)]
pub struct PhysicalProblem {
    pub grid: PhysicalGrid,
    pub model: OuterFlowModel,
    /// Inflow profile `u1(t, y)` held at `x = 0`.
    pub inflow: Field,
    pub far_tolerance: f64,
}

impl PhysicalProblem {
    pub fn new(grid: PhysicalGrid, model: OuterFlowModel, inflow: Field, far_tolerance: f64) -> Result<Self> {
        if (grid.length - model.length()).abs() > 1e-12 * model.length() {
            return Err(Error::Grid("grid length differs from the model length".into()));
        }
        let limit = cfl_limit(&grid, &model);
        if grid.dt > limit {
            return Err(Error::Grid(format!("time step {} exceeds the advective limit {limit}", grid.dt)));
        }
        if !(far_tolerance > 0.0) {
            return Err(Error::Grid("far-field tolerance must be positive".into()));
        }
        Ok(Self { grid, model, inflow, far_tolerance })
    }

    /// Samples `u0` and checks no-slip, positivity, monotonicity in `y` and
    /// far-field matching.
    pub fn init(&self, u0: &Field) -> Result<VelocityField> {
        let g = &self.grid;
        let mut u = vec![0.0; g.n_x * g.n_y];
        for (i, &x) in g.x.iter().enumerate() {
            let ue = self.model.ue(0.0, x)?;
            let col = &mut u[i * g.n_y..(i + 1) * g.n_y];
            for (c, &y) in col.iter_mut().zip(&g.y) {
                *c = u0(x, y);
            }
            if col[0].abs() > 1e-12 * ue {
                return Err(Error::Data(format!("u0({x}, 0) = {} violates no-slip", col[0])));
            }
            col[0] = 0.0;
            if let Some(j) = (1..g.n_y).find(|&j| !(col[j] > 0.0)) {
                return Err(Error::Data(format!("u0 not positive at node ({i}, {j}): {}", col[j])));
            }
            if let Some(j) = (1..g.n_y).find(|&j| !(col[j] >= col[j - 1])) {
                return Err(Error::Data(format!(
                    "u0 decreasing in y at node ({i}, {j}): {} after {}",
                    col[j],
                    col[j - 1]
                )));
            }
            let gap = (col[g.n_y - 1] - ue).abs();
            if gap > self.far_tolerance {
                return Err(Error::Truncation { ratio: col[g.n_y - 1] / ue, tolerance: self.far_tolerance });
            }
        }
        let v = compute_v(&u, g);
        Ok(VelocityField { t: 0.0, n_x: g.n_x, n_y: g.n_y, u, v })
    }

    /// Advances by `dt` (which may be smaller than `grid.dt`).
    pub fn step(&self, state: &VelocityField, dt: f64) -> Result<(VelocityField, StepReport)> {
        let g = &self.grid;
        let (nx, ny) = (g.n_x, g.n_y);
        let t = state.t;
        let t_new = t + dt;
        if dt == 0.0 {
            let shear = wall_shear(state, g);
            let report = StepReport {
                t_new: t,
                max_residual: 0.0,
                min_wall_shear: argmin(&shear).1,
                monotone_flag: is_monotone(state),
            };
            return Ok((state.clone(), report));
        }
        let dx = g.dx();
        let y = &g.y;
        let (lo, hi) = diffusion_weights(y);
        let mut u_new = vec![0.0; nx * ny];
        let residuals: Vec<Result<f64>> = u_new
            .par_chunks_mut(ny)
            .enumerate()
            .map(|(i, out)| {
                let x = g.x[i];
                if i == 0 {
                    for (o, &yj) in out.iter_mut().zip(y) {
                        *o = (self.inflow)(t_new, yj);
                    }
                    out[0] = 0.0;
                    return Ok(0.0);
                }
                let grad_p = self.model.sample(t, x).pressure_gradient();
                let ue_new = self.model.sample(t_new, x).ue;
                let col = state.column(i);
                let left = state.column(i - 1);
                let right = if i + 1 < nx { Some(state.column(i + 1)) } else { None };
                let vcol = &state.v[i * ny..(i + 1) * ny];
                let mut sub = vec![0.0; ny];
                let mut diag = vec![1.0; ny];
                let mut sup = vec![0.0; ny];
                let mut rhs = vec![0.0; ny];
                for j in 1..ny - 1 {
                    let uj = col[j];
                    let ux = match right {
                        Some(r) if uj < 0.0 => (r[j] - uj) / dx,
                        _ => (uj - left[j]) / dx,
                    };
                    let vj = vcol[j];
                    let uy = if vj > 0.0 {
                        (uj - col[j - 1]) / (y[j] - y[j - 1])
                    } else {
                        (col[j + 1] - uj) / (y[j + 1] - y[j])
                    };
                    rhs[j] = uj - dt * (uj * ux + vj * uy + grad_p);
                    sub[j] = -dt * lo[j];
                    sup[j] = -dt * hi[j];
                    diag[j] = 1.0 + dt * (lo[j] + hi[j]);
                }
                rhs[0] = 0.0;
                rhs[ny - 1] = ue_new;
                let b = rhs.clone();
                let mut scratch = vec![0.0; ny];
                solve_tridiagonal(&sub, &diag, &sup, &mut rhs, &mut scratch)?;
                if let Some(j) = rhs.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Instability { i, j, t: t_new });
                }
                let res = tridiagonal_residual(&sub, &diag, &sup, &rhs, &b);
                out.copy_from_slice(&rhs);
                Ok(res)
            })
            .collect();
        let mut max_residual: f64 = 0.0;
        for r in residuals {
            max_residual = max_residual.max(r?);
        }
        let v = compute_v(&u_new, g);
        let next = VelocityField { t: t_new, n_x: nx, n_y: ny, u: u_new, v };
        let shear = wall_shear(&next, g);
        let report =
            StepReport { t_new, max_residual, min_wall_shear: argmin(&shear).1, monotone_flag: is_monotone(&next) };
        Ok((next, report))
    }

    /// Steps until `stop.t_end` or until the wall shear first becomes
    /// non-positive; the crossing is then bracketed by repeated halving of
    /// the step from the last positive level.
    pub fn run(
        &self,
        initial: VelocityField,
        stop: StopRule,
        observer: &mut dyn FnMut(usize, &VelocityField),
    ) -> Result<PhysicalOutcome> {
        let g = &self.grid;
        let record = |s: &VelocityField| -> StepRecord {
            let shear = wall_shear(s, g);
            let (i, m) = argmin(&shear);
            StepRecord::new(s.t, m, g.x[i], lyapunov_integral(s, g))
        };
        let first = record(&initial);
        if stop.detect_backflow && first.min_wall_shear <= 0.0 {
            return Err(Error::Data("wall shear is not positive at the initial time".into()));
        }
        let mut series = DiagnosticSeries::new(Source::Physical, first);
        observer(0, &initial);
        let mut state = initial;
        let mut steps = 0usize;
        let slack = 1e-9 * g.dt.max(f64::MIN_POSITIVE);
        while g.dt > 0.0 && state.t < stop.t_end - slack {
            let dt = g.dt.min(stop.t_end - state.t);
            let (next, report) = self.step(&state, dt)?;
            steps += 1;
            if stop.detect_backflow && report.min_wall_shear <= 0.0 {
                let (lo, hi) = self.bisect(state, next, dt, stop.bisections)?;
                let event = self.event_at(&hi);
                series.steps.push(record(&hi));
                observer(steps, &hi);
                return Ok(PhysicalOutcome { series, event: Some(event), last_positive: Some(lo), final_state: hi });
            }
            series.steps.push(record(&next));
            observer(steps, &next);
            state = next;
        }
        Ok(PhysicalOutcome { series, event: None, last_positive: None, final_state: state })
    }

    fn bisect(
        &self,
        mut lo: VelocityField,
        mut hi: VelocityField,
        dt: f64,
        halvings: u32,
    ) -> Result<(VelocityField, VelocityField)> {
        let mut h = dt;
        for _ in 0..halvings {
            h *= 0.5;
            let (mid, report) = self.step(&lo, h)?;
            if report.min_wall_shear <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((lo, hi))
    }

    fn event_at(&self, state: &VelocityField) -> BackFlowEvent {
        let g = &self.grid;
        let (i, _) = argmin(&wall_shear(state, g));
        BackFlowEvent {
            t_star: state.t,
            x_star: g.x[i],
            wall_curvature: wall_curvature(state, g)[i],
            source: Source::Physical,
        }
    }
}

/// Result of [`PhysicalProblem::run`].
#[derive(Debug, Clone)]
pub struct PhysicalOutcome {
    pub series: DiagnosticSeries,
    pub event: Option<BackFlowEvent>,
    /// Last level with positive wall shear when an event was bracketed.
    pub last_positive: Option<VelocityField>,
    pub final_state: VelocityField,
}

/// Largest stable advective step `0.5 dx / max U_e`.
pub fn cfl_limit(grid: &PhysicalGrid, model: &OuterFlowModel) -> f64 {
    0.5 * grid.dx() / model.max_ue()
}

fn diffusion_weights(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for j in 1..n - 1 {
        let hm = y[j] - y[j - 1];
        let hp = y[j + 1] - y[j];
        lo[j] = 2.0 / (hm * (hm + hp));
        hi[j] = 2.0 / (hp * (hm + hp));
    }
    (lo, hi)
}

fn is_monotone(state: &VelocityField) -> bool {
    state.u.chunks(state.n_y).all(|c| c.windows(2).all(|p| p[1] >= p[0]))
}

/// `v = -integral_0^y du/dx dy'`, trapezoid in `y`; `du/dx` centred inside
/// and second-order one-sided at `x = 0` and `x = L`.
pub fn compute_v(u: &[f64], grid: &PhysicalGrid) -> Vec<f64> {
    let (nx, ny) = (grid.n_x, grid.n_y);
    let dx = grid.dx();
    let y = &grid.y;
    let mut v = vec![0.0; nx * ny];
    v.par_chunks_mut(ny).enumerate().for_each(|(i, out)| {
        let col = |k: usize, j: usize| u[k * ny + j];
        let ux = |j: usize| -> f64 {
            if i == 0 {
                (-3.0 * col(0, j) + 4.0 * col(1, j) - col(2, j)) / (2.0 * dx)
            } else if i + 1 == nx {
                (3.0 * col(i, j) - 4.0 * col(i - 1, j) + col(i - 2, j)) / (2.0 * dx)
            } else {
                (col(i + 1, j) - col(i - 1, j)) / (2.0 * dx)
            }
        };
        let mut prev = ux(0);
        out[0] = 0.0;
        for j in 1..ny {
            let cur = ux(j);
            out[j] = out[j - 1] - 0.5 * (prev + cur) * (y[j] - y[j - 1]);
            prev = cur;
        }
    });
    v
}

/// Wall shear `du/dy(x, 0)` from the quadratic through the wall and the
/// first two nodes.
pub fn wall_shear(state: &VelocityField, grid: &PhysicalGrid) -> Vec<f64> {
    let (y1, y2) = (grid.y[1], grid.y[2]);
    state.u.chunks(state.n_y).map(|c| (c[1] * y2 * y2 - c[2] * y1 * y1) / (y1 * y2 * (y2 - y1))).collect()
}

/// Wall curvature `d2u/dy2(x, 0)` from the same quadratic.
pub fn wall_curvature(state: &VelocityField, grid: &PhysicalGrid) -> Vec<f64> {
    let (y1, y2) = (grid.y[1], grid.y[2]);
    state.u.chunks(state.n_y).map(|c| 2.0 * (c[2] / y2 - c[1] / y1) / (y2 - y1)).collect()
}

/// `du/dy` at every node of one column: the wall formula at `j = 0`,
/// three-point centred differences inside, one-sided at the top.
pub fn shear_profile(column: &[f64], y: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut out = vec![0.0; n];
    let (y1, y2) = (y[1], y[2]);
    out[0] = (column[1] * y2 * y2 - column[2] * y1 * y1) / (y1 * y2 * (y2 - y1));
    for j in 1..n - 1 {
        let hm = y[j] - y[j - 1];
        let hp = y[j + 1] - y[j];
        out[j] = (hm * hm * column[j + 1] - hp * hp * column[j - 1] + (hp * hp - hm * hm) * column[j])
            / (hm * hp * (hm + hp));
    }
    out[n - 1] = (column[n - 1] - column[n - 2]) / (y[n - 1] - y[n - 2]);
    out
}

/// Lyapunov functional evaluated in physical variables:
/// `integral (L - x)^(3/2) u_y / sqrt(u_y^2 + u^2)` over the truncated domain.
pub fn lyapunov_integral(state: &VelocityField, grid: &PhysicalGrid) -> f64 {
    let inner: Vec<f64> = (0..grid.n_x)
        .into_par_iter()
        .map(|i| {
            let col = state.column(i);
            let uy = shear_profile(col, &grid.y);
            let f: Vec<f64> = uy
                .iter()
                .zip(col)
                .map(|(&d, &u)| {
                    let r = d.hypot(u);
                    if r == 0.0 {
                        0.0
                    } else {
                        d / r
                    }
                })
                .collect();
            (grid.length - grid.x[i]).max(0.0).powf(1.5) * trapezoid_nodes(&grid.y, &f)
        })
        .collect();
    trapezoid_uniform(&inner, grid.dx(), 1)
}
