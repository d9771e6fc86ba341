//! Runtime checks of the growth bound, the wall-first criticality and the
//! discrete Lyapunov inequality. Violations are reported, not raised.

use serde::Serialize;

use super::ode::ComparisonOde;
use crate::crocco::LevelSummary;
use crate::crocco_transform::{Coefficients, CroccoGrid};
use crate::error::{Error, Result};
use crate::physical::{shear_profile, PhysicalGrid, VelocityField};

const ETA_SAMPLES: usize = 101;

/// `N = max(0, sup(-2B))` over the given times, the grid columns and a
/// uniform set of `eta` samples.
pub fn growth_rate(model: &crate::outer_flow::OuterFlowModel, grid: &CroccoGrid, taus: &[f64]) -> f64 {
    let mut n: f64 = 0.0;
    for &tau in taus {
        for i in 0..grid.n_xi() {
            let s = model.sample(tau, grid.xi(i));
            for k in 0..ETA_SAMPLES {
                let eta = k as f64 / (ETA_SAMPLES - 1) as f64;
                n = n.max(-2.0 * Coefficients::from_sample(&s, eta).b);
            }
        }
    }
    n + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShearBoundReport {
    pub growth_rate: f64,
    /// `max(sup w0^2, sup over history of the inflow w1^2)`.
    pub reference: f64,
    /// Largest `exp(-N tau) sup w^2` over levels after the first.
    pub worst: f64,
    /// `1 - worst / ((1 + allowance) reference)`; 1 for a single level.
    pub margin: f64,
    pub passed: bool,
    /// Margin of each level against the same reference; 1 at the first level.
    #[serde(skip)]
    pub level_margins: Vec<f64>,
}

/// Checks `exp(-N tau) sup w^2 <= (1 + allowance) max(sup w0^2, sup w1^2)`
/// over a run history.
pub fn check_shear_bound(
    history: &[LevelSummary],
    model: &crate::outer_flow::OuterFlowModel,
    grid: &CroccoGrid,
    allowance: f64,
) -> Result<ShearBoundReport> {
    let first = history.first().ok_or_else(|| Error::Precondition("empty level history".into()))?;
    let taus: Vec<f64> = history.iter().map(|h| h.tau).collect();
    let n = growth_rate(model, grid, &taus);
    let reference = history.iter().fold(first.max_w_sq, |m, h| m.max(h.inflow_max_w_sq));
    let level_margin = |h: &LevelSummary| {
        let scaled = (-n * (h.tau - first.tau)).exp() * h.max_w_sq;
        if reference > 0.0 {
            1.0 - scaled / ((1.0 + allowance) * reference)
        } else if scaled <= 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    };
    let level_margins: Vec<f64> = std::iter::once(1.0).chain(history[1..].iter().map(level_margin)).collect();
    let worst = history[1..].iter().map(|h| (-n * (h.tau - first.tau)).exp() * h.max_w_sq).fold(0.0, f64::max);
    let margin = level_margins[1..].iter().copied().fold(1.0, f64::min);
    Ok(ShearBoundReport { growth_rate: n, reference, worst, margin, passed: margin >= 0.0, level_margins })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorReport {
    pub t: f64,
    pub column: usize,
    pub x: f64,
    pub wall_shear: f64,
    pub initial_wall_shear: f64,
    /// Smallest `du/dy` over interior nodes with `0 < y <= Y_max / 2`.
    pub interior_min: f64,
    pub interior_argmin_y: f64,
    /// Node index of the smallest `du/dy` over the whole column.
    pub global_argmin: usize,
    /// Wall shear below half of its initial value and below the initial
    /// interior minimum of the column.
    pub retarded: bool,
    pub passed: bool,
    pub note: String,
}

/// Smallest `du/dy` over interior nodes with `0 < y <= Y_max / 2`, and its node.
pub fn interior_minimum(column: &[f64], grid: &PhysicalGrid) -> (usize, f64) {
    let y = grid.y();
    let shear = shear_profile(column, y);
    let half = 0.5 * y[y.len() - 1];
    (1..y.len()).take_while(|&j| y[j] <= half).map(|j| (j, shear[j])).fold((0, f64::INFINITY), |(bj, bv), (j, v)| {
        if v < bv {
            (j, v)
        } else {
            (bj, bv)
        }
    })
}

/// Checks that `du/dy` stays positive away from the wall and, once the wall
/// shear has dropped below half its initial value and below the initial
/// interior minimum, that the interior minimum exceeds the wall value. With
/// `at_event` the wall node must also be the global minimiser.
///
/// `initial` is `(wall shear, interior minimum)` of the column at `t = 0`.
/// The far-field tail of a decaying profile can sit below half the initial
/// wall shear from the start, so the wall is only compared once it is
/// retarded below that tail.
pub fn check_interior_positivity(
    state: &VelocityField,
    grid: &PhysicalGrid,
    column: usize,
    initial: (f64, f64),
    at_event: bool,
) -> InteriorReport {
    let (initial_wall_shear, initial_interior_min) = initial;
    let y = grid.y();
    let shear = shear_profile(state.column(column), y);
    let (j_min, interior_min) = interior_minimum(state.column(column), grid);
    let global_argmin = crate::series::argmin(&shear).0;
    let wall = shear[0];
    let retarded = wall < 0.5 * initial_wall_shear && wall < initial_interior_min;
    let mut failures = Vec::new();
    if !(interior_min > 0.0) {
        failures.push(format!("interior du/dy reaches {interior_min:.3e} at y = {:.4}", y[j_min]));
    }
    if retarded && !(interior_min > wall) {
        failures.push(format!("interior minimum {interior_min:.3e} does not exceed the wall value {wall:.3e}"));
    }
    if at_event && global_argmin != 0 {
        failures.push(format!("global minimiser at node {global_argmin}, not the wall"));
    }
    let note = if !failures.is_empty() {
        failures.join("; ")
    } else if global_argmin == 0 {
        "wall node is the minimiser".to_string()
    } else {
        "pre-retardation phase: the wall is not the minimiser".to_string()
    };
    InteriorReport {
        t: state.t,
        column,
        x: grid.x()[column],
        wall_shear: wall,
        initial_wall_shear,
        interior_min,
        interior_argmin_y: y[j_min],
        global_argmin,
        retarded,
        passed: failures.is_empty(),
        note,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    /// `(tau, margin)` per checked step; the margin is
    /// `dG/dtau - rhs(G) + tol` and must be non-negative.
    pub margins: Vec<(f64, f64)>,
    pub checked: usize,
    pub passed_steps: usize,
    pub pass_fraction: f64,
    /// Step with the most negative margin.
    pub worst: Option<(f64, f64)>,
    pub passed: bool,
}

/// Checks the forward difference of `G` against the comparison right-hand
/// side with tolerance `tol_fraction * max(1, cubic G^3)` at each step,
/// leaving out the final `exclude_last` steps and steps with infinite `G`.
pub fn check_lyapunov_inequality(
    series: &[(f64, f64)],
    ode: &ComparisonOde,
    tol_fraction: f64,
    exclude_last: usize,
) -> InequalityReport {
    let steps = series.len().saturating_sub(1).saturating_sub(exclude_last);
    let margins: Vec<(f64, f64)> = series
        .windows(2)
        .take(steps)
        .filter(|p| p[0].1.is_finite() && p[1].1.is_finite() && p[1].0 > p[0].0)
        .map(|p| {
            let ((t0, g0), (t1, g1)) = (p[0], p[1]);
            let tol = tol_fraction * (ode.cubic * g0.powi(3)).max(1.0);
            (t0, (g1 - g0) / (t1 - t0) - ode.rhs(g0) + tol)
        })
        .collect();
    let checked = margins.len();
    let passed_steps = margins.iter().filter(|m| m.1 >= 0.0).count();
    let worst = margins.iter().copied().fold(None, |w: Option<(f64, f64)>, m| match w {
        Some(b) if b.1 <= m.1 => Some(b),
        _ => Some(m),
    });
    InequalityReport {
        margins,
        checked,
        passed_steps,
        pass_fraction: if checked == 0 { 1.0 } else { passed_steps as f64 / checked as f64 },
        worst,
        passed: passed_steps == checked,
    }
}
