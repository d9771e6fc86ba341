use serde::Serialize;

use super::constants::LyapunovConstants;
use crate::error::{Error, Result};

/// Trajectories reaching this value count as blown up.
pub const BLOWUP_LEVEL: f64 = 1e6;

const MAX_STEPS: usize = 2_000_000;

/// `G' = cubic G^3 - linear G + forcing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonOde {
    pub cubic: f64,
    pub linear: f64,
    pub forcing: f64,
}

impl ComparisonOde {
    /// `lambda2 G^3 - (3/4) G + lambda0 - lambda1`.
    pub fn from_constants(k: &LyapunovConstants) -> Self {
        Self { cubic: k.lambda2, linear: 0.75, forcing: k.lambda0 - k.lambda1 }
    }

    pub fn rhs(&self, g: f64) -> f64 {
        self.cubic * g * g * g - self.linear * g + self.forcing
    }

    fn slope(&self, g: f64) -> f64 {
        3.0 * self.cubic * g * g - self.linear
    }

    /// Largest real root of the right-hand side (requires `cubic > 0`).
    pub fn largest_root(&self) -> f64 {
        let c = self.cubic;
        let bound = 1.0 + (self.linear.abs().max(self.forcing.abs())) / c;
        let (a, b) = if self.linear > 0.0 {
            let turn = (self.linear / (3.0 * c)).sqrt();
            if self.rhs(turn) <= 0.0 {
                (turn, bound)
            } else {
                (-bound, -turn)
            }
        } else {
            (-bound, bound)
        };
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.rhs(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Solution of the comparison ODE from one initial value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeBound {
    pub g0: f64,
    pub blowup_time: Option<f64>,
    pub trajectory: Vec<(f64, f64)>,
    pub c_star: Option<f64>,
}

/// Integrates the comparison ODE with RK4 on `[0, horizon]`, the step being
/// limited by the local linearisation rate and a 1% relative change of `G`.
/// Blow-up is declared when `G` reaches [`BLOWUP_LEVEL`].
pub fn comparison_ode(g0: f64, ode: &ComparisonOde, horizon: f64) -> OdeBound {
    let root = if ode.cubic > 0.0 { Some(ode.largest_root()) } else { None };
    let mut t = 0.0;
    let mut g = g0;
    let mut trajectory = vec![(t, g)];
    let mut blowup_time = None;
    for _ in 0..MAX_STEPS {
        if g >= BLOWUP_LEVEL {
            blowup_time = Some(t);
            break;
        }
        if t >= horizon || !g.is_finite() {
            break;
        }
        let f = ode.rhs(g);
        if root.is_some_and(|r| g <= r) && f.abs() <= 1e-13 * (1.0 + g.abs()) {
            break;
        }
        let mut h = horizon - t;
        let fp = ode.slope(g).abs();
        if fp > 0.0 {
            h = h.min(0.05 / fp);
        }
        if f != 0.0 {
            h = h.min(0.01 * g.abs().max(1.0) / f.abs());
        }
        let k1 = ode.rhs(g);
        let k2 = ode.rhs(g + 0.5 * h * k1);
        let k3 = ode.rhs(g + 0.5 * h * k2);
        let k4 = ode.rhs(g + h * k3);
        g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = if horizon - t - h <= 1e-15 * horizon { horizon } else { t + h };
        trajectory.push((t, g));
    }
    if blowup_time.is_none() && g >= BLOWUP_LEVEL {
        blowup_time = Some(t);
    }
    OdeBound { g0, blowup_time, trajectory, c_star: None }
}

fn blows_up(g0: f64, ode: &ComparisonOde, horizon: f64) -> bool {
    comparison_ode(g0, ode, horizon).blowup_time.is_some_and(|t| t <= horizon)
}

/// Result of the threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    /// Smallest initial value found to blow up before the horizon.
    pub c_star: f64,
    pub largest_root: f64,
    /// Final bracket `[lower, c_star]`.
    pub lower: f64,
    pub iterations: u32,
}

/// Smallest `G0` whose comparison trajectory blows up before `horizon`,
/// by bisection above the largest equilibrium.
pub fn critical_threshold(ode: &ComparisonOde, horizon: f64) -> Result<ThresholdReport> {
    if !(ode.cubic > 0.0 && ode.cubic.is_finite() && ode.linear.is_finite() && ode.forcing.is_finite()) {
        return Err(Error::Precondition(format!("cubic coefficient must be positive and finite, got {}", ode.cubic)));
    }
    if !(horizon > 0.0) {
        return Err(Error::Precondition(format!("horizon must be positive, got {horizon}")));
    }
    let root = ode.largest_root();
    let mut lo = root.max(0.0);
    if root <= 0.0 && blows_up(0.0, ode, horizon) {
        return Ok(ThresholdReport { c_star: 0.0, largest_root: root, lower: 0.0, iterations: 0 });
    }
    let mut hi = 10.0 * lo.max(1.0);
    let mut doublings = 0;
    while !blows_up(hi, ode, horizon) {
        doublings += 1;
        if doublings > 200 {
            return Err(Error::ThresholdUnreachable { upper: hi });
        }
        lo = hi;
        hi *= 2.0;
    }
    let iterations = 60;
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if blows_up(mid, ode, horizon) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdReport { c_star: hi, largest_root: root, lower: lo, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const AFFINE_LAMBDA1: f64 = 0.931_370_849_898_476; // (4 sqrt 2 - 1) / 5

    #[test]
    fn pure_cubic_blows_up_at_one_half() {
        let ode = ComparisonOde { cubic: 1.0, linear: 0.0, forcing: 0.0 };
        let b = comparison_ode(1.0, &ode, 1.0);
        assert_abs_diff_eq!(b.blowup_time.unwrap(), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn below_equilibrium_decays() {
        let ode = ComparisonOde { cubic: 25.0 / 32.0, linear: 0.75, forcing: 0.0 };
        assert_abs_diff_eq!(ode.largest_root(), 0.96f64.sqrt(), epsilon = 1e-12);
        let b = comparison_ode(0.5, &ode, 10.0);
        assert!(b.blowup_time.is_none());
        assert!(b.trajectory.windows(2).all(|p| p[1].1 < p[0].1));
    }

    #[test]
    fn above_largest_root_blows_up() {
        let ode = ComparisonOde { cubic: 25.0 / 32.0, linear: 0.75, forcing: -AFFINE_LAMBDA1 };
        let r = ode.largest_root();
        assert!(ode.rhs(r).abs() < 1e-12);
        assert!(comparison_ode(r * 1.01, &ode, 1e3).blowup_time.is_some());
        assert!(comparison_ode(r * 0.99, &ode, 1e3).blowup_time.is_none());
    }

    #[test]
    fn infinite_horizon_threshold_is_the_equilibrium() {
        let ode = ComparisonOde { cubic: 25.0 / 32.0, linear: 0.75, forcing: 0.0 };
        let t = critical_threshold(&ode, 1e3).unwrap();
        assert_abs_diff_eq!(t.c_star, 0.96f64.sqrt(), epsilon = 1e-6);
        assert!(t.c_star >= 0.96f64.sqrt());
    }

    #[test]
    fn short_horizon_needs_large_threshold_and_larger_cubic_lowers_it() {
        let ode = ComparisonOde { cubic: 25.0 / 32.0, linear: 0.75, forcing: 0.0 };
        let small = critical_threshold(&ode, 1e-6).unwrap().c_star;
        assert!(small > 500.0, "{small}");
        let base = critical_threshold(&ode, 1.0).unwrap().c_star;
        let doubled = ComparisonOde { cubic: 2.0 * ode.cubic, ..ode };
        assert!(critical_threshold(&doubled, 1.0).unwrap().c_star < base);
    }
}
