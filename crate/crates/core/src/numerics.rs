//! Small numerical kernels: tridiagonal solves, monotone cubic interpolation
//! and composite trapezoid sums.

use crate::error::{Error, Result};

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[0]` and `upper[n - 1]` are ignored. `rhs` is overwritten with the
/// solution; `scratch` must have the same length as `rhs`.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n && scratch.len() == n);
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularPivot(0));
    }
    scratch[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for k in 1..n {
        pivot = diag[k] - lower[k] * scratch[k - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularPivot(k));
        }
        scratch[k] = upper[k] / pivot;
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / pivot;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= scratch[k] * rhs[k + 1];
    }
    Ok(())
}

/// Max-norm residual of a tridiagonal system for a candidate solution.
pub fn tridiagonal_residual(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64], rhs: &[f64]) -> f64 {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut r = diag[k] * x[k] - rhs[k];
            if k > 0 {
                r += lower[k] * x[k - 1];
            }
            if k + 1 < n {
                r += upper[k] * x[k + 1];
            }
            r.abs()
        })
        .fold(0.0, f64::max)
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    /// Builds the interpolant. `x` must be strictly increasing with at least
    /// two knots.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Data("interpolation needs at least two matching knots".into()));
        }
        if let Some(k) = x.windows(2).position(|p| !(p[1] > p[0])) {
            return Err(Error::Monotonicity { index: k + 1, value: x[k + 1] });
        }
        let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope[0] = delta[0];
            slope[1] = delta[0];
            return Ok(Self { x, y, slope });
        }
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slope[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        slope[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        slope[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(Self { x, y, slope })
    }

    /// Evaluates the interpolant; arguments outside the knot range are
    /// clamped to the end knots.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|&v| v <= t) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.slope[k] + h01 * self.y[k + 1] + h11 * h * self.slope[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Composite trapezoid sum of equally spaced samples, using every `stride`-th
/// sample. `(values.len() - 1)` must be divisible by `stride`.
pub fn trapezoid_uniform(values: &[f64], h: f64, stride: usize) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let last = n - 1;
    let inner: f64 = (stride..last).step_by(stride).map(|k| values[k]).sum();
    h * stride as f64 * (0.5 * (values[0] + values[last]) + inner)
}

/// Trapezoid sum on uniform samples with one Richardson step.
///
/// Returns `(value, error_estimate)`; when the interval count is odd no
/// coarse level exists and the plain sum is returned with no estimate.
pub fn trapezoid_richardson(values: &[f64], h: f64) -> (f64, Option<f64>) {
    let fine = trapezoid_uniform(values, h, 1);
    let n = values.len();
    if n >= 3 && (n - 1).is_multiple_of(2) {
        let coarse = trapezoid_uniform(values, h, 2);
        ((4.0 * fine - coarse) / 3.0, Some((fine - coarse).abs() / 3.0))
    } else {
        (fine, None)
    }
}

/// Composite trapezoid sum on arbitrary ordered nodes.
pub fn trapezoid_nodes(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thomas_matches_dense_solution() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, 2.0, -1.0, 0.5];
        let mut rhs: Vec<f64> = (0..4)
            .map(|k| {
                let mut r = diag[k] * x[k];
                if k > 0 {
                    r += lower[k] * x[k - 1];
                }
                if k < 3 {
                    r += upper[k] * x[k + 1];
                }
                r
            })
            .collect();
        let b = rhs.clone();
        let mut scratch = vec![0.0; 4];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(rhs[k], x[k], epsilon = 1e-14);
        }
        assert!(tridiagonal_residual(&lower, &diag, &upper, &rhs, &b) < 1e-13);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut rhs = vec![1.0, 1.0];
        let mut scratch = vec![0.0; 2];
        let err = solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut rhs, &mut scratch);
        assert_eq!(err, Err(Error::SingularPivot(0)));
    }

    #[test]
    fn pchip_reproduces_lines_and_keeps_monotone_data_monotone() {
        let x: Vec<f64> = (0..7).map(|k| (k as f64).powi(2) / 36.0).collect();
        let line: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let p = Pchip::new(x.clone(), line).unwrap();
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert_abs_diff_eq!(p.eval(t), 3.0 - 2.0 * t, epsilon = 1e-13);
        }
        let step: Vec<f64> = vec![0.0, 0.0, 0.1, 0.9, 1.0, 1.0, 1.0];
        let q = Pchip::new(x, step).unwrap();
        let mut prev = q.eval(0.0);
        for k in 1..=400 {
            let v = q.eval(k as f64 / 400.0);
            assert!(v >= prev - 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn richardson_trapezoid_is_fourth_order_on_smooth_data() {
        let n = 65;
        let h = 1.0 / (n - 1) as f64;
        let v: Vec<f64> = (0..n).map(|k| (k as f64 * h).exp()).collect();
        let (value, est) = trapezoid_richardson(&v, h);
        assert_abs_diff_eq!(value, std::f64::consts::E - 1.0, epsilon = 1e-9);
        assert!(est.unwrap() > 0.0);
        let x: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        assert_abs_diff_eq!(trapezoid_nodes(&x, &v), trapezoid_uniform(&v, h, 1), epsilon = 1e-14);
    }
}
