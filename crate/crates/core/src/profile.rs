//! Evaluable fields shared by scenarios and solvers.

use std::sync::Arc;

/// A scalar field of two real arguments, e.g. `u0(x, y)`, `u1(t, y)`,
/// `w0(xi, eta)` or `w1(tau, eta)`.
pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn field<F>(f: F) -> Field
where
    F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}
