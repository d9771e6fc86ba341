//! Lyapunov functional, comparison-ODE bound and runtime checks.

mod checks;
mod condition;
mod constants;
mod lyapunov;
mod ode;

pub use checks::{
    check_interior_positivity, check_lyapunov_inequality, check_shear_bound, growth_rate, interior_minimum,
    InequalityReport, InteriorReport, ShearBoundReport,
};
pub use condition::{condition_integral, ConditionValue};
pub use constants::{c0_value, c1_value, c2_value, constants, LyapunovConstants};
pub use lyapunov::{first_cell_integral, lyapunov_g, lyapunov_g_values, LyapunovValue};
pub use ode::{comparison_ode, critical_threshold, ComparisonOde, OdeBound, ThresholdReport, BLOWUP_LEVEL};
