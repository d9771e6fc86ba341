//! Unsteady two-dimensional Prandtl boundary-layer solvers.
//!
//! Two independent routes to the wall shear are provided: a finite-difference
//! solver in physical variables `(t, x, y)` and one in Crocco variables
//! `(tau, xi, eta)`. The [`diagnostics`] module evaluates the Lyapunov
//! functional, the comparison-ODE bound and the runtime checks that go with
//! the back-flow (vanishing wall shear) analysis.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crocco;
pub mod crocco_transform;
pub mod diagnostics;
pub mod error;
pub mod numerics;
pub mod outer_flow;
pub mod physical;
pub mod profile;
pub mod scenarios;
pub mod series;

pub use error::{Error, Result};
