//! The `blowup-bound` subcommand: constants, condition value and the
//! critical threshold of the comparison ODE.

use std::fmt;

use serde::Serialize;

use prandtl_core::diagnostics::{
    comparison_ode, condition_integral, constants, critical_threshold, ComparisonOde, ConditionValue,
};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub horizon: f64,
    pub c_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub scenario: String,
    pub horizon: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub ode: ComparisonOde,
    pub condition: ConditionValue,
    pub c_star: f64,
    pub largest_root: f64,
    pub verdict: &'static str,
    /// Time by which the comparison solution starting at the condition value
    /// blows up, when it does so before the horizon.
    pub blowup_time: Option<f64>,
    pub sweep: Vec<SweepPoint>,
}

impl BoundReport {
    pub fn backflow_expected(&self) -> bool {
        self.verdict == "backflow-expected"
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario        {}", self.scenario)?;
        writeln!(f, "horizon T       {:.6e}", self.horizon)?;
        writeln!(f, "lambda0         {:.6e}", self.lambda0)?;
        writeln!(f, "lambda1         {:.6e}", self.lambda1)?;
        writeln!(f, "lambda2         {:.6e}", self.lambda2)?;
        writeln!(
            f,
            "comparison ODE  dG/dt = {:.6e} G^3 - {:.6e} G {} {:.6e}",
            self.ode.cubic,
            self.ode.linear,
            if self.ode.forcing < 0.0 { '-' } else { '+' },
            self.ode.forcing.abs()
        )?;
        let err = self.condition.error_estimate.map_or(String::new(), |e| format!(" (quadrature error ~ {e:.1e})"));
        writeln!(f, "condition value {:.6e}{err}", self.condition.total())?;
        writeln!(f, "largest root    {:.6e}", self.largest_root)?;
        writeln!(f, "C*              {:.6e}", self.c_star)?;
        if let Some(t) = self.blowup_time {
            writeln!(f, "bound blow-up   t <= {t:.6e}")?;
        }
        for p in &self.sweep {
            writeln!(f, "C*(T = {:.6e}) = {:.6e}", p.horizon, p.c_star)?;
        }
        write!(f, "verdict         {}", self.verdict)
    }
}

/// Evaluates the bound for the configured scenario. Fails with a
/// precondition error unless the pressure gradient is adverse everywhere.
pub fn blowup_bound(config: &RunConfig) -> anyhow::Result<BoundReport> {
    let s = config.scenario()?;
    let k = constants(&s.model, &s.w1, 65)?;
    let ode = s.prediction.map_or_else(|| ComparisonOde::from_constants(&k), |p| p.ode);
    let d = s.defaults;
    let condition = condition_integral(&s.u0, &s.u0_y, &s.model, d.cond_y_cut, d.cond_n_x, d.cond_n_y)?;
    let horizon = s.model.horizon();
    let threshold = critical_threshold(&ode, horizon)?;
    let value = condition.total();
    let blowup_time = comparison_ode(value, &ode, horizon).blowup_time.filter(|t| *t <= horizon);
    let sweep = config
        .bound_t_sweep
        .iter()
        .map(|&h| Ok(SweepPoint { horizon: h, c_star: critical_threshold(&ode, h)?.c_star }))
        .collect::<prandtl_core::Result<_>>()?;
    Ok(BoundReport {
        scenario: s.name,
        horizon,
        lambda0: k.lambda0,
        lambda1: k.lambda1,
        lambda2: k.lambda2,
        ode,
        condition,
        c_star: threshold.c_star,
        largest_root: threshold.largest_root,
        verdict: if value >= threshold.c_star { "backflow-expected" } else { "condition not met" },
        blowup_time,
        sweep,
    })
}
