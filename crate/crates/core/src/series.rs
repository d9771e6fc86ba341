//! Per-step diagnostic records and the back-flow event shared by both solvers.

use serde::Serialize;

/// Which solver produced a record or event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Physical,
    Crocco,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Physical => "physical",
            Source::Crocco => "crocco",
        }
    }
}

/// One diagnostic record. Field order is the serialised order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub min_wall_shear: f64,
    pub argmin_x: f64,
    #[serde(rename = "G_value")]
    pub g_value: f64,
    #[serde(rename = "lemma21_margin")]
    pub shear_bound_margin: Option<f64>,
    pub inequality_margin: Option<f64>,
}

impl StepRecord {
    pub fn new(t: f64, min_wall_shear: f64, argmin_x: f64, g_value: f64) -> Self {
        Self { t, min_wall_shear, argmin_x, g_value, shear_bound_margin: None, inequality_margin: None }
    }
}

/// Initial record plus one record per accepted time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticSeries {
    pub source: Source,
    pub initial: StepRecord,
    pub steps: Vec<StepRecord>,
}

impl DiagnosticSeries {
    pub fn new(source: Source, initial: StepRecord) -> Self {
        Self { source, initial, steps: Vec::new() }
    }

    /// Initial record followed by the step records.
    pub fn records(&self) -> impl Iterator<Item = &StepRecord> {
        std::iter::once(&self.initial).chain(self.steps.iter())
    }

    /// `(t, G)` pairs, initial level included.
    pub fn g_series(&self) -> Vec<(f64, f64)> {
        self.records().map(|r| (r.t, r.g_value)).collect()
    }
}

/// First back-flow point located by a solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackFlowEvent {
    pub t_star: f64,
    pub x_star: f64,
    /// Discrete `d2u/dy2` at the wall at `(t_star, x_star)`.
    pub wall_curvature: f64,
    pub source: Source,
}

impl BackFlowEvent {
    /// Relative mismatch between the wall curvature and `dP/dx`.
    pub fn curvature_mismatch(&self, grad_p: f64) -> f64 {
        (self.wall_curvature - grad_p).abs() / grad_p.abs()
    }
}

/// Summary of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub t_new: f64,
    /// Largest residual of the implicit systems.
    pub max_residual: f64,
    pub min_wall_shear: f64,
    /// Physical solver: `u` strictly increasing in `y` in every column.
    /// Crocco solver: no negative shear had to be clamped.
    pub monotone_flag: bool,
}

/// When to stop a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub t_end: f64,
    pub detect_backflow: bool,
    /// Number of time-step halvings used to locate the event.
    pub bisections: u32,
}

impl StopRule {
    pub fn new(t_end: f64) -> Self {
        Self { t_end, detect_backflow: true, bisections: 20 }
    }
}

/// Index and value of the smallest entry (first index on ties).
pub(crate) fn argmin(values: &[f64]) -> (usize, f64) {
    values.iter().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_takes_first_index_on_ties() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), (1, 1.0));
    }

    #[test]
    fn series_lists_initial_record_first() {
        let mut s = DiagnosticSeries::new(Source::Physical, StepRecord::new(0.0, 1.0, 0.0, 2.0));
        s.steps.push(StepRecord::new(0.1, 0.9, 0.5, 2.5));
        assert_eq!(s.g_series(), vec![(0.0, 2.0), (0.1, 2.5)]);
    }
}
