//! Writes a run report to its output directory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use prandtl_core::diagnostics::InequalityReport;
use prandtl_core::series::{Source, StepRecord};

use crate::run::{RunReport, Snapshot};

/// One line of `diagnostics.ndjson`.
#[derive(Serialize)]
struct Line<'a> {
    solver: Source,
    step: usize,
    #[serde(flatten)]
    record: &'a StepRecord,
}

fn margins_by_time(report: Option<&InequalityReport>) -> HashMap<u64, f64> {
    report.map_or_else(HashMap::new, |r| r.margins.iter().map(|(t, m)| (t.to_bits(), *m)).collect())
}

/// Records of one solver with the per-step margins filled in. The inequality
/// margin of step `k` belongs to the difference from `k` to `k + 1`.
fn records(
    series: &prandtl_core::series::DiagnosticSeries,
    shear_margins: Option<&[f64]>,
    inequality: Option<&InequalityReport>,
) -> Vec<StepRecord> {
    let margins = margins_by_time(inequality);
    series
        .records()
        .enumerate()
        .map(|(k, r)| {
            let mut r = *r;
            r.shear_bound_margin = shear_margins.and_then(|m| m.get(k).copied());
            r.inequality_margin = margins.get(&r.t.to_bits()).copied();
            r
        })
        .collect()
}

fn write_ndjson(path: &Path, report: &RunReport) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let mut emit = |source: Source, recs: &[StepRecord]| -> io::Result<()> {
        for (step, record) in recs.iter().enumerate() {
            serde_json::to_writer(&mut out, &Line { solver: source, step, record })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    };
    if let Some(p) = &report.physical {
        emit(Source::Physical, &records(&p.outcome.series, None, p.inequality.as_ref()))?;
    }
    if let Some(c) = &report.crocco {
        let margins = &c.shear_bound.level_margins;
        emit(Source::Crocco, &records(&c.outcome.series, Some(margins), c.inequality.as_ref()))?;
    }
    out.flush()
}

/// File name of a snapshot: `u_<t>.csv` or `w_<t>.csv`.
pub fn snapshot_name(s: &Snapshot) -> String {
    let prefix = match s.source {
        Source::Physical => "u",
        Source::Crocco => "w",
    };
    format!("{prefix}_{:.9e}.csv", s.t)
}

/// CSV with the time and the `x` coordinates as header rows, then one row
/// per `y` (or `eta`) node.
pub fn snapshot_csv(s: &Snapshot) -> String {
    let coord = match s.source {
        Source::Physical => "y",
        Source::Crocco => "eta",
    };
    let mut text = format!("t,{:e}\n{coord}\\x", s.t);
    for x in &s.x {
        let _ = write!(text, ",{x:e}");
    }
    text.push('\n');
    for (row, values) in s.rows.iter().zip(s.values.chunks(s.x.len())) {
        let _ = write!(text, "{row:e}");
        for v in values {
            let _ = write!(text, ",{v:e}");
        }
        text.push('\n');
    }
    text
}

fn meta(report: &RunReport) -> serde_json::Value {
    let s = &report.scenario;
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": report.config,
        "dt": report.dt,
        "scenario": {
            "name": s.name,
            "model": s.model,
            "classification": report.classification,
            "expected": s.expected.as_str(),
            "prediction": s.prediction,
            "metadata": s.metadata,
        },
        "design": {
            "physical_scheme": "backward-Euler diffusion, explicit upwind advection, continuity for v",
            "crocco_scheme": "s = w^2, implicit diffusion with frozen coefficient, central or upwind advection",
            "crocco_wall_closure": "w(0) = sqrt(w(1)^2 - 2 d_eta dP/dx / U_e)",
            "event_location": "time-step bisection",
            "bisections": report.config.bisections,
            "inequality_excluded_steps": report.config.inequality_exclude,
            "snapshot_max_rows": report.config.snapshot_max_rows,
        },
        "events": report.events(),
        "physical": report.physical.as_ref().map(|p| json!({
            "steps": p.outcome.series.steps.len(),
            "event_interior": p.event_interior,
            "resolution_floor": p.resolution_floor,
            "inequality": p.inequality.as_ref().map(inequality_summary),
        })),
        "crocco": report.crocco.as_ref().map(|c| json!({
            "steps": c.outcome.series.steps.len(),
            "clamped": c.outcome.clamped,
            "shear_bound": c.shear_bound,
            "inequality": c.inequality.as_ref().map(inequality_summary),
        })),
        "cross_validation": report.cross,
        "checks": report.checks,
        "passed": report.passed(),
    })
}

fn inequality_summary(r: &InequalityReport) -> serde_json::Value {
    json!({
        "checked": r.checked,
        "passed_steps": r.passed_steps,
        "pass_fraction": r.pass_fraction,
        "worst": r.worst,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

/// Writes `diagnostics.ndjson`, `snapshots/`, `meta.json` and, when a solver
/// found back-flow, `event.json` (an array with one entry per solver).
pub fn write_run(dir: &Path, report: &RunReport) -> io::Result<()> {
    let snapshots = dir.join("snapshots");
    fs::create_dir_all(&snapshots)?;
    write_ndjson(&dir.join("diagnostics.ndjson"), report)?;
    let all = report.physical.iter().flat_map(|p| &p.snapshots).chain(report.crocco.iter().flat_map(|c| &c.snapshots));
    for s in all {
        fs::write(snapshots.join(snapshot_name(s)), snapshot_csv(s))?;
    }
    let events = report.events();
    if !events.is_empty() {
        write_json(&dir.join("event.json"), &events)?;
    }
    write_json(&dir.join("meta.json"), &meta(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_layout() {
        let s = Snapshot {
            source: Source::Physical,
            t: 0.5,
            x: vec![0.0, 1.0],
            rows: vec![0.0, 2.0],
            values: vec![0.0, 0.0, 1.0, 1.5],
        };
        assert_eq!(snapshot_name(&s), "u_5.000000000e-1.csv");
        assert_eq!(snapshot_csv(&s), "t,5e-1\ny\\x,0e0,1e0\n0e0,0e0,0e0\n2e0,1e0,1.5e0\n");
    }

    #[test]
    fn ndjson_line_order() {
        let mut r = StepRecord::new(0.0, 1.0, 0.5, f64::INFINITY);
        r.inequality_margin = Some(0.25);
        let line = serde_json::to_string(&Line { solver: Source::Crocco, step: 3, record: &r }).unwrap();
        assert_eq!(
            line,
            r#"{"solver":"crocco","step":3,"t":0.0,"min_wall_shear":1.0,"argmin_x":0.5,"G_value":null,"lemma21_margin":null,"inequality_margin":0.25}"#
        );
    }
}
