//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};

use prandtl_cli::load_config;
use prandtl_cli::run::{execute, RunReport};
use prandtl_core::crocco::{CroccoOutcome, CroccoProblem};
use prandtl_core::crocco_transform::{forward, inverse, CroccoGrid, ShearField};
use prandtl_core::diagnostics::{check_shear_bound, comparison_ode, critical_threshold, lyapunov_g, ComparisonOde};
use prandtl_core::physical::{PhysicalGrid, PhysicalProblem};
use prandtl_core::scenarios::{decelerating_outer_flow, heat_oracle, slow_growth_profile, Scenario};
use prandtl_core::series::{Source, StopRule};

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed()))
}

fn heat_physical_error(s: &Scenario, n_y: usize, dt: f64) -> Result<f64> {
    let d = s.defaults;
    let grid = PhysicalGrid::new(d.n_x, n_y, s.model.length(), d.y_max, d.stretch, dt)?;
    let p = PhysicalProblem::new(grid.clone(), s.model, s.u1.clone(), 1e-3)?;
    let out = p.run(p.init(&s.u0)?, StopRule::new(d.t_end), &mut |_, _| {})?;
    let exact = &s.oracle.as_ref().context("no oracle")?.u;
    let f = &out.final_state;
    Ok((0..grid.n_x)
        .flat_map(|i| f.column(i).iter().zip(grid.y()).map(move |(u, &y)| (u - exact(f.t, y)).abs()))
        .fold(0.0, f64::max))
}

fn criterion_1() -> Result<String> {
    let s = heat_oracle(0.05)?;
    let (fine, time) = timed(|| heat_physical_error(&s, 257, 1e-4))?;
    let coarse = heat_physical_error(&s, 129, 4e-4)?;
    let ratio = coarse / fine;
    ensure!(fine < 1e-3, "L-inf error {fine:.3e} >= 1e-3");
    ensure!((3.2..=4.8).contains(&ratio), "convergence ratio {ratio:.3} outside [3.2, 4.8]");
    ensure!(time < Duration::from_secs(10), "runtime {time:?}");
    Ok(format!("L-inf error {fine:.3e}, ratio {ratio:.3}, {:.2} s", time.as_secs_f64()))
}

fn heat_crocco() -> Result<(CroccoGrid, CroccoOutcome, Scenario)> {
    let s = heat_oracle(0.05)?;
    let d = s.defaults;
    let grid = CroccoGrid::new(d.n_xi, d.n_eta, s.model.length())?;
    let p = CroccoProblem::new(grid, s.model, s.w1.clone(), d.dt)?;
    let out = p.run(p.init(&s.w0)?, StopRule::new(d.t_end), &mut |_, _| {})?;
    Ok((grid, out, s))
}

fn criterion_2() -> Result<String> {
    let ((grid, out, s), time) = timed(heat_crocco)?;
    let exact = &s.oracle.as_ref().context("no oracle")?.w;
    let f = &out.final_field;
    let err = (0..grid.n_xi())
        .flat_map(|i| (0..grid.n_eta()).map(move |j| (f.get(i, j) - exact(f.tau, grid.eta(j))).abs()))
        .fold(0.0, f64::max);
    ensure!(out.event.is_none(), "unexpected event");
    ensure!(err < 5e-3, "L-inf error {err:.3e} >= 5e-3");
    ensure!(time < Duration::from_secs(10), "runtime {time:?}");
    Ok(format!("L-inf error {err:.3e}, {:.2} s", time.as_secs_f64()))
}

fn criterion_3() -> Result<String> {
    let ue = 1.7;
    let y: Vec<f64> = (0..4001).map(|k| k as f64 * 0.01).collect();
    let u: Vec<f64> = y.iter().map(|y| ue * (1.0 - (-y).exp())).collect();
    let du: Vec<f64> = y.iter().map(|y| ue * (-y).exp()).collect();
    let back = inverse(&forward(&u, &du, ue, 256, 1e-6)?, ue)?;
    let err = back.y.iter().zip(&back.u).map(|(y, u)| (u - ue * (1.0 - (-y).exp())).abs()).fold(0.0, f64::max);
    ensure!(err < 1e-4, "L-inf error {err:.3e}");
    Ok(format!("L-inf error {err:.3e} at 256 eta nodes"))
}

fn criterion_4() -> Result<String> {
    let grid = CroccoGrid::new(513, 513, 1.0)?;
    let mut f = ShearField::from_fn(grid, 0.0, |_, _| 1.0);
    for i in 0..grid.n_xi() {
        f.column_mut(i)[grid.n_eta() - 1] = 1.0;
    }
    let g = lyapunov_g(&f).value;
    let exact = 0.4 * 2f64.sqrt().ln_1p();
    ensure!((g - exact).abs() < 1e-5, "G = {g}, expected {exact}");
    Ok(format!("G = {g:.9}, error {:.2e}", (g - exact).abs()))
}

fn criterion_5() -> Result<String> {
    let ode = ComparisonOde { cubic: 1.0, linear: 0.0, forcing: 0.0 };
    let t = comparison_ode(1.0, &ode, 2.0).blowup_time.context("no blow-up")?;
    ensure!((t - 0.5).abs() < 1e-4, "blow-up time {t}");
    Ok(format!("blow-up time {t:.8}"))
}

fn criterion_6() -> Result<String> {
    let ode = ComparisonOde { cubic: 25.0 / 32.0, linear: 0.75, forcing: -(4.0 * 2f64.sqrt() - 1.0) / 5.0 };
    let c = critical_threshold(&ode, 5.0)?.c_star;
    let blows = |g: f64| comparison_ode(g, &ode, 5.0).blowup_time.is_some_and(|t| t <= 5.0);
    ensure!(blows(1.01 * c), "no blow-up at 1.01 C*");
    ensure!(!blows(0.99 * c), "blow-up at 0.99 C*");
    Ok(format!("C* = {c:.8}"))
}

fn criterion_7(r: &RunReport, time: Duration) -> Result<String> {
    let p = r.physical.as_ref().and_then(|p| p.outcome.event).context("physical solver found no event")?;
    let c = r.crocco.as_ref().and_then(|c| c.outcome.event).context("Crocco solver found no event")?;
    let dx = r.physical.as_ref().map(|p| p.grid.dx()).unwrap_or(f64::NAN);
    let dt_rel = (p.t_star - c.t_star).abs() / p.t_star;
    let dx_abs = (p.x_star - c.x_star).abs();
    let detail = format!(
        "t* = {:.6e} / {:.6e} (difference {:.2}%), x* = {:.5} / {:.5}, {:.1} s",
        p.t_star,
        c.t_star,
        100.0 * dt_rel,
        p.x_star,
        c.x_star,
        time.as_secs_f64()
    );
    ensure!(dt_rel <= 0.05, "{detail}: t* differ by more than 5%");
    ensure!(dx_abs <= 2.0 * dx, "{detail}: x* differ by more than 2 dx");
    ensure!(time < Duration::from_secs(120), "{detail}: runtime above 2 min");
    Ok(detail)
}

fn criterion_8(r: &RunReport) -> Result<String> {
    let p = r.physical.as_ref().context("no physical run")?;
    let rep = p.event_interior.as_ref().context("no physical event")?;
    let floor = p.resolution_floor.context("no resolution floor")?;
    ensure!(rep.global_argmin == 0, "global minimiser at node {}", rep.global_argmin);
    ensure!(rep.interior_min > 10.0 * floor, "interior min {:.3e} vs floor {floor:.3e}", rep.interior_min);
    Ok(format!("wall is the minimiser; interior min {:.3e} > 10 x floor {floor:.3e}", rep.interior_min))
}

fn check_value(r: &RunReport, name: &str, source: Option<Source>) -> Result<(bool, f64)> {
    let c =
        r.checks.iter().find(|c| c.name == name && c.source == source).with_context(|| format!("no {name} check"))?;
    Ok((c.passed, c.value))
}

fn criterion_9(r: &RunReport) -> Result<String> {
    let (p_ok, p_mis) = check_value(r, "event_curvature", Some(Source::Physical))?;
    let (c_ok, c_mis) = check_value(r, "event_curvature", Some(Source::Crocco))?;
    let (w_ok, w_mis) = check_value(r, "wall_compatibility", Some(Source::Physical))?;
    let detail = format!(
        "curvature mismatch {:.2}% (physical), {:.2}% (Crocco); wall compatibility {:.2}%",
        100.0 * p_mis,
        100.0 * c_mis,
        100.0 * w_mis
    );
    ensure!(p_ok && c_ok && w_ok, "{detail}");
    Ok(detail)
}

fn criterion_10(r41: &RunReport) -> Result<String> {
    let mut parts = Vec::new();
    let mut ok = true;
    let b = &r41.crocco.as_ref().context("no Crocco run")?.shear_bound;
    parts.push(format!("example4.1 margin {:.3e}", b.margin));
    ok &= b.passed;
    let (grid, out, s) = heat_crocco()?;
    let b = check_shear_bound(&out.history, &s.model, &grid, 0.05)?;
    parts.push(format!("heat-oracle margin {:.3e}", b.margin));
    ok &= b.passed;
    let config = load_config(None, Some("example4.2"), &["solver=crocco".into()])?;
    let r = execute(&config)?;
    let b = &r.crocco.as_ref().context("no Crocco run")?.shear_bound;
    parts.push(format!("example4.2 margin {:.3e}", b.margin));
    ok &= b.passed;
    let detail = parts.join(", ");
    ensure!(ok, "{detail}");
    Ok(detail)
}

fn criterion_11(r: &RunReport) -> Result<String> {
    let (p_ok, p) = check_value(r, "lyapunov_inequality", Some(Source::Physical))?;
    let (c_ok, c) = check_value(r, "lyapunov_inequality", Some(Source::Crocco))?;
    let detail = format!("pass fraction {:.1}% (physical), {:.1}% (Crocco)", 100.0 * p, 100.0 * c);
    ensure!(p_ok && c_ok, "{detail}");
    Ok(detail)
}

fn criterion_12() -> Result<String> {
    let config = load_config(None, Some("favourable"), &[])?;
    ensure!(config.t_end == 1.0, "favourable run ends at {}", config.t_end);
    let r = execute(&config)?;
    ensure!(r.events().is_empty(), "unexpected event {:?}", r.events());
    let series = &r.physical.as_ref().context("no physical run")?.outcome.series;
    let first = series.initial.min_wall_shear;
    let min = series.records().map(|s| s.min_wall_shear).fold(f64::INFINITY, f64::min);
    ensure!(min >= 0.5 * first, "min wall shear {min:.4} < half of {first:.4}");
    Ok(format!("no event; min wall shear {min:.4}, initial {first:.4}"))
}

/// `G` at the initial time from the forward transform of sampled `u0`.
fn g_from_forward(s: &Scenario) -> Result<f64> {
    let grid = CroccoGrid::new(65, 4097, s.model.length())?;
    let y_cut = s.defaults.cond_y_cut;
    let n_y = 200_001;
    let y: Vec<f64> = (0..n_y).map(|k| y_cut * k as f64 / (n_y - 1) as f64).collect();
    let mut field = ShearField::zeros(grid, 0.0);
    for i in 0..grid.n_xi() {
        let x = grid.xi(i);
        let ue = s.model.sample(0.0, x).ue;
        let u: Vec<f64> = y.iter().map(|&y| (s.u0)(x, y)).collect();
        let du: Vec<f64> = y.iter().map(|&y| (s.u0_y)(x, y)).collect();
        field.column_mut(i).copy_from_slice(&forward(&u, &du, ue, grid.n_eta(), 1e-3)?);
    }
    Ok(lyapunov_g(&field).value)
}

fn criterion_13() -> Result<String> {
    let mut parts = Vec::new();
    for s in [decelerating_outer_flow(3.0)?, slow_growth_profile(50.0, 0.01)?] {
        let c = s.condition_value()?;
        let g = g_from_forward(&s)?;
        let rel = (c - g).abs() / g.abs();
        ensure!(rel < 1e-3, "{}: condition {c:.6} vs G {g:.6}", s.name);
        parts.push(format!("{} {c:.6} vs {g:.6} ({rel:.1e})", s.name));
    }
    Ok(parts.join(", "))
}

fn criterion_14() -> Result<String> {
    let a = decelerating_outer_flow(3.0)?.condition_value()?;
    let b = decelerating_outer_flow(6.0)?.condition_value()?;
    let ratio = b / a;
    let expected = 2f64.powf(2.5);
    ensure!((ratio / expected - 1.0).abs() < 0.01, "ratio {ratio:.6}, expected {expected:.6}");
    Ok(format!("ratio {ratio:.6} vs 2^(5/2) = {expected:.6}"))
}

fn tree(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir)?.to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path)?);
            }
        }
    }
    Ok(out)
}

fn criterion_15() -> Result<String> {
    let tmp = tempfile::tempdir()?;
    let mut trees = Vec::new();
    for (k, threads) in ["1", "1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_prandtl"))
            .args(["run", "--scenario", "heat-oracle", "--override", "snapshot_every=250", "--out"])
            .arg(&out)
            .env("PRANDTL_THREADS", threads)
            .output()?;
        ensure!(status.status.success(), "run {k} failed: {}", String::from_utf8_lossy(&status.stderr));
        trees.push(tree(&out)?);
    }
    let files = trees[0].len();
    ensure!(files > 3, "only {files} files written");
    for (k, t) in trees.iter().enumerate().skip(1) {
        ensure!(*t == trees[0], "output tree {k} differs from tree 0");
    }
    Ok(format!("4 runs (threads 1, 1, 4, 4), {files} identical files each"))
}

fn main() {
    let mut results: Vec<(usize, &str, Result<String>)> = vec![
        (1, "heat oracle, physical solver", criterion_1()),
        (2, "heat oracle, Crocco solver", criterion_2()),
        (3, "forward/inverse round trip", criterion_3()),
        (4, "functional of unit shear", criterion_4()),
        (5, "cubic comparison ODE", criterion_5()),
        (6, "threshold bracketing", criterion_6()),
    ];
    let run41 =
        load_config(None, Some("example4.1"), &[]).map_err(anyhow::Error::from).and_then(|c| timed(|| execute(&c)));
    match &run41 {
        Ok((r, time)) => {
            results.push((7, "back-flow existence", criterion_7(r, *time)));
            results.push((8, "wall-first criticality", criterion_8(r)));
            results.push((9, "non-degeneracy", criterion_9(r)));
            results.push((10, "shear growth bound", criterion_10(r)));
            results.push((11, "discrete Lyapunov inequality", criterion_11(r)));
        }
        Err(e) => {
            for (n, name) in [
                (7, "back-flow existence"),
                (8, "wall-first criticality"),
                (9, "non-degeneracy"),
                (10, "shear growth bound"),
                (11, "discrete Lyapunov inequality"),
            ] {
                results.push((n, name, Err(anyhow::anyhow!("example4.1 run failed: {e:#}"))));
            }
        }
    }
    results.push((12, "favourable control", criterion_12()));
    results.push((13, "condition identity", criterion_13()));
    results.push((14, "scaling law", criterion_14()));
    results.push((15, "determinism", criterion_15()));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("[PASS] criterion {n:2} {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("[FAIL] criterion {n:2} {name}: {e:#}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
