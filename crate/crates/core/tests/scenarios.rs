use prandtl_core::crocco::CroccoProblem;
use prandtl_core::crocco_transform::{forward, CroccoGrid, ShearField};
use prandtl_core::diagnostics::{condition_integral, lyapunov_g};
use prandtl_core::physical::{PhysicalGrid, PhysicalProblem};
use prandtl_core::scenarios::{by_name, decelerating_outer_flow, slow_growth_profile, Scenario, NAMES};

/// `G` at the initial time from the forward transform of sampled `u0`.
fn g_from_forward(s: &Scenario, n_xi: usize, n_eta: usize, n_y: usize) -> f64 {
    let grid = CroccoGrid::new(n_xi, n_eta, s.model.length()).unwrap();
    let y_cut = s.defaults.cond_y_cut;
    let y: Vec<f64> = (0..n_y).map(|k| y_cut * k as f64 / (n_y - 1) as f64).collect();
    let mut field = ShearField::zeros(grid, 0.0);
    for i in 0..n_xi {
        let x = grid.xi(i);
        let ue = s.model.sample(0.0, x).ue;
        let u: Vec<f64> = y.iter().map(|&y| (s.u0)(x, y)).collect();
        let du: Vec<f64> = y.iter().map(|&y| (s.u0_y)(x, y)).collect();
        let w = forward(&u, &du, ue, n_eta, 1e-3).unwrap();
        field.column_mut(i).copy_from_slice(&w);
    }
    lyapunov_g(&field).value
}

#[test]
fn every_scenario_initialises_on_its_default_grids() {
    for name in NAMES {
        let s = by_name(name).unwrap();
        let d = s.defaults;
        let pg = PhysicalGrid::new(d.n_x, d.n_y, s.model.length(), d.y_max, d.stretch, d.dt).unwrap();
        PhysicalProblem::new(pg, s.model, s.u1.clone(), 1e-3).unwrap().init(&s.u0).unwrap();
        let cg = CroccoGrid::new(d.n_xi, d.n_eta, s.model.length()).unwrap();
        CroccoProblem::new(cg, s.model, s.w1.clone(), d.dt).unwrap().init(&s.w0).unwrap();
    }
}

#[test]
fn condition_matches_lyapunov_functional_at_start() {
    for s in [decelerating_outer_flow(1.0).unwrap(), slow_growth_profile(50.0, 0.01).unwrap()] {
        let c = s.condition_value().unwrap();
        let g = g_from_forward(&s, 65, 4097, 200_001);
        assert!((c - g).abs() < 1e-4 * c.max(1.0), "{}: {c} vs {g}", s.name);
    }
}

#[test]
fn decelerating_condition_closed_form_and_scaling() {
    let c0 = 2f64.sqrt() * 1f64.asinh();
    let a = decelerating_outer_flow(3.0).unwrap();
    let b = decelerating_outer_flow(6.0).unwrap();
    let (ca, cb) = (a.condition_value().unwrap(), b.condition_value().unwrap());
    assert!((ca / (0.4 * c0 * 3f64.powf(2.5)) - 1.0).abs() < 1e-6);
    assert!((cb / ca / 2f64.powf(2.5) - 1.0).abs() < 1e-6);
}

#[test]
fn slow_growth_condition_follows_log_growth() {
    let value = |m: f64| slow_growth_profile(m, 0.5 / m).unwrap().condition_value().unwrap();
    let (c10, c100) = (value(10.0), value(100.0));
    // the linear region alone contributes (2/5) asinh(M)
    assert!(c10 >= 0.4 * 10f64.asinh());
    let growth = c100 - c10;
    let expected = 0.4 * (200f64.ln() - 20f64.ln());
    assert!((growth / expected - 1.0).abs() < 0.05, "{growth} vs {expected}");
}

#[test]
fn condition_rejects_decreasing_profile() {
    let s = decelerating_outer_flow(1.0).unwrap();
    let bad = prandtl_core::profile::field(|_, y| if (1.0..2.0).contains(&y) { -1.0 } else { 1.0 });
    assert!(condition_integral(&s.u0, &bad, &s.model, 5.0, 9, 65).is_err());
}

#[test]
fn predicted_outcomes() {
    use prandtl_core::scenarios::ExpectedOutcome::*;
    assert_eq!(by_name("example4.1").unwrap().expected, BackflowExpected);
    assert_eq!(by_name("example4.2").unwrap().expected, BackflowExpected);
    assert_eq!(by_name("favourable").unwrap().expected, NoBackflowExpected);
    assert_eq!(by_name("heat-oracle").unwrap().expected, Oracle);
    assert_eq!(decelerating_outer_flow(1e-3).unwrap().expected, NoBackflowExpected);
    assert_eq!(slow_growth_profile(1.0, 0.5).unwrap().expected, NoBackflowExpected);
}
