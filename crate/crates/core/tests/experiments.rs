mod common;

use common::*;
use nehari_core::error::Error;
use nehari_core::experiments::{compare_periodic_limit, lambda_sweep, theorem_c_limit, write_sweep_csv};
use nehari_core::grid::make_grid;
use nehari_core::model::{Component, ScalarFunctionSpec};
use nehari_core::solver::{solve_scalar_with_restarts, SolverOptions};

fn small_grid() -> std::sync::Arc<nehari_core::grid::Grid> {
    make_grid(2, 32, 8.0).unwrap()
}

#[test]
fn sweep_levels_decrease() {
    let spec = constant_problem(small_grid(), 2.0, 2.0, 1.0, LOG1);
    let delta_max = 1.0 / spec.build().unwrap().effective_delta();
    let scales: Vec<f64> = [0.2, 0.4, 0.6].iter().map(|f| f * delta_max).collect();
    let r = lambda_sweep(&spec, &scales, &SolverOptions::default()).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.all_converged());
    assert!(r.monotone_decreasing);
    for w in r.rows.windows(2) {
        assert!(w[1].scale > w[0].scale);
        assert!(w[1].level < w[0].level - 1e-10 * w[0].level.abs());
    }
}

#[test]
fn zero_scale_is_decoupled_limit() {
    let spec = constant_problem(small_grid(), 2.0, 3.0, 0.8, LOG1);
    let opts = SolverOptions::default();
    let r = lambda_sweep(&spec, &[0.0], &opts).unwrap();
    let problem = spec.build().unwrap();
    let c1 = solve_scalar_with_restarts(Component::U, &problem, &opts).unwrap();
    let c2 = solve_scalar_with_restarts(Component::V, &problem, &opts).unwrap();
    let c0 = c1.level.min(c2.level);
    assert_eq!(r.rows.len(), 1);
    assert!((r.rows[0].level - c0).abs() < 1e-6 * c0);
}

#[test]
fn duplicate_scales_rejected() {
    let spec = constant_problem(small_grid(), 2.0, 2.0, 1.0, LOG1);
    let err = lambda_sweep(&spec, &[0.2, 0.4, 0.4], &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidScales(_)));
}

#[test]
fn zero_perturbation_compares_equal() {
    let spec = perturbed_problem(small_grid(), 0.0);
    let r = compare_periodic_limit(&spec, &SolverOptions::default()).unwrap();
    assert!(!r.ordering_holds);
    assert!(r.gap().abs() < 1e-10);
}

#[test]
fn comparison_is_reproducible() {
    let spec = perturbed_problem(small_grid(), 0.2);
    let opts = SolverOptions {
        restarts: 2,
        ..SolverOptions::default()
    };
    let a = compare_periodic_limit(&spec, &opts).unwrap();
    let b = compare_periodic_limit(&spec, &opts).unwrap();
    assert!(a.ordering_holds);
    assert!((a.level_periodic - b.level_periodic).abs() <= 1e-8 * a.level_periodic);
    assert!((a.level_perturbed - b.level_perturbed).abs() <= 1e-8 * a.level_perturbed);
}

#[test]
fn raising_perturbation_rejected() {
    let mut spec = perturbed_problem(small_grid(), 0.2);
    spec.v2 = ScalarFunctionSpec::periodic_trig(2.0, 0.2, vec![1]).with_perturbation(0.1, 0.5);
    let err = compare_periodic_limit(&spec, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::PerturbationSignViolation(_)));
}

#[test]
fn symmetric_limit_reports_tie() {
    let spec = constant_problem(small_grid(), 2.0, 2.0, 1.0, LOG1);
    let r = theorem_c_limit(&spec, &[0.4, 0.2, 0.1], &SolverOptions::default()).unwrap();
    assert!(r.tie);
    assert_eq!(r.survivor, None);
    assert_eq!(r.mass_ratio, None);
    assert!(r.mass_bounded);
}

#[test]
fn asymmetric_limit_bounded_and_shrinking() {
    let spec = constant_problem(small_grid(), 2.0, 3.0, 1.0, LOG1);
    let r = theorem_c_limit(&spec, &[0.5, 0.25, 0.1, 0.05], &SolverOptions::default()).unwrap();
    assert_eq!(r.survivor, Some(Component::U));
    assert!(r.mass_bounded);
    assert!(r.gap_shrinking);
    assert!(!r.branch_switch);
    let first = r.rows[0].u_mass + r.rows[0].v_mass;
    assert!(r.rows.iter().all(|x| x.u_mass + x.v_mass <= 10.0 * first));
}

#[test]
fn sweep_csv_is_deterministic() {
    let spec = constant_problem(small_grid(), 2.0, 3.0, 1.0, LOG1);
    let opts = SolverOptions::default();
    let render = || {
        let r = lambda_sweep(&spec, &[0.1, 0.5], &opts).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &r.rows).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let a = render();
    assert_eq!(a, render());
    assert_eq!(a.lines().count(), 3);
    for line in a.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert!(fields[..5].iter().all(|f| f.parse::<f64>().is_ok()));
    }
}
