mod common;

use proptest::prelude::*;

use common::*;
use nehari_core::energy::{coupled_quadratic, energy, nehari_value, StatePair};
use nehari_core::error::Error;
use nehari_core::grid::{make_grid, Field};
use nehari_core::model::{Component, NonlinearitySpec};
use nehari_core::solver::{
    default_init, mountain_pass_diagnostics, nehari_project, solve_ground_state, solve_scalar_ground_state,
    SolverOptions,
};

fn small_grid() -> std::sync::Arc<nehari_core::grid::Grid> {
    make_grid(2, 32, 8.0).unwrap()
}

#[test]
fn accepted_steps_strictly_decrease_energy() {
    let problem = perturbed_problem(small_grid(), 0.2).build().unwrap();
    let r = solve_ground_state(&problem, None, &SolverOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.energy_history.len() > 2);
    for w in r.energy_history.windows(2) {
        // ties at round-off are allowed by the value, never by the step itself
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "{} -> {}", w[0], w[1]);
    }
    assert!(r.decrease_history.iter().all(|d| *d < 0.0));
}

#[test]
fn converged_state_is_ray_maximum() {
    let problem = constant_problem(small_grid(), 2.0, 2.5, 0.6, LOG1).build().unwrap();
    let opts = SolverOptions::default();
    let r = solve_ground_state(&problem, None, &opts).unwrap();
    assert!(r.converged);
    let q = coupled_quadratic(&r.state, &problem).unwrap();
    assert!(nehari_value(&r.state, &problem).unwrap().abs() <= opts.tol_nehari * q);
    for i in 0..100 {
        let t = 10f64.powf(-1.0 + 2.0 * i as f64 / 99.0);
        let e = energy(&r.state.scaled(t), &problem).unwrap().total;
        if (t - 1.0).abs() > 1e-3 {
            assert!(e < r.level, "t = {t}: {e} >= {}", r.level);
        } else {
            assert!(e <= r.level + 1e-12 * r.level);
        }
    }
    let (t0, _) = nehari_project(&r.state, &problem).unwrap();
    assert!((t0 - 1.0).abs() < 1e-8);
}

#[test]
fn identical_seeds_identical_runs() {
    let problem = perturbed_problem(small_grid(), 0.2).build().unwrap();
    let opts = SolverOptions {
        seed: 3,
        ..SolverOptions::default()
    };
    let a = solve_ground_state(&problem, None, &opts).unwrap();
    let b = solve_ground_state(&problem, None, &opts).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.level.to_bits(), b.level.to_bits());
    assert_eq!(a.state.u.values(), b.state.u.values());
}

#[test]
fn initial_scaling_is_absorbed() {
    let problem = constant_problem(small_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let opts = SolverOptions::default();
    let init = default_init(problem.grid(), 4);
    let a = solve_ground_state(&problem, Some(&init), &opts).unwrap();
    let b = solve_ground_state(&problem, Some(&init.scaled(10.0)), &opts).unwrap();
    assert!(a.converged && b.converged);
    assert!((a.level - b.level).abs() < 1e-6 * a.level);
}

#[test]
fn symmetric_problem_keeps_symmetric_state() {
    let problem = constant_problem(small_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let init = default_init(problem.grid(), 0);
    let sym = StatePair::new(init.u.clone(), init.u.clone()).unwrap();
    let r = solve_ground_state(&problem, Some(&sym), &SolverOptions::default()).unwrap();
    assert!(r.converged);
    let diff = r.state.u.combine(1.0, &r.state.v, -1.0).unwrap().mass().sqrt();
    assert!(diff / r.u_mass().sqrt() < 1e-4);
}

#[test]
fn decoupled_solve_keeps_one_component() {
    let problem = constant_problem(small_grid(), 2.0, 3.0, 0.0, LOG1).build().unwrap();
    let opts = SolverOptions::default();
    let r = solve_ground_state(&problem, None, &opts).unwrap();
    let c1 = solve_scalar_ground_state(Component::U, &problem, &opts).unwrap();
    let c2 = solve_scalar_ground_state(Component::V, &problem, &opts).unwrap();
    assert!(c1.level < c2.level);
    assert!((r.level - c1.level).abs() < 1e-6 * c1.level);
    assert!(r.v_mass() < 1e-12 * r.u_mass());
}

#[test]
fn scalar_solve_properties() {
    let problem = constant_problem(small_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let opts = SolverOptions::default();
    let r = solve_scalar_ground_state(Component::V, &problem, &opts).unwrap();
    assert!(r.converged);
    assert!(r.state.u.values().iter().all(|v| *v == 0.0));
    assert!(r.level >= 1e-8);
    let longer = SolverOptions {
        max_iters: 2 * opts.max_iters,
        ..opts
    };
    let r2 = solve_scalar_ground_state(Component::V, &problem, &longer).unwrap();
    assert!((r.level - r2.level).abs() < 1e-6 * r.level);
}

#[test]
fn positive_coupling_gives_positive_components() {
    let problem = perturbed_problem(small_grid(), 0.2).build().unwrap();
    let r = solve_ground_state(&problem, None, &SolverOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.positive_fraction_u, 1.0);
    assert_eq!(r.positive_fraction_v, 1.0);
}

#[test]
fn diagnostics_at_ground_state() {
    let problem = constant_problem(small_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let opts = SolverOptions::default();
    let r = solve_ground_state(&problem, None, &opts).unwrap();
    let d = mountain_pass_diagnostics(&problem, &r.state, &opts).unwrap();
    assert!((d.ray_max - r.level).abs() < 1e-8 * r.level);
    assert!((d.ray_argmax - 1.0).abs() < 1e-6);
    assert!(d.consistent_with_level(r.level, 1e-8));
    assert!(d.small_sphere_positive && d.sphere_min[0] > 0.0);
    assert!(d.far_negative());
    // sampled ray values never exceed the projected maximum
    assert!(d.ray_samples.iter().all(|(_, e)| *e <= d.ray_max * (1.0 + 1e-12)));
}

#[test]
fn refuses_states_without_positive_part() {
    let problem = constant_problem(small_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let grid = problem.grid();
    let neg = StatePair::new(Field::constant(grid, -1.0), Field::zeros(grid)).unwrap();
    assert!(matches!(nehari_project(&neg, &problem), Err(Error::NotInEPlus)));
    assert!(matches!(
        solve_ground_state(&problem, Some(&neg), &SolverOptions::default()),
        Err(Error::NotInEPlus)
    ));
}

#[test]
fn forced_stop_is_reported_not_converged() {
    let problem = constant_problem(small_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let opts = SolverOptions {
        max_iters: 1,
        ..SolverOptions::default()
    };
    let r = solve_ground_state(&problem, None, &opts).unwrap();
    assert!(!r.converged);
    assert!(r.iterations <= 1);
    assert!(r.level.is_finite() && r.nehari_residual < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projection_maximizes_along_ray(seed in 0u64..10_000, scale in 0.01f64..100.0, p in 2.5f64..6.0) {
        let grid = make_grid(2, 16, 8.0).unwrap();
        let problem = constant_problem(grid.clone(), 1.5, 2.0, 0.8, NonlinearitySpec::PurePower { p })
            .build()
            .unwrap();
        let x = positive_state(&grid, seed).scaled(scale);
        let (t0, y) = nehari_project(&x, &problem).unwrap();
        let q = coupled_quadratic(&y, &problem).unwrap();
        prop_assert!(nehari_value(&y, &problem).unwrap().abs() < 1e-10 * q);
        let top = energy(&y, &problem).unwrap().total;
        for t in [0.1, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 10.0] {
            prop_assert!(energy(&y.scaled(t), &problem).unwrap().total < top);
        }
        // projecting again is a fixed point
        let (t1, _) = nehari_project(&y, &problem).unwrap();
        prop_assert!((t1 - 1.0).abs() < 1e-8);
        prop_assert!(t0 > 0.0);
    }
}
