//! Acceptance criteria at desk scale (dim 2, n = 64, L = 8). Each test
//! prints one `[PASS]`/`[FAIL]` line straight to stdout, so the lines show
//! up even when libtest captures output.

mod common;

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use nehari_core::energy::{coupled_quadratic, energy, gradient, nehari_value, product_norm_sq, StatePair};
use nehari_core::experiments::{compare_periodic_limit, lambda_sweep, theorem_c_limit};
use nehari_core::grid::{apply_frac_laplacian, Field};
use nehari_core::model::{Component, NonlinearitySpec};
use nehari_core::solver::{
    default_init, mountain_pass_diagnostics, nehari_project, solve_ground_state, solve_scalar_with_restarts,
    solve_with_restarts, SolveReport, SolverOptions,
};

fn verdict(id: u32, title: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{tag}] criterion {id:>2} {title}: {detail}");
    assert!(ok, "criterion {id} ({title}) failed: {detail}");
}

#[test]
fn criterion_01_operator_eigenvalues() {
    let grid = desk_grid();
    let l = grid.box_length();
    let modes: [[i32; 2]; 5] = [[1, 0], [0, 3], [2, -1], [5, 7], [-13, 4]];
    let mut worst: f64 = 0.0;
    for s in [0.3, 0.5, 0.8, 1.0] {
        for k in modes {
            let u = Field::from_fn(&grid, |x| {
                (2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]) / l).cos()
            })
            .unwrap();
            let lu = apply_frac_laplacian(&u, s).unwrap();
            let xi = 2.0 * PI * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt() / l;
            let lambda = xi.powf(2.0 * s);
            let err = u
                .values()
                .iter()
                .zip(lu.values())
                .map(|(a, b)| (b - lambda * a).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err / lambda);
        }
    }
    verdict(1, "operator eigenvalues", worst < 1e-12, format!("max relative error {worst:.3e} (< 1e-12)"));
}

#[test]
fn criterion_02_gradient_check() {
    let problem = constant_problem(desk_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let grid = problem.grid().clone();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let x = positive_state(&grid, 100 + trial);
        let d = signed_state(&grid, 200 + trial);
        let g = gradient(&x, &problem, false).unwrap();
        let analytic = pair_dot(&g, &d);
        let plus = energy(&x.combine(1.0, &d, h).unwrap(), &problem).unwrap().total;
        let minus = energy(&x.combine(1.0, &d, -h).unwrap(), &problem).unwrap().total;
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max((fd - analytic).abs() / analytic.abs());
    }
    verdict(2, "gradient check", worst < 1e-6, format!("max relative error {worst:.3e} over 20 pairs (< 1e-6)"));
}

#[test]
fn criterion_03_coercivity() {
    let grid = desk_grid();
    let mut worst_slack = f64::INFINITY;
    let mut ok = true;
    for delta in [0.3, 0.6, 0.9] {
        let problem = constant_problem(grid.clone(), 1.0, 1.0, delta, LOG1).build().unwrap();
        assert!((problem.effective_delta() - delta).abs() < 1e-15);
        for trial in 0..100u64 {
            let x = match trial {
                // the extremal direction for a constant coupling
                0 => StatePair::new(Field::constant(&grid, 1.0), Field::constant(&grid, 1.0)).unwrap(),
                1..=9 => {
                    let f = smooth_field(&grid, &mut ChaCha8Rng::seed_from_u64(trial));
                    StatePair::new(f.clone(), f).unwrap()
                }
                _ => signed_state(&grid, 1000 * trial + (delta * 10.0) as u64),
            };
            let q = coupled_quadratic(&x, &problem).unwrap();
            let norm = product_norm_sq(&x, &problem).unwrap();
            let slack = (q - (1.0 - delta) * norm) / norm;
            worst_slack = worst_slack.min(slack);
            ok &= slack >= -1e-10;
        }
    }
    verdict(
        3,
        "coercivity",
        ok,
        format!("min (Q - (1-delta) norm^2)/norm^2 = {worst_slack:.3e} over 300 pairs (>= -1e-10)"),
    );
}

#[test]
fn criterion_04_nehari_projection() {
    let problem = constant_problem(desk_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let grid = problem.grid().clone();
    let mut ok = true;
    let mut worst_res: f64 = 0.0;
    let mut worst_rise = f64::NEG_INFINITY;
    for trial in 0..5u64 {
        let x = positive_state(&grid, 300 + trial).scaled(0.1 + trial as f64);
        let (_, y) = nehari_project(&x, &problem).unwrap();
        let q = coupled_quadratic(&y, &problem).unwrap();
        let res = nehari_value(&y, &problem).unwrap().abs() / q;
        worst_res = worst_res.max(res);
        ok &= res < 1e-10;
        let top = energy(&y, &problem).unwrap().total;
        for i in 0..=400 {
            let t = 10f64.powf(-1.0 + 2.0 * i as f64 / 400.0);
            if (t - 1.0).abs() <= 1e-3 {
                continue;
            }
            let e = energy(&y.scaled(t), &problem).unwrap().total;
            worst_rise = worst_rise.max(e - top);
            ok &= e < top;
        }
    }

    // f(t) = t³: Q(x) = t² ∫ (x⁺)⁴ on the manifold
    let quartic = constant_problem(grid.clone(), 2.0, 2.0, 0.5, NonlinearitySpec::PurePower { p: 4.0 })
        .build()
        .unwrap();
    let x = positive_state(&grid, 400);
    let q = coupled_quadratic(&x, &quartic).unwrap();
    let quart: f64 = [&x.u, &x.v]
        .iter()
        .map(|f| f.values().iter().map(|v| v.max(0.0).powi(4)).sum::<f64>() * grid.cell_volume())
        .sum();
    let closed = (q / quart).sqrt();
    let (mut lo, mut hi) = (1e-6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q - mid * mid * quart > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bisect = 0.5 * (lo + hi);
    let (t0, _) = nehari_project(&x, &quartic).unwrap();
    let t_err = ((t0 - closed).abs() / closed).max((t0 - bisect).abs() / bisect);
    ok &= t_err < 1e-10;
    verdict(
        4,
        "Nehari projection",
        ok,
        format!(
            "residual {worst_res:.2e} (< 1e-10), max I(t y) - I(y) off t=1 {worst_rise:.3e} (< 0), p=4 t0 error {t_err:.2e} (< 1e-10)"
        ),
    );
}

#[test]
fn criterion_05_monotone_nonquadraticity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    let mut violations = 0;
    for spec in [
        NonlinearitySpec::LogPower { gamma: 1.0 },
        NonlinearitySpec::LogPower { gamma: 2.0 },
        NonlinearitySpec::PurePower { p: 4.0 },
    ] {
        let nl = spec.build().unwrap();
        for _ in 0..1000 {
            let a = 10f64.powf(rng.gen_range(-3.0..3.0));
            let b = 10f64.powf(rng.gen_range(-3.0..3.0));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo == hi {
                continue;
            }
            if !(nl.nonquadraticity(hi) > nl.nonquadraticity(lo)) {
                violations += 1;
                ok = false;
            }
        }
    }
    // independent value of f(t)t - 2F(t) for t ln(1+t) at t = 2:
    // F(2) = (t²-1)/2 ln(1+t) - t²/4 + t/2 = 1.5 ln 3
    let g = 2.0 * 2.0 * 3f64.ln() - 3.0 * 3f64.ln();
    let lib = NonlinearitySpec::LogPower { gamma: 1.0 }.build().unwrap().nonquadraticity(2.0);
    let oracle_err = (lib - g).abs() / g;
    ok &= oracle_err < 1e-13;
    verdict(
        5,
        "monotone f(t)t - 2F(t)",
        ok,
        format!("{violations} violations on 3000 pairs, closed-form spot check error {oracle_err:.1e}"),
    );
}

#[test]
fn criterion_06_mountain_pass_geometry() {
    let problem = constant_problem(desk_grid(), 2.0, 2.0, 0.5, LOG1).build().unwrap();
    let probe = default_init(problem.grid(), 0);
    let d = mountain_pass_diagnostics(&problem, &probe, &SolverOptions::default()).unwrap();
    let ok = d.radii[0] == 1e-4 && d.sphere_min[0] > 0.0 && d.far_negative();
    verdict(
        6,
        "mountain-pass geometry",
        ok,
        format!(
            "min I on sphere 1e-4 = {:.3e} (> 0), I < 0 at t = {:?}",
            d.sphere_min[0], d.negative_at
        ),
    );
}

#[test]
fn criterion_07_level_ordering() {
    let spec = perturbed_problem(desk_grid(), 0.2);
    let opts = SolverOptions {
        restarts: 3,
        ..SolverOptions::default()
    };
    let r = compare_periodic_limit(&spec, &opts).unwrap();
    let ok = r.ordering_holds && r.periodic.converged && r.perturbed.converged;
    verdict(
        7,
        "level ordering",
        ok,
        format!(
            "perturbed {:.10} < periodic {:.10} - margin {:.3e} (converged {} / {})",
            r.level_perturbed, r.level_periodic, r.margin, r.perturbed.converged, r.periodic.converged
        ),
    );
}

#[test]
fn criterion_08_monotone_coupling_map() {
    let spec = constant_problem(desk_grid(), 2.0, 2.0, 1.0, LOG1);
    let delta_max = 1.0 / spec.build().unwrap().effective_delta();
    let scales: Vec<f64> = [0.2, 0.4, 0.6, 0.8].iter().map(|f| f * delta_max).collect();
    let r = lambda_sweep(&spec, &scales, &SolverOptions::default()).unwrap();
    let levels: Vec<String> = r.rows.iter().map(|x| format!("{:.6}", x.level)).collect();
    let ok = r.monotone_decreasing && r.all_converged();
    verdict(
        8,
        "monotone coupling map",
        ok,
        format!("scales {scales:?} give levels [{}]", levels.join(", ")),
    );
}

#[test]
fn criterion_09_vanishing_coupling() {
    let spec = constant_problem(desk_grid(), 2.0, 3.0, 1.0, LOG1);
    let r = theorem_c_limit(&spec, &[0.5, 0.25, 0.1, 0.05, 0.01], &SolverOptions::default()).unwrap();
    let ratio = r.mass_ratio.unwrap_or(f64::INFINITY);
    let dist = r.survivor_distance.unwrap_or(f64::INFINITY);
    let ok = r.survivor == Some(Component::U)
        && ratio < 1e-2
        && dist < 5e-2
        && r.gap_shrinking
        && r.rows.iter().all(|x| x.converged);
    verdict(
        9,
        "vanishing coupling",
        ok,
        format!(
            "survivor {:?}, mass ratio {ratio:.3e} (< 1e-2), L2 distance {dist:.3e} (< 5e-2), gaps {:?}",
            r.survivor, r.level_gaps
        ),
    );
}

#[test]
fn criterion_10_decoupled_consistency() {
    let problem = constant_problem(desk_grid(), 2.0, 3.0, 0.0, LOG1).build().unwrap();
    let opts = SolverOptions::default();
    let coupled = solve_with_restarts(&problem, &opts).unwrap();
    let c1 = solve_scalar_with_restarts(Component::U, &problem, &opts).unwrap();
    let c2 = solve_scalar_with_restarts(Component::V, &problem, &opts).unwrap();
    let c0 = c1.level.min(c2.level);
    let rel = (coupled.level - c0).abs() / c0;
    let ok = rel < 1e-6 && coupled.converged && c1.converged && c2.converged;
    verdict(
        10,
        "decoupled consistency",
        ok,
        format!("level {:.12} vs min({:.12}, {:.12}), relative gap {rel:.2e}", coupled.level, c1.level, c2.level),
    );
}

fn positivity_failure(r: &SolveReport) -> Option<String> {
    let min = r.state.u.min().min(r.state.v.min());
    if !r.converged || min < -1e-12 || r.u_mass() <= 1e-8 || r.v_mass() <= 1e-8 {
        Some(format!(
            "converged {} min {min:.3e} masses {:.3e}/{:.3e}",
            r.converged,
            r.u_mass(),
            r.v_mass()
        ))
    } else {
        None
    }
}

#[test]
fn criterion_11_positivity() {
    let grid = desk_grid();
    let opts = SolverOptions::default();
    let problems = [
        constant_problem(grid.clone(), 2.0, 2.0, 0.5, LOG1),
        constant_problem(grid.clone(), 2.0, 3.0, 0.05, LOG1),
        perturbed_problem(grid.clone(), 0.2),
        constant_problem(grid, 2.0, 2.0, 0.5, NonlinearitySpec::PurePower { p: 4.0 }),
    ];
    let mut failures = Vec::new();
    let mut worst_min = f64::INFINITY;
    for (i, spec) in problems.iter().enumerate() {
        let r = solve_ground_state(&spec.build().unwrap(), None, &opts).unwrap();
        worst_min = worst_min.min(r.state.u.min().min(r.state.v.min()));
        if let Some(f) = positivity_failure(&r) {
            failures.push(format!("problem {i}: {f}"));
        }
    }
    verdict(
        11,
        "positivity",
        failures.is_empty(),
        if failures.is_empty() {
            format!("4 problems, smallest value {worst_min:.3e} (>= -1e-12), both masses > 1e-8")
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_12_determinism() {
    let problem = perturbed_problem(desk_grid(), 0.2).build().unwrap();
    let opts = SolverOptions {
        seed: 7,
        restarts: 3,
        ..SolverOptions::default()
    };
    let a = solve_with_restarts(&problem, &opts).unwrap();
    let b = solve_with_restarts(&problem, &opts).unwrap();
    let single = SolverOptions { restarts: 1, ..opts.clone() };
    let c = solve_ground_state(&problem, None, &single).unwrap();
    let d = solve_ground_state(&problem, None, &single).unwrap();
    let gap = ((a.level - b.level).abs() / a.level.abs()).max((c.level - d.level).abs() / c.level.abs());
    let ok = gap <= 1e-14 && a.state.u.values() == b.state.u.values() && a.seed == b.seed;
    verdict(12, "determinism", ok, format!("relative level difference {gap:.1e} (<= 1e-14)"));
}
