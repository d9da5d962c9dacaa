#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nehari_core::energy::StatePair;
use nehari_core::grid::{make_grid, Field, Grid};
use nehari_core::model::{NonlinearitySpec, ProblemSpec, ScalarFunctionSpec};

pub const LOG1: NonlinearitySpec = NonlinearitySpec::LogPower { gamma: 1.0 };

pub fn desk_grid() -> Arc<Grid> {
    make_grid(2, 64, 8.0).unwrap()
}

pub fn constant_problem(grid: Arc<Grid>, v1: f64, v2: f64, lambda: f64, nl: NonlinearitySpec) -> ProblemSpec {
    ProblemSpec {
        grid,
        s1: 0.75,
        s2: 0.75,
        v1: ScalarFunctionSpec::constant(v1),
        v2: ScalarFunctionSpec::constant(v2),
        coupling: ScalarFunctionSpec::constant(lambda),
        nl1: nl,
        nl2: nl,
        periodic_reference: false,
    }
}

/// Periodic potentials with a centered well, lowered by a Gaussian dip,
/// and a coupling raised by a Gaussian bump.
pub fn perturbed_problem(grid: Arc<Grid>, amplitude: f64) -> ProblemSpec {
    let v = ScalarFunctionSpec::periodic_trig(2.0, 0.2, vec![1]).with_perturbation(-amplitude, 0.5);
    ProblemSpec {
        grid,
        s1: 0.75,
        s2: 0.75,
        v1: v.clone(),
        v2: v,
        coupling: ScalarFunctionSpec::periodic_trig(0.5, 0.0, vec![1]).with_perturbation(amplitude, 0.5),
        nl1: LOG1,
        nl2: LOG1,
        periodic_reference: false,
    }
}

/// Sum of a few random low Fourier modes.
pub fn smooth_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let l = grid.box_length();
    let dim = grid.dim();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..5)
        .map(|_| {
            let k = (0..dim).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    Field::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(k, a, p)| {
                let arg: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() * 2.0 * PI / l;
                a * (arg + p).cos()
            })
            .sum()
    })
    .unwrap()
}

/// Strictly positive smooth field of order one.
pub fn positive_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let f = smooth_field(grid, rng);
    Field::new(grid.clone(), f.values().iter().map(|v| (0.5 * v).exp()).collect()).unwrap()
}

pub fn positive_state(grid: &Arc<Grid>, seed: u64) -> StatePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StatePair::new(positive_field(grid, &mut rng), positive_field(grid, &mut rng)).unwrap()
}

pub fn signed_state(grid: &Arc<Grid>, seed: u64) -> StatePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StatePair::new(smooth_field(grid, &mut rng), smooth_field(grid, &mut rng)).unwrap()
}

/// `∫ a·b` summed over both components.
pub fn pair_dot(a: &StatePair, b: &StatePair) -> f64 {
    a.u.dot(&b.u).unwrap() + a.v.dot(&b.v).unwrap()
}
