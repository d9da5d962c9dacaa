//! Sampled evidence for the mountain-pass geometry: the energy is positive
//! on a small sphere, negative far out along a positive ray, and the ray
//! maximum sits on the Nehari manifold.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{projection, SolverOptions};
use crate::energy::{energy, product_norm_sq, StatePair};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::Problem;

const DIRECTIONS: usize = 32;
const RADII: usize = 9;
const RAY_SAMPLES: usize = 64;
const MODES: usize = 6;

#[derive(Clone, Debug)]
pub struct DiagnosticsReport {
    /// Log-spaced in `[1e-4, 1]`.
    pub radii: Vec<f64>,
    /// Smallest sampled energy on each sphere `‖(u, v)‖_E = ρ`.
    pub sphere_min: Vec<f64>,
    /// Some sphere has a positive sampled minimum.
    pub small_sphere_positive: bool,
    /// First doubling `T` with `I(T·probe) < 0`.
    pub negative_at: Option<f64>,
    /// `(t, I(t·probe))` on `[0, T]`.
    pub ray_samples: Vec<(f64, f64)>,
    pub ray_max: f64,
    pub ray_argmax: f64,
}

impl DiagnosticsReport {
    pub fn far_negative(&self) -> bool {
        self.negative_at.is_some()
    }

    /// The ray maximum is not below `level` by more than `rel_tol`.
    pub fn consistent_with_level(&self, level: f64, rel_tol: f64) -> bool {
        self.ray_max >= level - rel_tol * level.abs()
    }
}

/// Smooth random field built from a few low Fourier modes.
fn random_smooth(grid: &std::sync::Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let dim = grid.dim();
    let l = grid.box_length();
    let modes: Vec<([f64; 3], f64, f64)> = (0..MODES)
        .map(|_| {
            let mut k = [0.0; 3];
            for slot in k.iter_mut().take(dim) {
                *slot = rng.gen_range(-3i32..=3) as f64;
            }
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let vals = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            modes
                .iter()
                .map(|(k, a, phi)| {
                    let arg: f64 = (0..dim).map(|d| k[d] * x[d]).sum::<f64>() * 2.0 * PI / l;
                    a * (arg + phi).cos()
                })
                .sum::<f64>()
        })
        .collect();
    Field::from_raw(grid.clone(), vals)
}

pub fn mountain_pass_diagnostics(
    problem: &Problem,
    probe: &StatePair,
    opts: &SolverOptions,
) -> Result<DiagnosticsReport> {
    if !probe.in_e_plus() {
        return Err(Error::NotInEPlus);
    }
    let grid = problem.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let directions: Vec<StatePair> = (0..DIRECTIONS)
        .map(|_| {
            let d = StatePair {
                u: random_smooth(grid, &mut rng),
                v: random_smooth(grid, &mut rng),
            };
            let n = product_norm_sq(&d, problem).map(f64::sqrt);
            n.map(|n| d.scaled(1.0 / n))
        })
        .collect::<Result<_>>()?;

    let radii: Vec<f64> = (0..RADII)
        .map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / (RADII - 1) as f64))
        .collect();
    let mut sphere_min = Vec::with_capacity(RADII);
    for &r in &radii {
        let mut m = f64::INFINITY;
        for d in &directions {
            m = m.min(energy(&d.scaled(r), problem)?.total);
        }
        sphere_min.push(m);
    }
    let small_sphere_positive = sphere_min.iter().any(|&m| m > 0.0);

    let ray = |t: f64| energy(&probe.scaled(t), problem).map(|e| e.total);
    let mut big_t = 1.0;
    let mut negative_at = None;
    while big_t <= 1.152_921_504_606_847e18 {
        if ray(big_t)? < 0.0 {
            negative_at = Some(big_t);
            break;
        }
        big_t *= 2.0;
    }
    let span = negative_at.unwrap_or(1.0);
    let ray_samples = (0..=RAY_SAMPLES)
        .map(|i| {
            let t = span * i as f64 / RAY_SAMPLES as f64;
            ray(t).map(|e| (t, e))
        })
        .collect::<Result<Vec<_>>>()?;

    let (t0, top) = projection::nehari_project(probe, problem)?;
    let ray_max = energy(&top, problem)?.total;

    Ok(DiagnosticsReport {
        radii,
        sphere_min,
        small_sphere_positive,
        negative_at,
        ray_samples,
        ray_max,
        ray_argmax: t0,
    })
}
