//! Ground states by projected preconditioned gradient descent on the
//! Nehari manifold.
//!
//! Each iteration steps along the preconditioned gradient (with
//! Polak-Ribière momentum while it remains a descent direction), optionally
//! clips negative values, rescales the trial state back onto the manifold
//! along its ray and accepts it only if the energy strictly decreases. Energy
//! differences are evaluated in difference form so the acceptance test
//! stays meaningful after the level itself has converged to round-off.

mod diagnostics;
mod projection;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{bilinear, change_by, evaluate, nonlinear_pairing, spectra, Evaluation, StatePair};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::{validate_assumptions, CheckStatus, Component, Problem};

pub use diagnostics::{mountain_pass_diagnostics, DiagnosticsReport};
pub use projection::nehari_project;

/// Step sizes grow by 2 after every accepted step, up to this multiple of
/// `step_init`.
const STEP_GROWTH_CAP: f64 = 16.0;
const MIN_STEP_RATIO: f64 = 1e-14;
/// Below this relative size the energy change is recomputed in difference form.
const DIRECT_DIFFERENCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub step_init: f64,
    pub backtrack_factor: f64,
    /// Relative energy decrease of the last accepted step.
    pub tol_energy: f64,
    /// `‖P∇I‖₂ / ‖x‖₂` with `P` the Fourier preconditioner.
    pub tol_residual: f64,
    /// `|⟨I'(x), x⟩| / Q(x)` expected after projection.
    pub tol_nehari: f64,
    pub seed: u64,
    pub positivity_clip: bool,
    /// Independent cold starts (seeds `seed`, `seed + 1`, ...) used by the
    /// restart driver and the experiments.
    pub restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 5000,
            step_init: 1.0,
            backtrack_factor: 0.5,
            tol_energy: 1e-10,
            tol_residual: 1e-8,
            tol_nehari: 1e-10,
            seed: 0,
            positivity_clip: true,
            restarts: 1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return Err(Error::param("step_init", "must be positive"));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::param("backtrack_factor", "must lie in (0, 1)"));
        }
        for (name, v) in [
            ("tol_energy", self.tol_energy),
            ("tol_residual", self.tol_residual),
            ("tol_nehari", self.tol_nehari),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub state: StatePair,
    pub level: f64,
    /// `|⟨I'(x), x⟩| / Q(x)`
    pub nehari_residual: f64,
    pub gradient_residual: f64,
    pub iterations: usize,
    /// Share of points with `|u| > 1e-12` where `u > 0`; zero when the
    /// component vanishes.
    pub positive_fraction_u: f64,
    pub positive_fraction_v: f64,
    pub converged: bool,
    /// The line search could not find a decreasing step.
    pub stalled: bool,
    pub t_history: Vec<f64>,
    /// Energy after the projected initial state and after every accepted step.
    pub energy_history: Vec<f64>,
    /// Accurately evaluated energy change of every accepted step.
    pub decrease_history: Vec<f64>,
    pub seed: u64,
    pub restarts: usize,
}

impl SolveReport {
    pub fn u_mass(&self) -> f64 {
        self.state.u.mass()
    }

    pub fn v_mass(&self) -> f64 {
        self.state.v.mass()
    }
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "converged          = {}", self.converged)?;
        writeln!(f, "level              = {:.16e}", self.level)?;
        writeln!(f, "nehari_residual    = {:.6e}", self.nehari_residual)?;
        writeln!(f, "gradient_residual  = {:.6e}", self.gradient_residual)?;
        writeln!(f, "iterations         = {}", self.iterations)?;
        writeln!(f, "line_search_stall  = {}", self.stalled)?;
        writeln!(f, "positive_fraction  = {:.6} / {:.6}", self.positive_fraction_u, self.positive_fraction_v)?;
        writeln!(f, "u_mass             = {:.16e}", self.u_mass())?;
        writeln!(f, "v_mass             = {:.16e}", self.v_mass())?;
        writeln!(f, "min u, min v       = {:.6e}, {:.6e}", self.state.u.min(), self.state.v.min())?;
        writeln!(f, "seed               = {}", self.seed)?;
        write!(f, "restarts           = {}", self.restarts)
    }
}

/// Centered Gaussian bumps `exp(-|x - c|²/w²)` with `w = L/8`; the seed
/// jitters amplitude and width of each component by up to 10%.
pub fn default_init(grid: &std::sync::Arc<Grid>, seed: u64) -> StatePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = grid.center();
    let dim = grid.dim();
    let base_w = grid.box_length() / 8.0;
    let bump = |rng: &mut ChaCha8Rng| {
        let amp = 1.0 + 0.1 * rng.gen_range(-1.0..1.0);
        let w = base_w * (1.0 + 0.1 * rng.gen_range(-1.0..1.0));
        let vals = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                let r2: f64 = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
                amp * (-r2 / (w * w)).exp()
            })
            .collect();
        Field::from_raw(grid.clone(), vals)
    };
    let u = bump(&mut rng);
    let v = bump(&mut rng);
    StatePair { u, v }
}

fn positive_fraction(f: &Field) -> f64 {
    let (mut pos, mut support) = (0usize, 0usize);
    for &x in f.values() {
        if x.abs() > 1e-12 {
            support += 1;
            if x > 0.0 {
                pos += 1;
            }
        }
    }
    if support == 0 {
        0.0
    } else {
        pos as f64 / support as f64
    }
}

fn masked_norm(x: &StatePair, mask: [bool; 2]) -> f64 {
    let mut m = 0.0;
    if mask[0] {
        m += x.u.mass();
    }
    if mask[1] {
        m += x.v.mass();
    }
    m.sqrt()
}

fn require_valid(problem: &Problem, ignore_coupling: bool) -> Result<()> {
    let report = validate_assumptions(problem.spec());
    let failures: Vec<String> = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .filter(|c| !(ignore_coupling && matches!(c.name, "V2" | "V4")))
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::ValidationFailed(failures.join("; ")))
    }
}

fn masked(x: &StatePair, mask: [bool; 2]) -> StatePair {
    let grid = x.grid();
    StatePair {
        u: if mask[0] { x.u.clone() } else { Field::zeros(grid) },
        v: if mask[1] { x.v.clone() } else { Field::zeros(grid) },
    }
}

fn dot(a: &StatePair, b: &StatePair) -> f64 {
    crate::grid::dot_values(a.u.values(), b.u.values()) + crate::grid::dot_values(a.v.values(), b.v.values())
}

struct Trial {
    t: f64,
    d: StatePair,
    delta: f64,
}

/// Moves from `x` to the projection of `clip(x + η·dir)`.
///
/// The step `d` is formed as `(t - 1)x + tη·dir` instead of as a difference
/// of states, so it keeps full relative accuracy however small it is. The
/// energy change is taken from the two levels when it is large and from
/// the difference form otherwise.
#[allow(clippy::too_many_arguments)]
fn trial(
    problem: &Problem,
    x: &StatePair,
    eval: &Evaluation,
    dir: &StatePair,
    eta: f64,
    mask: [bool; 2],
    clip: bool,
) -> Result<Trial> {
    let grid = x.grid();
    let step = |xs: &[f64], ps: &[f64], on: bool| -> Vec<f64> {
        xs.iter()
            .zip(ps)
            .map(|(&xi, &pi)| {
                if !on {
                    return 0.0;
                }
                let yi = xi + eta * pi;
                if clip && yi < 0.0 {
                    0.0
                } else {
                    yi
                }
            })
            .collect()
    };
    let y = StatePair {
        u: Field::from_raw(grid.clone(), step(x.u.values(), dir.u.values(), mask[0])),
        v: Field::from_raw(grid.clone(), step(x.v.values(), dir.v.values(), mask[1])),
    };
    let yh = spectra(&y);
    let q = bilinear(problem, &y, &yh, &y, &yh);
    let t = projection::ray_scale(problem, &y, q)?;

    let diff = |xs: &[f64], ps: &[f64], ys: &[f64]| -> Vec<f64> {
        xs.iter()
            .zip(ps)
            .zip(ys)
            .map(|((&xi, &pi), &yi)| {
                if yi == 0.0 {
                    -xi
                } else {
                    (t - 1.0) * xi + t * eta * pi
                }
            })
            .collect()
    };
    let d = StatePair {
        u: Field::from_raw(grid.clone(), diff(x.u.values(), dir.u.values(), y.u.values())),
        v: Field::from_raw(grid.clone(), diff(x.v.values(), dir.v.values(), y.v.values())),
    };

    let level = eval.breakdown.total;
    let nl1 = problem.nonlinearity(Component::U);
    let nl2 = problem.nonlinearity(Component::V);
    let mut big_f = 0.0;
    for i in 0..grid.len() {
        big_f += nl1.antiderivative(x.u.values()[i] + d.u.values()[i])
            + nl2.antiderivative(x.v.values()[i] + d.v.values()[i]);
    }
    let direct = 0.5 * t * t * q - big_f * grid.cell_volume() - level;
    let delta = if direct.abs() > DIRECT_DIFFERENCE_FLOOR * level.abs() {
        direct
    } else {
        change_by(problem, x, &eval.spectra, &d)
    };
    Ok(Trial { t, d, delta })
}

/// Backtracking from `eta` along `dir`; `None` once the step underflows.
fn line_search(
    problem: &Problem,
    x: &StatePair,
    eval: &Evaluation,
    dir: &StatePair,
    eta: &mut f64,
    mask: [bool; 2],
    opts: &SolverOptions,
) -> Result<Option<Trial>> {
    loop {
        match trial(problem, x, eval, dir, *eta, mask, opts.positivity_clip) {
            Ok(tr) if tr.delta < 0.0 => return Ok(Some(tr)),
            Ok(_) | Err(Error::NotInEPlus) | Err(Error::BracketFailure { .. }) => {}
            Err(e) => return Err(e),
        }
        *eta *= opts.backtrack_factor;
        if *eta < MIN_STEP_RATIO * opts.step_init {
            return Ok(None);
        }
    }
}

fn descend(problem: &Problem, init: StatePair, mask: [bool; 2], opts: &SolverOptions) -> Result<SolveReport> {
    let grid = problem.grid().clone();
    if !init.u.grid().as_ref().eq(grid.as_ref()) || !init.v.grid().as_ref().eq(grid.as_ref()) {
        return Err(Error::GridMismatch);
    }
    let init = masked(&init, mask);
    let init = if opts.positivity_clip { init.positive_part() } else { init };
    let (t0, mut x) = nehari_project(&init, problem)?;

    let mut t_history = vec![t0];
    let mut eval = evaluate(problem, &x);
    let mut energy_history = vec![eval.breakdown.total];
    let mut decrease_history = Vec::new();
    let mut eta = opts.step_init;
    let eta_max = STEP_GROWTH_CAP * opts.step_init;
    let mut last_rel = f64::INFINITY;
    let mut iterations = 0;
    let mut stalled = false;
    // previous direction, gradient and <G, PG>
    let mut memory: Option<(StatePair, StatePair, f64)> = None;

    let residual = |eval: &Evaluation, x: &StatePair| {
        let n = masked_norm(x, mask);
        if n > 0.0 {
            masked_norm(&eval.precond, mask) / n
        } else {
            f64::INFINITY
        }
    };

    while iterations < opts.max_iters {
        let res = residual(&eval, &x);
        if res < opts.tol_residual && last_rel < opts.tol_energy {
            break;
        }
        let g = masked(&eval.grad, mask);
        let pg = masked(&eval.precond, mask);
        let gpg = dot(&g, &pg);
        let steepest = pg.scaled(-1.0);
        let mut dir = steepest.clone();
        let mut momentum = false;
        if let Some((prev_dir, prev_g, prev_gpg)) = &memory {
            let beta = ((gpg - dot(prev_g, &pg)) / prev_gpg).max(0.0);
            if beta > 0.0 {
                let candidate = steepest.combine(1.0, prev_dir, beta)?;
                if dot(&g, &candidate) < 0.0 {
                    dir = candidate;
                    momentum = true;
                }
            }
        }
        let mut accepted = line_search(problem, &x, &eval, &dir, &mut eta, mask, opts)?;
        if accepted.is_none() && momentum {
            dir = steepest;
            eta = opts.step_init;
            accepted = line_search(problem, &x, &eval, &dir, &mut eta, mask, opts)?;
        }
        let Some(Trial { t, d, delta }) = accepted else {
            stalled = true;
            break;
        };
        x = x.combine(1.0, &d, 1.0)?;
        memory = Some((dir, g, gpg));
        eval = evaluate(problem, &x);
        iterations += 1;
        t_history.push(t);
        energy_history.push(eval.breakdown.total);
        decrease_history.push(delta);
        last_rel = -delta / eval.breakdown.total.abs().max(f64::MIN_POSITIVE);
        eta = (2.0 * eta).min(eta_max);
    }

    let gradient_residual = residual(&eval, &x);
    let q = eval.breakdown.quadratic();
    let nehari_residual = (q - nonlinear_pairing(problem, &x)).abs() / q;
    let converged = gradient_residual < opts.tol_residual && last_rel < opts.tol_energy;
    Ok(SolveReport {
        level: eval.breakdown.total,
        nehari_residual,
        gradient_residual,
        iterations,
        positive_fraction_u: positive_fraction(&x.u),
        positive_fraction_v: positive_fraction(&x.v),
        converged,
        stalled,
        t_history,
        energy_history,
        decrease_history,
        seed: opts.seed,
        restarts: 1,
        state: x,
    })
}

/// Minimizes the energy over the Nehari manifold from `init`, or from
/// [`default_init`] with `opts.seed`.
pub fn solve_ground_state(problem: &Problem, init: Option<&StatePair>, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    require_valid(problem, false)?;
    let init = match init {
        Some(s) => {
            if !s.in_e_plus() {
                return Err(Error::NotInEPlus);
            }
            s.clone()
        }
        None => default_init(problem.grid(), opts.seed),
    };
    descend(problem, init, [true, true], opts)
}

/// Ground state of the scalar equation for one component; the other
/// component is kept identically zero, so the coupling drops out.
pub fn solve_scalar_ground_state(which: Component, problem: &Problem, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    require_valid(problem, true)?;
    let mask = match which {
        Component::U => [true, false],
        Component::V => [false, true],
    };
    descend(problem, default_init(problem.grid(), opts.seed), mask, opts)
}

/// Keeps the best of several runs: converged runs first, then lowest level.
fn best_of(mut runs: Vec<SolveReport>) -> SolveReport {
    let n = runs.len();
    runs.sort_by(|a, b| {
        b.converged
            .cmp(&a.converged)
            .then(a.level.total_cmp(&b.level))
            .then(a.seed.cmp(&b.seed))
    });
    let mut best = runs.swap_remove(0);
    best.restarts = n;
    best
}

fn seeds(opts: &SolverOptions) -> Vec<SolverOptions> {
    (0..opts.restarts as u64)
        .map(|k| SolverOptions {
            seed: opts.seed.wrapping_add(k),
            ..opts.clone()
        })
        .collect()
}

/// `opts.restarts` cold starts in parallel; returns the best one.
pub fn solve_with_restarts(problem: &Problem, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let runs = seeds(opts)
        .par_iter()
        .map(|o| solve_ground_state(problem, None, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(best_of(runs))
}

/// Scalar analogue of [`solve_with_restarts`].
pub fn solve_scalar_with_restarts(which: Component, problem: &Problem, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let runs = seeds(opts)
        .par_iter()
        .map(|o| solve_scalar_ground_state(which, problem, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(best_of(runs))
}
