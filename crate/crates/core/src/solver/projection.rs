//! Scaling a ray onto the Nehari manifold.
//!
//! For `y` with a positive part, `ψ(t) = Q(y) - ∫ f(ty)y / t` is strictly
//! decreasing when `f(τ)/τ` is increasing, positive near 0 and negative for
//! large `t`. Newton steps start from `t = 1`; whenever a step leaves the
//! current bracket the bracket is doubled, halved or bisected instead.

use crate::energy::{coupled_quadratic, StatePair};
use crate::error::{Error, Result};
use crate::model::{Component, Problem};

const BRACKET_LIMIT: f64 = 1.152_921_504_606_847e18; // 2^60
const MAX_STEPS: usize = 200;

/// `(ψ(t), ψ'(t))` along the ray through `y`.
fn psi(problem: &Problem, y: &StatePair, q: f64, t: f64) -> (f64, f64) {
    let nl1 = problem.nonlinearity(Component::U);
    let nl2 = problem.nonlinearity(Component::V);
    let (mut s, mut ds) = (0.0, 0.0);
    for (nl, vals) in [(nl1, y.u.values()), (nl2, y.v.values())] {
        for &yi in vals {
            if yi > 0.0 {
                let (f, fp) = nl.value_and_derivative(t * yi);
                s += f * yi;
                ds += (fp * t * yi - f) * yi;
            }
        }
    }
    let cv = problem.grid().cell_volume();
    (q - cv * s / t, -cv * ds / (t * t))
}

/// Root of `ψ` for the ray through `y`, given `q = Q(y)`.
pub(crate) fn ray_scale(problem: &Problem, y: &StatePair, q: f64) -> Result<f64> {
    if !y.in_e_plus() {
        return Err(Error::NotInEPlus);
    }
    if !(q > 0.0) {
        return Err(Error::BracketFailure { t: 0.0 });
    }
    // Bracket [lo, hi] with ψ(lo) > 0 > ψ(hi); either end may still be open.
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut t = 1.0;
    for _ in 0..MAX_STEPS {
        let (p, dp) = psi(problem, y, q, t);
        if p == 0.0 {
            return Ok(t);
        }
        if p > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - p / dp;
        let next = if dp < 0.0 && newton > lo && newton < hi {
            newton
        } else if hi.is_infinite() {
            2.0 * lo
        } else if lo == 0.0 {
            0.5 * hi
        } else {
            0.5 * (lo + hi)
        };
        if next > BRACKET_LIMIT {
            return Err(Error::BracketFailure { t: next });
        }
        if next < 1.0 / (BRACKET_LIMIT * BRACKET_LIMIT * BRACKET_LIMIT) {
            return Err(Error::BracketFailure { t: next });
        }
        let step = (next - t).abs();
        t = next;
        if step <= 4.0 * f64::EPSILON * t || (hi.is_finite() && hi - lo <= 2.0 * f64::EPSILON * hi) {
            return Ok(t);
        }
    }
    Ok(t)
}

/// Unique `t0 > 0` with `t0·state` on the Nehari manifold, and that point.
pub fn nehari_project(state: &StatePair, problem: &Problem) -> Result<(f64, StatePair)> {
    if !state.in_e_plus() {
        return Err(Error::NotInEPlus);
    }
    let q = coupled_quadratic(state, problem)?;
    let t = ray_scale(problem, state, q)?;
    Ok((t, state.scaled(t)))
}
