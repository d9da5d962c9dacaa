//! Energy functional, gradient, coupled quadratic form and Nehari function.
//!
//! With `Q(u, v) = ‖u‖²_{E1} + ‖v‖²_{E2} - 2∫λuv` the energy is
//! `I(u, v) = Q/2 - ∫F1(u) - ∫F2(v)` and the Nehari function is
//! `⟨I'(u, v), (u, v)⟩ = Q - ∫(f1(u)u + f2(v)v)`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::model::{Component, Problem};

/// The pair `(u, v)` the energy acts on.
#[derive(Clone, Debug)]
pub struct StatePair {
    pub u: Field,
    pub v: Field,
}

impl StatePair {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        u.check_grid(&v)?;
        Ok(StatePair { u, v })
    }

    pub fn zeros(grid: &std::sync::Arc<crate::grid::Grid>) -> Self {
        StatePair {
            u: Field::zeros(grid),
            v: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &std::sync::Arc<crate::grid::Grid> {
        self.u.grid()
    }

    pub fn component(&self, which: Component) -> &Field {
        match which {
            Component::U => &self.u,
            Component::V => &self.v,
        }
    }

    pub fn scaled(&self, t: f64) -> StatePair {
        StatePair {
            u: self.u.scaled(t),
            v: self.v.scaled(t),
        }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &StatePair, b: f64) -> Result<StatePair> {
        Ok(StatePair {
            u: self.u.combine(a, &other.u, b)?,
            v: self.v.combine(a, &other.v, b)?,
        })
    }

    pub fn positive_part(&self) -> StatePair {
        StatePair {
            u: self.u.positive_part(),
            v: self.v.positive_part(),
        }
    }

    /// Some component has a nontrivial positive part.
    pub fn in_e_plus(&self) -> bool {
        self.u.has_positive_part() || self.v.has_positive_part()
    }

    /// `sqrt(∫u² + ∫v²)`
    pub fn l2_norm(&self) -> f64 {
        (self.u.mass() + self.v.mass()).sqrt()
    }

    fn check(&self, problem: &Problem) -> Result<()> {
        self.u.check_grid(&self.v)?;
        if !self.u.grid().as_ref().eq(problem.grid().as_ref()) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    /// `‖u‖²_{E1}`
    pub quad_u: f64,
    /// `‖v‖²_{E2}`
    pub quad_v: f64,
    /// `2∫λuv`
    pub coupling_term: f64,
    pub f1_integral: f64,
    pub f2_integral: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn quadratic(&self) -> f64 {
        self.quad_u + self.quad_v - self.coupling_term
    }
}

/// Fourier coefficients of both components.
#[derive(Clone, Debug)]
pub(crate) struct Spectra {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

pub(crate) fn spectra(state: &StatePair) -> Spectra {
    let (u, v) = state.grid().forward_pair(state.u.values(), state.v.values());
    Spectra { u, v }
}

/// Kinetic parts `∫ a·(-Δ)^{s} b` of both components.
fn kinetic(problem: &Problem, a: &Spectra, b: &Spectra) -> (f64, f64) {
    let g = problem.grid();
    (
        g.spectral_form(&a.u, &b.u, problem.symbol(Component::U)),
        g.spectral_form(&a.v, &b.v, problem.symbol(Component::V)),
    )
}

/// Symmetric bilinear form with `B(x, x) = Q(x)`.
pub(crate) fn bilinear(problem: &Problem, a: &StatePair, ah: &Spectra, b: &StatePair, bh: &Spectra) -> f64 {
    let (ku, kv) = kinetic(problem, ah, bh);
    let v1 = problem.potential(Component::U).values();
    let v2 = problem.potential(Component::V).values();
    let lam = problem.coupling().values();
    let (au, av) = (a.u.values(), a.v.values());
    let (bu, bv) = (b.u.values(), b.v.values());
    let mut acc = 0.0;
    for i in 0..au.len() {
        acc += v1[i] * au[i] * bu[i] + v2[i] * av[i] * bv[i] - lam[i] * (au[i] * bv[i] + av[i] * bu[i]);
    }
    ku + kv + acc * problem.grid().cell_volume()
}

fn breakdown_with(problem: &Problem, state: &StatePair, sp: &Spectra) -> EnergyBreakdown {
    let (ku, kv) = kinetic(problem, sp, sp);
    let cv = problem.grid().cell_volume();
    let v1 = problem.potential(Component::U).values();
    let v2 = problem.potential(Component::V).values();
    let lam = problem.coupling().values();
    let nl1 = problem.nonlinearity(Component::U);
    let nl2 = problem.nonlinearity(Component::V);
    let (u, v) = (state.u.values(), state.v.values());
    let (mut pu, mut pv, mut c, mut f1, mut f2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..u.len() {
        pu += v1[i] * u[i] * u[i];
        pv += v2[i] * v[i] * v[i];
        c += lam[i] * u[i] * v[i];
        f1 += nl1.antiderivative(u[i]);
        f2 += nl2.antiderivative(v[i]);
    }
    let quad_u = ku + pu * cv;
    let quad_v = kv + pv * cv;
    let coupling_term = 2.0 * c * cv;
    let f1_integral = f1 * cv;
    let f2_integral = f2 * cv;
    EnergyBreakdown {
        quad_u,
        quad_v,
        coupling_term,
        f1_integral,
        f2_integral,
        total: 0.5 * (quad_u + quad_v - coupling_term) - f1_integral - f2_integral,
    }
}

/// `I_λ(u, v)` term by term.
pub fn energy(state: &StatePair, problem: &Problem) -> Result<EnergyBreakdown> {
    state.check(problem)?;
    Ok(breakdown_with(problem, state, &spectra(state)))
}

/// `Q(u, v) = ‖(u, v)‖²_E - 2∫λuv`.
pub fn coupled_quadratic(state: &StatePair, problem: &Problem) -> Result<f64> {
    state.check(problem)?;
    let sp = spectra(state);
    Ok(bilinear(problem, state, &sp, state, &sp))
}

/// `‖(u, v)‖²_E = ‖u‖²_{E1} + ‖v‖²_{E2}` (no coupling).
pub fn product_norm_sq(state: &StatePair, problem: &Problem) -> Result<f64> {
    let b = energy(state, problem)?;
    Ok(b.quad_u + b.quad_v)
}

/// `∫(f1(u)u + f2(v)v)`
pub(crate) fn nonlinear_pairing(problem: &Problem, state: &StatePair) -> f64 {
    let nl1 = problem.nonlinearity(Component::U);
    let nl2 = problem.nonlinearity(Component::V);
    let s: f64 = state
        .u
        .values()
        .iter()
        .zip(state.v.values())
        .map(|(&u, &v)| nl1.f(u) * u + nl2.f(v) * v)
        .sum();
    s * problem.grid().cell_volume()
}

/// `⟨I'(u, v), (u, v)⟩`; zero on the Nehari manifold.
pub fn nehari_value(state: &StatePair, problem: &Problem) -> Result<f64> {
    Ok(coupled_quadratic(state, problem)? - nonlinear_pairing(problem, state))
}

/// Gradient at a state together with the data the solver reuses.
pub(crate) struct Evaluation {
    pub spectra: Spectra,
    pub breakdown: EnergyBreakdown,
    pub grad: StatePair,
    pub precond: StatePair,
}

pub(crate) fn evaluate(problem: &Problem, state: &StatePair) -> Evaluation {
    let grid = problem.grid();
    let sp = spectra(state);
    let breakdown = breakdown_with(problem, state, &sp);
    let apply = |c: &[Complex64], sym: &[f64]| -> Vec<Complex64> {
        c.iter().zip(sym).map(|(z, m)| z * m).collect()
    };
    let (ku, kv) = grid.inverse_pair(
        &apply(&sp.u, problem.symbol(Component::U)),
        &apply(&sp.v, problem.symbol(Component::V)),
    );
    let v1 = problem.potential(Component::U).values();
    let v2 = problem.potential(Component::V).values();
    let lam = problem.coupling().values();
    let nl1 = problem.nonlinearity(Component::U);
    let nl2 = problem.nonlinearity(Component::V);
    let (u, v) = (state.u.values(), state.v.values());
    let gu: Vec<f64> = (0..u.len())
        .map(|i| ku[i] + v1[i] * u[i] - nl1.f(u[i]) - lam[i] * v[i])
        .collect();
    let gv: Vec<f64> = (0..u.len())
        .map(|i| kv[i] + v2[i] * v[i] - nl2.f(v[i]) - lam[i] * u[i])
        .collect();

    let (mut gu_hat, mut gv_hat) = grid.forward_pair(&gu, &gv);
    let (m1, m2) = (
        problem.mean_potential(Component::U),
        problem.mean_potential(Component::V),
    );
    for (z, s) in gu_hat.iter_mut().zip(problem.symbol(Component::U)) {
        *z /= s + m1;
    }
    for (z, s) in gv_hat.iter_mut().zip(problem.symbol(Component::V)) {
        *z /= s + m2;
    }
    let (pu, pv) = grid.inverse_pair(&gu_hat, &gv_hat);
    Evaluation {
        spectra: sp,
        breakdown,
        grad: StatePair {
            u: Field::from_raw(grid.clone(), gu),
            v: Field::from_raw(grid.clone(), gv),
        },
        precond: StatePair {
            u: Field::from_raw(grid.clone(), pu),
            v: Field::from_raw(grid.clone(), pv),
        },
    }
}

/// L² representative of `I'(u, v)`. With `preconditioned` each component is
/// divided modewise by `|ξ|^{2s_i} + mean(V_i)`.
pub fn gradient(state: &StatePair, problem: &Problem, preconditioned: bool) -> Result<StatePair> {
    state.check(problem)?;
    let e = evaluate(problem, state);
    Ok(if preconditioned { e.precond } else { e.grad })
}

/// `I(x + d) - I(x)` evaluated as `B(d, x) + B(d, d)/2 - ∫(F(x + d) - F(x))`,
/// which stays accurate when `d` is far below the rounding level of `x`.
pub(crate) fn change_by(problem: &Problem, x: &StatePair, xh: &Spectra, d: &StatePair) -> f64 {
    let dh = spectra(d);
    let quad = bilinear(problem, d, &dh, x, xh) + 0.5 * bilinear(problem, d, &dh, d, &dh);
    let nl1 = problem.nonlinearity(Component::U);
    let nl2 = problem.nonlinearity(Component::V);
    let (xu, xv) = (x.u.values(), x.v.values());
    let (du, dv) = (d.u.values(), d.v.values());
    let mut df = 0.0;
    for i in 0..xu.len() {
        df += nl1.increment_by(xu[i], du[i]) + nl2.increment_by(xv[i], dv[i]);
    }
    quad - df * problem.grid().cell_volume()
}

/// `I(to) - I(from)` without subtracting two nearly equal energies.
pub fn energy_change(from: &StatePair, to: &StatePair, problem: &Problem) -> Result<f64> {
    from.check(problem)?;
    to.check(problem)?;
    let d = to.combine(1.0, from, -1.0)?;
    Ok(change_by(problem, from, &spectra(from), &d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::model::{NonlinearitySpec, ProblemSpec, ScalarFunctionSpec};
    use std::f64::consts::PI;

    fn problem(lambda: f64) -> Problem {
        ProblemSpec {
            grid: make_grid(2, 16, 4.0).unwrap(),
            s1: 0.6,
            s2: 0.8,
            v1: ScalarFunctionSpec::periodic_trig(2.0, 0.5, vec![1]),
            v2: ScalarFunctionSpec::constant(1.5),
            coupling: ScalarFunctionSpec::constant(lambda),
            nl1: NonlinearitySpec::LogPower { gamma: 1.0 },
            nl2: NonlinearitySpec::PurePower { p: 3.0 },
            periodic_reference: false,
        }
        .build()
        .unwrap()
    }

    fn bumps(p: &Problem, a: f64, b: f64) -> StatePair {
        let g = p.grid();
        let c = g.center();
        let u = Field::from_fn(g, |x| a * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp()).unwrap();
        let v = Field::from_fn(g, |x| b * (-(x[0] - c[0]).powi(2) - 2.0 * (x[1] - c[1]).powi(2)).exp()).unwrap();
        StatePair::new(u, v).unwrap()
    }

    #[test]
    fn zero_state() {
        let p = problem(0.3);
        let z = StatePair::zeros(p.grid());
        assert_eq!(energy(&z, &p).unwrap().total, 0.0);
        assert_eq!(nehari_value(&z, &p).unwrap(), 0.0);
        assert_eq!(coupled_quadratic(&z, &p).unwrap(), 0.0);
        let g = gradient(&z, &p, true).unwrap();
        assert_eq!(g.l2_norm(), 0.0);
    }

    #[test]
    fn decoupled_scalar_energy() {
        let p = problem(0.0);
        let mut x = bumps(&p, 1.3, 0.0);
        x.v = Field::zeros(p.grid());
        let e = energy(&x, &p).unwrap();
        // the paired transform leaks round-off from u into v
        assert!(e.quad_v.abs() < 1e-25);
        assert_eq!(e.coupling_term, 0.0);
        assert!((e.total - (0.5 * e.quad_u - e.f1_integral)).abs() < 1e-14 * e.total.abs());
    }

    #[test]
    fn change_matches_difference() {
        let p = problem(0.4);
        let a = bumps(&p, 1.0, 2.0);
        let b = bumps(&p, 1.4, 1.1);
        let direct = energy(&b, &p).unwrap().total - energy(&a, &p).unwrap().total;
        let diff = energy_change(&a, &b, &p).unwrap();
        assert!((direct - diff).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn preconditioner_on_single_mode() {
        // λ = 0, V ≡ 1, s = 1 and an amplitude small enough that f is negligible
        let l = 2.0;
        let p = ProblemSpec {
            grid: make_grid(1, 16, l).unwrap(),
            s1: 1.0,
            s2: 1.0,
            v1: ScalarFunctionSpec::constant(1.0),
            v2: ScalarFunctionSpec::constant(1.0),
            coupling: ScalarFunctionSpec::constant(0.0),
            nl1: NonlinearitySpec::PurePower { p: 4.0 },
            nl2: NonlinearitySpec::PurePower { p: 4.0 },
            periodic_reference: false,
        }
        .build()
        .unwrap();
        let eps = 1e-6;
        let u = Field::from_fn(p.grid(), |x| eps * (2.0 * PI * x[0] / l).sin()).unwrap();
        let x = StatePair::new(u.clone(), Field::zeros(p.grid())).unwrap();
        let lam = (2.0 * PI / l).powi(2) + 1.0;
        let g = gradient(&x, &p, false).unwrap();
        for (gi, ui) in g.u.values().iter().zip(u.values()) {
            assert!((gi - lam * ui).abs() < 1e-12 * eps * lam);
        }
        // the preconditioner inverts the linear part exactly here
        let pg = gradient(&x, &p, true).unwrap();
        for (gi, ui) in pg.u.values().iter().zip(u.values()) {
            assert!((gi - ui).abs() < 1e-12 * eps);
        }
    }
}
