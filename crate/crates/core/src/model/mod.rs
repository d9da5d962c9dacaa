//! Problem description: potentials, coupling, nonlinearities.
//!
//! [`ProblemSpec`] is the declarative description (what the config file
//! holds); [`Problem`] is the same system sampled on its grid with the
//! Fourier symbols and nonlinearity tables built once.

mod nonlinearity;
mod validate;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, MAX_DIM};

pub use nonlinearity::{nonlinearity_eval, Nonlinearity, NonlinearitySpec, LOG_GROWTH_STAND_IN};
pub use validate::{validate_assumptions, CheckStatus, HypothesisCheck, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    Constant,
    PeriodicTrig,
    PeriodicPlusPerturbation,
}

impl FunctionKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionKind::Constant => "constant",
            FunctionKind::PeriodicTrig => "periodic_trig",
            FunctionKind::PeriodicPlusPerturbation => "periodic_plus_perturbation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(FunctionKind::Constant),
            "periodic_trig" => Some(FunctionKind::PeriodicTrig),
            "periodic_plus_perturbation" => Some(FunctionKind::PeriodicPlusPerturbation),
            _ => None,
        }
    }
}

/// Coefficient function on the box:
///
/// `base - amp · mean_a cos(2π k_a (x_a - c_a)) + pert · exp(-|x - c|² / w²)`
///
/// where `k_a` is the number of oscillations per unit length along axis `a`
/// (axes with `k_a = 0` are excluded from the mean) and `c` is the box
/// center. The trig part is present for the periodic kinds and the Gaussian
/// for `PeriodicPlusPerturbation` only. A positive amplitude therefore puts
/// a well at the center, and every coefficient is mirror symmetric about
/// it.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFunctionSpec {
    pub kind: FunctionKind,
    pub base_constant: f64,
    pub trig_amplitude: f64,
    /// One entry per axis, or a single entry applied to every axis.
    pub trig_periods: Vec<u32>,
    pub perturbation_amplitude: f64,
    pub perturbation_width: f64,
}

impl ScalarFunctionSpec {
    pub fn constant(c: f64) -> Self {
        ScalarFunctionSpec {
            kind: FunctionKind::Constant,
            base_constant: c,
            trig_amplitude: 0.0,
            trig_periods: vec![1],
            perturbation_amplitude: 0.0,
            perturbation_width: 1.0,
        }
    }

    pub fn periodic_trig(base: f64, amplitude: f64, periods: Vec<u32>) -> Self {
        ScalarFunctionSpec {
            kind: FunctionKind::PeriodicTrig,
            base_constant: base,
            trig_amplitude: amplitude,
            trig_periods: periods,
            ..ScalarFunctionSpec::constant(base)
        }
    }

    /// Adds a Gaussian bump at the box center.
    pub fn with_perturbation(mut self, amplitude: f64, width: f64) -> Self {
        self.kind = FunctionKind::PeriodicPlusPerturbation;
        self.perturbation_amplitude = amplitude;
        self.perturbation_width = width;
        self
    }

    /// Every coefficient multiplied by `sigma`.
    pub fn scaled(&self, sigma: f64) -> Self {
        ScalarFunctionSpec {
            base_constant: sigma * self.base_constant,
            trig_amplitude: sigma * self.trig_amplitude,
            perturbation_amplitude: sigma * self.perturbation_amplitude,
            ..self.clone()
        }
    }

    pub fn has_perturbation(&self) -> bool {
        self.kind == FunctionKind::PeriodicPlusPerturbation && self.perturbation_amplitude != 0.0
    }

    /// Coefficients finite, periods commensurate with the box, width positive.
    pub fn check(&self, grid: &Grid) -> Result<()> {
        let finite = [
            self.base_constant,
            self.trig_amplitude,
            self.perturbation_amplitude,
            self.perturbation_width,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("function coefficients"));
        }
        if self.kind == FunctionKind::Constant {
            return Ok(());
        }
        let dim = grid.dim();
        if self.trig_periods.len() != 1 && self.trig_periods.len() != dim {
            return Err(Error::param(
                "trig_periods",
                format!("need 1 or {dim} entries (got {})", self.trig_periods.len()),
            ));
        }
        let l = grid.box_length();
        for &k in &self.trig_periods {
            let cycles = k as f64 * l;
            if (cycles - cycles.round()).abs() > 1e-9 * cycles.max(1.0) {
                return Err(Error::param(
                    "trig_periods",
                    format!("{k} oscillations per unit length do not fit a box of length {l}"),
                ));
            }
        }
        if self.kind == FunctionKind::PeriodicPlusPerturbation && self.perturbation_width <= 0.0 {
            return Err(Error::param("perturbation_width", "must be positive"));
        }
        Ok(())
    }

    fn periods_per_axis(&self, dim: usize) -> [u32; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for (a, slot) in out.iter_mut().enumerate().take(dim) {
            *slot = if self.trig_periods.len() == 1 {
                self.trig_periods[0]
            } else {
                self.trig_periods[a]
            };
        }
        out
    }

    fn periodic_value(&self, x: &[f64; MAX_DIM], center: &[f64; MAX_DIM], dim: usize) -> f64 {
        if self.kind == FunctionKind::Constant {
            return self.base_constant;
        }
        let periods = self.periods_per_axis(dim);
        let mut sum = 0.0;
        let mut active = 0;
        for a in 0..dim {
            if periods[a] > 0 {
                sum += (2.0 * PI * periods[a] as f64 * (x[a] - center[a])).cos();
                active += 1;
            }
        }
        if active == 0 {
            self.base_constant
        } else {
            self.base_constant - self.trig_amplitude * sum / active as f64
        }
    }

    fn perturbation_value(&self, x: &[f64; MAX_DIM], center: &[f64; MAX_DIM], dim: usize) -> f64 {
        if self.kind != FunctionKind::PeriodicPlusPerturbation {
            return 0.0;
        }
        let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
        self.perturbation_amplitude * (-r2 / self.perturbation_width.powi(2)).exp()
    }

    /// Samples the function; `include_perturbation = false` gives the
    /// periodic part alone.
    pub fn sample(&self, grid: &Arc<Grid>, include_perturbation: bool) -> Result<Field> {
        self.check(grid)?;
        let dim = grid.dim();
        let center = grid.center();
        Field::from_fn(grid, |x| {
            let p = self.periodic_value(x, &center, dim);
            if include_perturbation {
                p + self.perturbation_value(x, &center, dim)
            } else {
                p
            }
        })
    }

    /// The Gaussian perturbation term alone.
    pub fn sample_perturbation(&self, grid: &Arc<Grid>) -> Result<Field> {
        self.check(grid)?;
        let dim = grid.dim();
        let center = grid.center();
        Field::from_fn(grid, |x| self.perturbation_value(x, &center, dim))
    }
}

/// Pointwise samples of `spec` with its perturbation included.
pub fn sample_function(spec: &ScalarFunctionSpec, grid: &Arc<Grid>) -> Result<Field> {
    spec.sample(grid, true)
}

/// Full description of a coupled system
/// `(-Δ)^{s_1} u + V_1 u = f_1(u) + λ v`, `(-Δ)^{s_2} v + V_2 v = f_2(v) + λ u`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub grid: Arc<Grid>,
    pub s1: f64,
    pub s2: f64,
    pub v1: ScalarFunctionSpec,
    pub v2: ScalarFunctionSpec,
    pub coupling: ScalarFunctionSpec,
    pub nl1: NonlinearitySpec,
    pub nl2: NonlinearitySpec,
    /// Drop every perturbation and work with the purely periodic system.
    pub periodic_reference: bool,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        Problem::new(self.clone())
    }

    pub fn with_coupling_scale(&self, sigma: f64) -> Self {
        ProblemSpec {
            coupling: self.coupling.scaled(sigma),
            ..self.clone()
        }
    }

    pub fn with_periodic_reference(&self, on: bool) -> Self {
        ProblemSpec {
            periodic_reference: on,
            ..self.clone()
        }
    }

    /// True when some coefficient carries a nonzero perturbation that is
    /// switched on.
    pub fn is_perturbed(&self) -> bool {
        !self.periodic_reference
            && (self.v1.has_perturbation() || self.v2.has_perturbation() || self.coupling.has_perturbation())
    }
}

/// A [`ProblemSpec`] sampled on its grid.
#[derive(Clone, Debug)]
pub struct Problem {
    spec: ProblemSpec,
    v1: Field,
    v2: Field,
    lambda: Field,
    nl1: Nonlinearity,
    nl2: Nonlinearity,
    symbol1: Arc<[f64]>,
    symbol2: Arc<[f64]>,
    mean_v1: f64,
    mean_v2: f64,
}

impl Problem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        crate::grid::apply_frac_laplacian(&Field::zeros(&spec.grid), spec.s1)
            .map_err(|_| Error::param("s1", format!("must lie in (0, 1] (got {})", spec.s1)))?;
        crate::grid::apply_frac_laplacian(&Field::zeros(&spec.grid), spec.s2)
            .map_err(|_| Error::param("s2", format!("must lie in (0, 1] (got {})", spec.s2)))?;
        let with_pert = !spec.periodic_reference;
        let grid = &spec.grid;
        let v1 = spec.v1.sample(grid, with_pert)?;
        let v2 = spec.v2.sample(grid, with_pert)?;
        let lambda = spec.coupling.sample(grid, with_pert)?;
        let nl1 = spec.nl1.build()?;
        let nl2 = spec.nl2.build()?;
        let symbol1: Arc<[f64]> = grid.frac_symbol(spec.s1).into();
        let symbol2: Arc<[f64]> = grid.frac_symbol(spec.s2).into();
        let vol = grid.box_length().powi(grid.dim() as i32);
        let mean_v1 = v1.integrate() / vol;
        let mean_v2 = v2.integrate() / vol;
        Ok(Problem {
            spec,
            v1,
            v2,
            lambda,
            nl1,
            nl2,
            symbol1,
            symbol2,
            mean_v1,
            mean_v2,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.spec.grid
    }

    pub fn potential(&self, which: Component) -> &Field {
        match which {
            Component::U => &self.v1,
            Component::V => &self.v2,
        }
    }

    pub fn coupling(&self) -> &Field {
        &self.lambda
    }

    pub fn nonlinearity(&self, which: Component) -> &Nonlinearity {
        match which {
            Component::U => &self.nl1,
            Component::V => &self.nl2,
        }
    }

    pub fn order(&self, which: Component) -> f64 {
        match which {
            Component::U => self.spec.s1,
            Component::V => self.spec.s2,
        }
    }

    pub(crate) fn symbol(&self, which: Component) -> &[f64] {
        match which {
            Component::U => &self.symbol1,
            Component::V => &self.symbol2,
        }
    }

    /// Spatial mean of the potential, used by the preconditioner.
    pub fn mean_potential(&self, which: Component) -> f64 {
        match which {
            Component::U => self.mean_v1,
            Component::V => self.mean_v2,
        }
    }

    /// `max_x |λ(x)| / sqrt(V_1(x) V_2(x))` over the grid.
    pub fn effective_delta(&self) -> f64 {
        effective_delta(&self.lambda, &self.v1, &self.v2)
    }
}

pub(crate) fn effective_delta(lambda: &Field, v1: &Field, v2: &Field) -> f64 {
    lambda
        .values()
        .iter()
        .zip(v1.values().iter().zip(v2.values()))
        .map(|(l, (a, b))| {
            let g = (a * b).sqrt();
            if g > 0.0 {
                l.abs() / g
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Selects one of the two components of a state pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    U,
    V,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Component::U => 1,
            Component::V => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(Component::U),
            2 => Some(Component::V),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Component::U => Component::V,
            Component::V => Component::U,
        }
    }
}
