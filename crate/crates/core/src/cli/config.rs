//! Flat `key = value` run configuration.
//!
//! ```text
//! dim = 2
//! n = 64
//! L = 8
//! s1 = 0.75
//! s2 = 0.75
//! V1.kind = constant
//! V1.base = 2
//! V2.kind = constant
//! V2.base = 2
//! coupling.kind = constant
//! coupling.base = 0.5
//! nl1.kind = log_power
//! nl1.gamma = 1
//! nl2.kind = log_power
//! nl2.gamma = 1
//! ```
//!
//! Function keys beyond `kind` and `base` are `trig_amplitude`,
//! `trig_periods` (comma separated), `perturbation_amplitude` and
//! `perturbation_width`. Solver options live under `solver.`; `scales` and
//! `component` feed the sweep and scalar subcommands. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::model::{Component, FunctionKind, NonlinearitySpec, ProblemSpec, ScalarFunctionSpec};
use crate::solver::SolverOptions;

/// Line number reported for keys that have no line in the file: overrides
/// and missing required keys.
pub const OVERRIDE_LINE: usize = 0;

const FUNCTIONS: [&str; 3] = ["V1", "V2", "coupling"];
const FUNCTION_FIELDS: [&str; 6] = [
    "kind",
    "base",
    "trig_amplitude",
    "trig_periods",
    "perturbation_amplitude",
    "perturbation_width",
];
const SOLVER_FIELDS: [&str; 9] = [
    "max_iters",
    "step_init",
    "backtrack_factor",
    "tol_energy",
    "tol_residual",
    "tol_nehari",
    "seed",
    "positivity_clip",
    "restarts",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunParameters {
    pub spec: ProblemSpec,
    pub options: SolverOptions,
    /// Coupling scales for `sweep` and `limit`.
    pub scales: Vec<f64>,
    /// Component solved by `solve-scalar`.
    pub component: Component,
}

fn known_key(key: &str) -> bool {
    if matches!(
        key,
        "dim" | "n" | "L" | "s1" | "s2" | "periodic_reference" | "scales" | "component"
    ) {
        return true;
    }
    if let Some((head, field)) = key.split_once('.') {
        return match head {
            h if FUNCTIONS.contains(&h) => FUNCTION_FIELDS.contains(&field),
            "nl1" | "nl2" => matches!(field, "kind" | "gamma" | "p"),
            "solver" => SOLVER_FIELDS.contains(&field),
            _ => false,
        };
    }
    false
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
    used: BTreeMap<String, bool>,
}

fn err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(err(line, content, "expected `key = value`"));
            };
            let (k, v) = (k.trim(), v.trim());
            if !known_key(k) {
                return Err(err(line, k, "unknown key"));
            }
            if let Some((_, first)) = map.insert(k.to_string(), (v.to_string(), line)) {
                return Err(err(line, k, format!("duplicate key (first set on line {first})")));
            }
        }
        Ok(Entries {
            map,
            used: BTreeMap::new(),
        })
    }

    fn set(&mut self, assignment: &str) -> Result<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return Err(err(OVERRIDE_LINE, assignment, "override must be `key=value`"));
        };
        let (k, v) = (k.trim(), v.trim());
        if !known_key(k) {
            return Err(err(OVERRIDE_LINE, k, "unknown key"));
        }
        self.map.insert(k.to_string(), (v.to_string(), OVERRIDE_LINE));
        Ok(())
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(OVERRIDE_LINE, |e| e.1)
    }

    fn raw(&mut self, key: &str) -> Option<(&str, usize)> {
        self.used.insert(key.to_string(), true);
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| err(line, key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<T> {
        self.parsed(key, what)?
            .ok_or_else(|| err(OVERRIDE_LINE, key, "missing required key"))
    }

    fn number(&mut self, key: &str) -> Result<f64> {
        let v: f64 = self.required(key, "a number")?;
        if !v.is_finite() {
            return Err(err(self.line(key), key, "must be finite"));
        }
        Ok(v)
    }

    fn number_or(&mut self, key: &str, default: f64) -> Result<f64> {
        if self.map.contains_key(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<Vec<T>>> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(None);
        };
        if v.is_empty() {
            return Ok(Some(Vec::new()));
        }
        v.split(',')
            .map(|p| {
                let p = p.trim();
                p.parse()
                    .map_err(|_| err(line, key, format!("expected a comma-separated list of {what}, got `{p}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Keys present but never consulted, e.g. `nl1.p` with `nl1.kind = log_power`.
    fn leftover(&self) -> Result<()> {
        for (k, (_, line)) in &self.map {
            if !self.used.contains_key(k) {
                return Err(err(*line, k, "not used by the selected kind"));
            }
        }
        Ok(())
    }
}

fn function(e: &mut Entries, prefix: &str, grid: &crate::grid::Grid) -> Result<ScalarFunctionSpec> {
    let key = |f: &str| format!("{prefix}.{f}");
    let kind_key = key("kind");
    let kind_name: String = e.required(&kind_key, "a kind")?;
    let kind = FunctionKind::from_name(&kind_name).ok_or_else(|| {
        err(
            e.line(&kind_key),
            &kind_key,
            format!("unknown kind `{kind_name}` (constant, periodic_trig, periodic_plus_perturbation)"),
        )
    })?;
    let base = e.number(&key("base"))?;
    let mut spec = ScalarFunctionSpec::constant(base);
    if kind != FunctionKind::Constant {
        let amp = e.number_or(&key("trig_amplitude"), 0.0)?;
        let periods = e.list::<u32>(&key("trig_periods"), "nonnegative integers")?.unwrap_or(vec![1]);
        spec = ScalarFunctionSpec::periodic_trig(base, amp, periods);
    }
    if kind == FunctionKind::PeriodicPlusPerturbation {
        let amp = e.number_or(&key("perturbation_amplitude"), 0.0)?;
        let width = e.number_or(&key("perturbation_width"), 1.0)?;
        spec = spec.with_perturbation(amp, width);
    }
    spec.check(grid).map_err(|x| err(e.line(&kind_key), &kind_key, x.to_string()))?;
    Ok(spec)
}

fn nonlinearity(e: &mut Entries, prefix: &str) -> Result<NonlinearitySpec> {
    let kind_key = format!("{prefix}.kind");
    let kind: String = e.required(&kind_key, "a kind")?;
    let spec = match kind.as_str() {
        "log_power" => NonlinearitySpec::LogPower {
            gamma: e.number(&format!("{prefix}.gamma"))?,
        },
        "pure_power" => NonlinearitySpec::PurePower {
            p: e.number(&format!("{prefix}.p"))?,
        },
        other => {
            return Err(err(
                e.line(&kind_key),
                &kind_key,
                format!("unknown kind `{other}` (log_power, pure_power)"),
            ))
        }
    };
    spec.build().map_err(|x| err(e.line(&kind_key), &kind_key, x.to_string()))?;
    Ok(spec)
}

fn options(e: &mut Entries) -> Result<SolverOptions> {
    let d = SolverOptions::default();
    let opts = SolverOptions {
        max_iters: e.parsed("solver.max_iters", "a nonnegative integer")?.unwrap_or(d.max_iters),
        step_init: e.parsed("solver.step_init", "a number")?.unwrap_or(d.step_init),
        backtrack_factor: e.parsed("solver.backtrack_factor", "a number")?.unwrap_or(d.backtrack_factor),
        tol_energy: e.parsed("solver.tol_energy", "a number")?.unwrap_or(d.tol_energy),
        tol_residual: e.parsed("solver.tol_residual", "a number")?.unwrap_or(d.tol_residual),
        tol_nehari: e.parsed("solver.tol_nehari", "a number")?.unwrap_or(d.tol_nehari),
        seed: e.parsed("solver.seed", "a nonnegative integer")?.unwrap_or(d.seed),
        positivity_clip: e.parsed("solver.positivity_clip", "true or false")?.unwrap_or(d.positivity_clip),
        restarts: e.parsed("solver.restarts", "a nonnegative integer")?.unwrap_or(d.restarts),
    };
    opts.validate().map_err(|x| match x {
        Error::InvalidParameter { name, reason } => {
            let key = format!("solver.{name}");
            err(e.line(&key), &key, reason)
        }
        other => other,
    })?;
    Ok(opts)
}

fn build(mut e: Entries) -> Result<RunParameters> {
    let dim: usize = e.required("dim", "a positive integer")?;
    if !(1..=3).contains(&dim) {
        return Err(err(e.line("dim"), "dim", "dim must be 1, 2 or 3"));
    }
    let n: usize = e.required("n", "a positive integer")?;
    if !n.is_power_of_two() || n < 8 {
        return Err(err(e.line("n"), "n", "n must be a power of two (at least 8)"));
    }
    let l = e.number("L")?;
    let grid = make_grid(dim, n, l).map_err(|x| err(e.line("L"), "L", x.to_string()))?;
    let mut order = |key: &str| -> Result<f64> {
        let s = e.number(key)?;
        if !(s > 0.0 && s <= 1.0) {
            return Err(err(e.line(key), key, "order must lie in (0, 1]"));
        }
        Ok(s)
    };
    let s1 = order("s1")?;
    let s2 = order("s2")?;
    let v1 = function(&mut e, "V1", &grid)?;
    let v2 = function(&mut e, "V2", &grid)?;
    let coupling = function(&mut e, "coupling", &grid)?;
    let nl1 = nonlinearity(&mut e, "nl1")?;
    let nl2 = nonlinearity(&mut e, "nl2")?;
    let periodic_reference = e.parsed("periodic_reference", "true or false")?.unwrap_or(false);
    let options = options(&mut e)?;
    let scales = e.list::<f64>("scales", "numbers")?.unwrap_or_default();
    let component = match e.raw("component") {
        None | Some(("u", _)) => Component::U,
        Some(("v", _)) => Component::V,
        Some((other, line)) => return Err(err(line, "component", format!("expected u or v, got `{other}`"))),
    };
    e.leftover()?;
    let spec = ProblemSpec {
        grid,
        s1,
        s2,
        v1,
        v2,
        coupling,
        nl1,
        nl2,
        periodic_reference,
    };
    spec.build()?;
    Ok(RunParameters {
        spec,
        options,
        scales,
        component,
    })
}

pub fn parse_config(text: &str) -> Result<RunParameters> {
    build(Entries::parse(text)?)
}

/// `overrides` are `key=value` strings applied on top of the file, later
/// ones winning.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<RunParameters> {
    let mut e = Entries::parse(text)?;
    for o in overrides {
        e.set(o)?;
    }
    build(e)
}

/// Shortest round-trip form, in exponent notation outside `[1e-3, 1e6)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn render_function(out: &mut String, prefix: &str, f: &ScalarFunctionSpec) {
    let _ = writeln!(out, "{prefix}.kind = {}", f.kind.name());
    let _ = writeln!(out, "{prefix}.base = {}", num(f.base_constant));
    if f.kind == FunctionKind::Constant {
        return;
    }
    let periods: Vec<String> = f.trig_periods.iter().map(|k| k.to_string()).collect();
    let _ = writeln!(out, "{prefix}.trig_amplitude = {}", num(f.trig_amplitude));
    let _ = writeln!(out, "{prefix}.trig_periods = {}", periods.join(", "));
    if f.kind == FunctionKind::PeriodicPlusPerturbation {
        let _ = writeln!(out, "{prefix}.perturbation_amplitude = {}", num(f.perturbation_amplitude));
        let _ = writeln!(out, "{prefix}.perturbation_width = {}", num(f.perturbation_width));
    }
}

fn render_nonlinearity(out: &mut String, prefix: &str, nl: &NonlinearitySpec) {
    let _ = writeln!(out, "{prefix}.kind = {}", nl.kind_name());
    match nl {
        NonlinearitySpec::LogPower { gamma } => {
            let _ = writeln!(out, "{prefix}.gamma = {}", num(*gamma));
        }
        NonlinearitySpec::PurePower { p } => {
            let _ = writeln!(out, "{prefix}.p = {}", num(*p));
        }
    }
}

/// Inverse of [`parse_config`]; every value is written in full.
pub fn render_config(params: &RunParameters) -> String {
    let s = &params.spec;
    let o = &params.options;
    let mut out = String::new();
    let _ = writeln!(out, "dim = {}", s.grid.dim());
    let _ = writeln!(out, "n = {}", s.grid.n_per_axis());
    let _ = writeln!(out, "L = {}", num(s.grid.box_length()));
    let _ = writeln!(out, "s1 = {}", num(s.s1));
    let _ = writeln!(out, "s2 = {}", num(s.s2));
    render_function(&mut out, "V1", &s.v1);
    render_function(&mut out, "V2", &s.v2);
    render_function(&mut out, "coupling", &s.coupling);
    render_nonlinearity(&mut out, "nl1", &s.nl1);
    render_nonlinearity(&mut out, "nl2", &s.nl2);
    let _ = writeln!(out, "periodic_reference = {}", s.periodic_reference);
    let _ = writeln!(out, "solver.max_iters = {}", o.max_iters);
    let _ = writeln!(out, "solver.step_init = {}", num(o.step_init));
    let _ = writeln!(out, "solver.backtrack_factor = {}", num(o.backtrack_factor));
    let _ = writeln!(out, "solver.tol_energy = {}", num(o.tol_energy));
    let _ = writeln!(out, "solver.tol_residual = {}", num(o.tol_residual));
    let _ = writeln!(out, "solver.tol_nehari = {}", num(o.tol_nehari));
    let _ = writeln!(out, "solver.seed = {}", o.seed);
    let _ = writeln!(out, "solver.positivity_clip = {}", o.positivity_clip);
    let _ = writeln!(out, "solver.restarts = {}", o.restarts);
    if !params.scales.is_empty() {
        let scales: Vec<String> = params.scales.iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "scales = {}", scales.join(", "));
    }
    let c = match params.component {
        Component::U => "u",
        Component::V => "v",
    };
    let _ = writeln!(out, "component = {c}");
    out
}
