//! Sampled checks of the structural hypotheses on potentials, coupling and
//! nonlinearities. Nothing here throws: every failure becomes a line in
//! the report and solvers refuse to run when the report does not pass.

use std::fmt;

use super::{effective_delta, Nonlinearity, NonlinearitySpec, ProblemSpec};
use crate::grid::Field;

const LADDER_POINTS: usize = 1000;
const LADDER_MIN: f64 = 1e-4;
const LADDER_MAX: f64 = 1e4;
const DECAY_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "n/a",
        })
    }
}

#[derive(Clone, Debug)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

/// Witnessed constants for the nonquadraticity bound `nq(t) >= a2 t^alpha`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PowerFit {
    pub a2: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
    /// Lower bound of the periodic potentials.
    pub v_p: f64,
    /// Lower bound of the potentials actually used (perturbed unless the
    /// problem is the periodic reference).
    pub v_0: f64,
    /// `max |λ| / sqrt(V1 V2)` with the problem's own sampling.
    pub delta_eff: f64,
    /// Same quantity for the periodic parts alone.
    pub delta_periodic: f64,
    pub h3_fits: [PowerFit; 2],
    pub growth_exponents: [f64; 2],
    pub p0: f64,
    pub coupling_positive: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .collect()
    }

    fn push(&mut self, name: &'static str, status: CheckStatus, detail: String) {
        self.checks.push(HypothesisCheck { name, status, detail });
    }

    fn empty() -> Self {
        ValidationReport {
            checks: Vec::new(),
            v_p: f64::NAN,
            v_0: f64::NAN,
            delta_eff: f64::NAN,
            delta_periodic: f64::NAN,
            h3_fits: [PowerFit::default(); 2],
            growth_exponents: [f64::NAN; 2],
            p0: f64::NAN,
            coupling_positive: false,
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hypothesis checks: {}", if self.passed() { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            writeln!(f, "  {:<10} {:<5} {}", c.name, c.status.to_string(), c.detail)?;
        }
        writeln!(f, "  V_p            = {:.6e}", self.v_p)?;
        writeln!(f, "  V_0            = {:.6e}", self.v_0)?;
        writeln!(f, "  delta_eff      = {:.6e}", self.delta_eff)?;
        writeln!(f, "  delta_periodic = {:.6e}", self.delta_periodic)?;
        writeln!(f, "  p0             = {:.6e}", self.p0)?;
        for (i, fit) in self.h3_fits.iter().enumerate() {
            writeln!(f, "  nq fit {}       : a2 = {:.6e}, alpha = {:.6e}", i + 1, fit.a2, fit.alpha)?;
        }
        write!(f, "  coupling > 0   = {}", self.coupling_positive)
    }
}

fn ladder() -> Vec<f64> {
    let (a, b) = (LADDER_MIN.ln(), LADDER_MAX.ln());
    (0..LADDER_POINTS)
        .map(|i| (a + (b - a) * i as f64 / (LADDER_POINTS - 1) as f64).exp())
        .collect()
}

fn strictly_increasing(xs: &[f64]) -> Option<usize> {
    xs.windows(2).position(|w| !(w[1] > w[0]))
}

/// Least-squares fit of `ln nq = ln a + alpha ln t`, then the largest `a2`
/// with `nq >= a2 t^alpha` on the ladder.
fn fit_nonquadraticity(ts: &[f64], nq: &[f64]) -> Option<PowerFit> {
    if nq.iter().any(|&q| !(q > 0.0)) {
        return None;
    }
    let n = ts.len() as f64;
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = nq.iter().map(|q| q.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let alpha = sxy / sxx;
    let a2 = ts
        .iter()
        .zip(nq)
        .map(|(t, q)| q / t.powf(alpha))
        .fold(f64::INFINITY, f64::min);
    Some(PowerFit { a2, alpha })
}

fn critical_exponent(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    if n > 2.0 * s {
        2.0 * n / (n - 2.0 * s)
    } else {
        f64::INFINITY
    }
}

/// `max |g|` over grid points at distance more than `radius` from the
/// box center.
fn tail_magnitude(g: &Field, radius: f64) -> f64 {
    let grid = g.grid();
    let c = grid.center();
    let dim = grid.dim();
    g.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let x = grid.coords(*i);
            (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt() > radius
        })
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

struct NonlinearityChecks {
    h1: (bool, String),
    h4: (bool, String),
    gs: (bool, String),
    nq_positive: bool,
    fit: Option<PowerFit>,
    a1: f64,
}

fn check_nonlinearity(nl: &Nonlinearity, ts: &[f64]) -> NonlinearityChecks {
    let ratio: Vec<f64> = ts.iter().map(|&t| nl.f(t) / t).collect();
    let r_lo = nl.f(LADDER_MIN) / LADDER_MIN;
    let r_one = nl.f(1.0);
    let r_hi = nl.f(LADDER_MAX) / LADDER_MAX;
    let h1_ok = r_lo < 0.5 * r_one && r_hi > 2.0 * r_one && nl.f(0.0) == 0.0;
    let h1 = (
        h1_ok,
        format!("f(t)/t at 1e-4, 1, 1e4: {r_lo:.3e}, {r_one:.3e}, {r_hi:.3e}"),
    );
    let h4 = match strictly_increasing(&ratio) {
        None => (true, "f(t)/t increasing on ladder".to_string()),
        Some(i) => (false, format!("f(t)/t not increasing near t = {:.4e}", ts[i])),
    };
    let nq: Vec<f64> = ts.iter().map(|&t| nl.nonquadraticity(t)).collect();
    let gs = match strictly_increasing(&nq) {
        None => (true, "f(t)t - 2F(t) increasing on ladder".to_string()),
        Some(i) => (false, format!("f(t)t - 2F(t) not increasing near t = {:.4e}", ts[i])),
    };
    let p = nl.spec().growth_exponent();
    let a1 = ts
        .iter()
        .map(|&t| nl.f(t) / (1.0 + t.powf(p - 1.0)))
        .fold(0.0, f64::max);
    NonlinearityChecks {
        h1,
        h4,
        gs,
        nq_positive: nq.iter().all(|&q| q > 0.0),
        fit: fit_nonquadraticity(ts, &nq),
        a1,
    }
}

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

/// Runs every sampled hypothesis check on `spec`.
pub fn validate_assumptions(spec: &ProblemSpec) -> ValidationReport {
    let mut report = ValidationReport::empty();
    let grid = &spec.grid;
    let dim = grid.dim();

    let in_scope = dim >= 2 && spec.s1 < 1.0 && spec.s2 < 1.0;
    let orders_ok = [spec.s1, spec.s2].iter().all(|&s| s > 0.0 && s <= 1.0);
    if !orders_ok {
        report.push(
            "orders",
            CheckStatus::Fail,
            format!("s1 = {}, s2 = {} must lie in (0, 1]", spec.s1, spec.s2),
        );
    } else if in_scope {
        report.push("scope", CheckStatus::Pass, format!("N = {dim}, s1 = {}, s2 = {}", spec.s1, spec.s2));
    } else {
        report.push(
            "scope",
            CheckStatus::NotApplicable,
            format!(
                "N = {dim}, s1 = {}, s2 = {}: outside N >= 2, s < 1; checks below are still run",
                spec.s1, spec.s2
            ),
        );
    }

    // Sampling
    let sample = |f: &super::ScalarFunctionSpec, pert: bool| f.sample(grid, pert);
    let sampled = (|| {
        Ok::<_, crate::error::Error>((
            sample(&spec.v1, false)?,
            sample(&spec.v2, false)?,
            sample(&spec.coupling, false)?,
            sample(&spec.v1, true)?,
            sample(&spec.v2, true)?,
            sample(&spec.coupling, true)?,
        ))
    })();
    let (v1p, v2p, lp, v1, v2, l) = match sampled {
        Ok(s) => s,
        Err(e) => {
            report.push("sampling", CheckStatus::Fail, e.to_string());
            return report;
        }
    };

    report.v_p = v1p.min().min(v2p.min());
    report.push(
        "V1",
        status(report.v_p > 0.0),
        format!("min of periodic potentials = {:.6e}", report.v_p),
    );

    report.delta_periodic = effective_delta(&lp, &v1p, &v2p);
    report.push(
        "V2",
        status(report.delta_periodic < 1.0),
        format!("periodic delta = {:.6e}", report.delta_periodic),
    );

    let (uv1, uv2, ul) = if spec.periodic_reference {
        (&v1p, &v2p, &lp)
    } else {
        (&v1, &v2, &l)
    };
    report.v_0 = uv1.min().min(uv2.min());
    report.delta_eff = effective_delta(ul, uv1, uv2);
    report.coupling_positive = ul.min() > 0.0;

    if spec.is_perturbed() {
        let radius = grid.box_length() / 4.0;
        let mut v3_ok = report.v_0 > 0.0;
        let mut v3_detail = vec![format!("V_0 = {:.6e}", report.v_0)];
        for (name, f) in [("V1", &spec.v1), ("V2", &spec.v2)] {
            // Compare via the perturbation itself: adding a tiny tail to the
            // periodic part can round back to the same float.
            match f.sample_perturbation(grid) {
                Ok(p) => {
                    let below = p.max() < 0.0;
                    let tail = tail_magnitude(&p, radius);
                    v3_ok &= below && tail < DECAY_THRESHOLD;
                    v3_detail.push(format!(
                        "{name}: perturbation max = {:.3e}, tail = {:.3e}",
                        p.max(),
                        tail
                    ));
                }
                Err(e) => {
                    v3_ok = false;
                    v3_detail.push(e.to_string());
                }
            }
        }
        report.push("V3", status(v3_ok), v3_detail.join("; "));

        let (v4_ok, v4_detail) = match spec.coupling.sample_perturbation(grid) {
            Ok(p) => {
                let above = p.min() > 0.0;
                let tail = tail_magnitude(&p, radius);
                (
                    above && tail < DECAY_THRESHOLD && report.delta_eff < 1.0,
                    format!(
                        "perturbation min = {:.3e}, tail = {:.3e}, delta = {:.6e}",
                        p.min(),
                        tail,
                        report.delta_eff
                    ),
                )
            }
            Err(e) => (false, e.to_string()),
        };
        report.push("V4", status(v4_ok), v4_detail);
    } else {
        let why = if spec.periodic_reference {
            "periodic reference selected"
        } else {
            "no perturbation"
        };
        report.push("V3", CheckStatus::NotApplicable, why.to_string());
        report.push("V4", CheckStatus::NotApplicable, why.to_string());
    }

    // Nonlinearities
    let ts = ladder();
    let nls: Vec<(NonlinearitySpec, f64)> = vec![(spec.nl1, spec.s1), (spec.nl2, spec.s2)];
    report.growth_exponents = [spec.nl1.growth_exponent(), spec.nl2.growth_exponent()];
    report.p0 = report.growth_exponents[0].max(report.growth_exponents[1]);
    let alpha_min = dim as f64 * (report.p0 - 2.0) / 2.0;

    for (i, (nl_spec, s)) in nls.into_iter().enumerate() {
        let nl = match nl_spec.build() {
            Ok(nl) => nl,
            Err(e) => {
                report.push("H1", CheckStatus::Fail, format!("f{}: {e}", i + 1));
                continue;
            }
        };
        let c = check_nonlinearity(&nl, &ts);
        let tag = |s: &str| format!("f{}: {s}", i + 1);
        report.push("H1", status(c.h1.0), tag(&c.h1.1));

        let p = nl_spec.growth_exponent();
        let crit = critical_exponent(dim, s);
        report.push(
            "H2",
            status(p > 2.0 && p < crit && c.a1.is_finite()),
            tag(&format!("p = {p}, critical = {crit:.4}, a1 >= {:.4e} on ladder", c.a1)),
        );

        match c.fit {
            Some(fit) if c.nq_positive => {
                report.h3_fits[i] = fit;
                report.push(
                    "H3",
                    status(fit.a2 > 0.0 && fit.alpha > alpha_min),
                    tag(&format!(
                        "a2 = {:.4e}, alpha = {:.4}, need alpha > {alpha_min:.4}",
                        fit.a2, fit.alpha
                    )),
                );
            }
            _ => report.push("H3", CheckStatus::Fail, tag("f(t)t - 2F(t) not positive on ladder")),
        }
        report.push("H4", status(c.h4.0), tag(&c.h4.1));
        report.push("gs", status(c.gs.0), tag(&c.gs.1));
    }

    report
}
