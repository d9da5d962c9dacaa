//! Catalogue of admissible nonlinearities.
//!
//! Both families vanish on `t <= 0`:
//!
//! * `LogPower { gamma }`: `f(t) = t ln^γ(1 + t)`, `γ >= 1`.
//! * `PurePower { p }`:    `f(t) = t^{p-1}`, `F(t) = t^p / p`.
//!
//! For the log family the antiderivative has a closed form only for `γ = 1`.
//! Otherwise `F` is tabulated once on a geometric ladder of nodes with
//! 8-point Gauss-Legendre panels, and a query adds one more panel from the
//! nearest node below. Below `SERIES_CUTOFF` every `γ` uses the expansion
//! `F(t) = Σ c_k t^{k+2+γ} / (k+2+γ)` with `c_k` the coefficients of
//! `(ln(1+τ)/τ)^γ`, which avoids the cancellation in the closed form.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NonlinearitySpec {
    LogPower { gamma: f64 },
    PurePower { p: f64 },
}

/// Growth exponent used for log-type terms in the subcriticality check.
pub const LOG_GROWTH_STAND_IN: f64 = 2.5;

const SERIES_CUTOFF: f64 = 0.25;
const SERIES_TERMS: usize = 40;
const LADDER_RATIO: f64 = 1.25;
const LADDER_TOP: f64 = 1e150;

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

const GL4_NODES: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_WEIGHTS: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

impl NonlinearitySpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        Nonlinearity::new(*self)
    }

    /// Exponent `p_i` entering the growth bound; log-type terms use a fixed
    /// stand-in since they grow slower than any `t^{1+ε}`.
    pub fn growth_exponent(&self) -> f64 {
        match *self {
            NonlinearitySpec::LogPower { .. } => LOG_GROWTH_STAND_IN,
            NonlinearitySpec::PurePower { p } => p,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NonlinearitySpec::LogPower { .. } => "log_power",
            NonlinearitySpec::PurePower { .. } => "pure_power",
        }
    }
}

#[derive(Clone, Debug)]
enum Antiderivative {
    ClosedForm,
    Table(Arc<LadderTable>),
}

#[derive(Debug)]
struct LadderTable {
    log_ratio: f64,
    /// `F(SERIES_CUTOFF · r^j)`
    values: Vec<f64>,
}

/// A catalogue nonlinearity ready for evaluation.
#[derive(Clone, Debug)]
pub struct Nonlinearity {
    spec: NonlinearitySpec,
    series: Arc<[f64]>,
    antiderivative: Antiderivative,
}

impl Nonlinearity {
    pub fn new(spec: NonlinearitySpec) -> Result<Self> {
        match spec {
            NonlinearitySpec::LogPower { gamma } => {
                if !(gamma.is_finite() && gamma >= 1.0) {
                    return Err(Error::param("gamma", format!("need finite gamma >= 1 (got {gamma})")));
                }
                let series: Arc<[f64]> = log_power_series(gamma).into();
                let mut nl = Nonlinearity {
                    spec,
                    series,
                    antiderivative: Antiderivative::ClosedForm,
                };
                if gamma != 1.0 {
                    nl.antiderivative = Antiderivative::Table(Arc::new(nl.build_table()));
                }
                Ok(nl)
            }
            NonlinearitySpec::PurePower { p } => {
                if !(p.is_finite() && p > 1.0) {
                    return Err(Error::param("p", format!("need finite p > 1 (got {p})")));
                }
                Ok(Nonlinearity {
                    spec,
                    series: Arc::from(Vec::new()),
                    antiderivative: Antiderivative::ClosedForm,
                })
            }
        }
    }

    pub fn spec(&self) -> NonlinearitySpec {
        self.spec
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.spec {
            NonlinearitySpec::LogPower { gamma } => t * pow_fast(t.ln_1p(), gamma),
            NonlinearitySpec::PurePower { p } => pow_fast(t, p - 1.0),
        }
    }

    /// `f'(t)`, zero on `t <= 0`.
    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.spec {
            NonlinearitySpec::LogPower { gamma } => {
                let l = t.ln_1p();
                pow_fast(l, gamma) + gamma * t * pow_fast(l, gamma - 1.0) / (1.0 + t)
            }
            NonlinearitySpec::PurePower { p } => (p - 1.0) * pow_fast(t, p - 2.0),
        }
    }

    /// `f(t)` and `f'(t)` sharing one logarithm.
    #[inline]
    pub fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        match self.spec {
            NonlinearitySpec::LogPower { gamma } => {
                let l = t.ln_1p();
                let lg1 = pow_fast(l, gamma - 1.0);
                (t * lg1 * l, lg1 * l + gamma * t * lg1 / (1.0 + t))
            }
            NonlinearitySpec::PurePower { p } => {
                let tp2 = pow_fast(t, p - 2.0);
                (tp2 * t, (p - 1.0) * tp2)
            }
        }
    }

    /// `F(t) = ∫_0^t f`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.spec {
            NonlinearitySpec::PurePower { p } => pow_fast(t, p) / p,
            NonlinearitySpec::LogPower { gamma } => {
                if t <= SERIES_CUTOFF {
                    return self.series_antiderivative(t, gamma);
                }
                match &self.antiderivative {
                    Antiderivative::ClosedForm => {
                        0.5 * (t * t - 1.0) * t.ln_1p() - 0.25 * t * t + 0.5 * t
                    }
                    Antiderivative::Table(table) => self.table_antiderivative(table, t),
                }
            }
        }
    }

    /// `f(t)t - 2F(t)`.
    pub fn nonquadraticity(&self, t: f64) -> f64 {
        self.f(t) * t - 2.0 * self.antiderivative(t)
    }

    /// `(f, F, f t - 2F)` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let f = self.f(t);
        let big_f = self.antiderivative(t);
        (f, big_f, f * t - 2.0 * big_f)
    }

    /// `F(b) - F(a)` without cancellation when `a` and `b` are close.
    #[inline]
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        self.increment_by(a, b - a)
    }

    /// `F(a + d) - F(a)` with the step `d` given exactly, so a step far
    /// below the rounding of `a + d` keeps its full relative accuracy.
    #[inline]
    pub fn increment_by(&self, a: f64, d: f64) -> f64 {
        let b = a + d;
        if a <= 0.0 && b <= 0.0 {
            return 0.0;
        }
        if a > 0.0 && b > 0.0 && d.abs() <= 0.125 * a.max(b) {
            let half = 0.5 * d;
            let mid = a + half;
            let mut acc = 0.0;
            for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS) {
                acc += w * (self.f(mid - half * x) + self.f(mid + half * x));
            }
            acc * half
        } else {
            self.antiderivative(b) - self.antiderivative(a)
        }
    }

    fn series_antiderivative(&self, t: f64, gamma: f64) -> f64 {
        // Horner in t over Σ c_k t^k / (k + 2 + γ)
        let mut acc = 0.0;
        for (k, c) in self.series.iter().enumerate().rev() {
            acc = acc * t + c / (k as f64 + 2.0 + gamma);
        }
        acc * t.powf(2.0 + gamma)
    }

    fn panel(&self, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            acc += w * (self.f(mid - half * x) + self.f(mid + half * x));
        }
        acc * half
    }

    fn build_table(&self) -> LadderTable {
        let gamma = match self.spec {
            NonlinearitySpec::LogPower { gamma } => gamma,
            NonlinearitySpec::PurePower { .. } => unreachable!(),
        };
        let log_ratio = LADDER_RATIO.ln();
        let mut values = vec![self.series_antiderivative(SERIES_CUTOFF, gamma)];
        let mut node = SERIES_CUTOFF;
        while node < LADDER_TOP {
            let next = node * LADDER_RATIO;
            let last = *values.last().unwrap();
            values.push(last + self.panel(node, next));
            node = next;
        }
        LadderTable { log_ratio, values }
    }

    fn table_antiderivative(&self, table: &LadderTable, t: f64) -> f64 {
        let j = ((t / SERIES_CUTOFF).ln() / table.log_ratio).floor().max(0.0) as usize;
        let j = j.min(table.values.len() - 1);
        let mut node = SERIES_CUTOFF * LADDER_RATIO.powi(j as i32);
        // floor() can land one node off near the boundaries
        if node > t && j > 0 {
            let prev = node / LADDER_RATIO;
            return table.values[j - 1] + self.panel(prev, t);
        }
        let mut acc = table.values[j];
        while t > node * LADDER_RATIO {
            let next = node * LADDER_RATIO;
            acc += self.panel(node, next);
            node = next;
        }
        acc + self.panel(node, t)
    }
}

#[inline]
fn pow_fast(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 0.0 {
        1.0
    } else if e == 2.0 {
        x * x
    } else if e.fract() == 0.0 && e.abs() < 32.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// Coefficients of `(ln(1+τ)/τ)^γ` via the power-of-a-series recurrence.
fn log_power_series(gamma: f64) -> Vec<f64> {
    let b: Vec<f64> = (0..SERIES_TERMS)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0))
        .collect();
    let mut c = vec![0.0; SERIES_TERMS];
    c[0] = 1.0;
    for k in 1..SERIES_TERMS {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += ((gamma + 1.0) * j as f64 - k as f64) * b[j] * c[k - j];
        }
        c[k] = acc / k as f64;
    }
    c
}

pub fn nonlinearity_eval(nl: &Nonlinearity, t: f64) -> (f64, f64, f64) {
    nl.eval(t)
}
