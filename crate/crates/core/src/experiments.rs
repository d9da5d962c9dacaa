//! Coupling sweeps, periodic-versus-perturbed level comparison and the
//! vanishing-coupling limit.

use std::io::Write;

use rayon::prelude::*;

use crate::energy::StatePair;
use crate::error::{Error, Result};
use crate::model::{Component, ProblemSpec};
use crate::solver::{
    solve_ground_state, solve_scalar_with_restarts, solve_with_restarts, SolveReport, SolverOptions,
};

/// Level ties between the two scalar equations below this gap.
const TIE_GAP: f64 = 1e-6;
/// Relative level gap between warm and cold starts flagged as a branch switch.
const BRANCH_GAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scale: f64,
    pub level: f64,
    pub nehari_residual: f64,
    pub u_mass: f64,
    pub v_mass: f64,
    pub converged: bool,
}

impl SweepRow {
    fn from_report(scale: f64, r: &SolveReport) -> Self {
        SweepRow {
            scale,
            level: r.level,
            nehari_residual: r.nehari_residual,
            u_mass: r.u_mass(),
            v_mass: r.v_mass(),
            converged: r.converged,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    /// Ascending in scale.
    pub rows: Vec<SweepRow>,
    /// Levels strictly decrease with the scale across converged rows.
    pub monotone_decreasing: bool,
    /// `min(c1, c2)`, the level the sweep tends to as the coupling vanishes.
    pub limit_level: f64,
    pub scalar_levels: (f64, f64),
    pub restarts: usize,
}

impl SweepReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

/// Header plus one line per row; floats carry 17 significant digits.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "scale,level,residual,u_mass,v_mass,converged")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.scale, r.level, r.nehari_residual, r.u_mass, r.v_mass, r.converged
        )?;
    }
    Ok(())
}

/// Rejects ladders that are not strictly monotone in the required
/// direction or that push the coupling to `δ_eff >= 1`.
fn check_scales(spec: &ProblemSpec, scales: &[f64], increasing: bool) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::InvalidScales("no scales given".into()));
    }
    if let Some(s) = scales.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::InvalidScales(format!("scale {s} is not a finite nonnegative number")));
    }
    let ordered = scales
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if !ordered {
        let dir = if increasing { "increasing" } else { "decreasing" };
        return Err(Error::InvalidScales(format!("scales must be strictly {dir}")));
    }
    for &s in scales {
        let delta = spec.with_coupling_scale(s).build()?.effective_delta();
        if !(delta < 1.0) {
            return Err(Error::InvalidScales(format!(
                "scale {s} gives effective delta {delta:.6} >= 1"
            )));
        }
    }
    Ok(())
}

fn lower(a: SolveReport, b: SolveReport) -> SolveReport {
    match (a.converged, b.converged) {
        (true, false) => a,
        (false, true) => b,
        _ => {
            if b.level < a.level {
                b
            } else {
                a
            }
        }
    }
}

fn scalar_levels(spec: &ProblemSpec, opts: &SolverOptions) -> Result<(SolveReport, SolveReport)> {
    let problem = spec.build()?;
    let (a, b) = rayon::join(
        || solve_scalar_with_restarts(Component::U, &problem, opts),
        || solve_scalar_with_restarts(Component::V, &problem, opts),
    );
    Ok((a?, b?))
}

/// Solves the ladder from the largest scale down, each step warm-started
/// from the previous state. Returned in the order of `descending`.
fn warm_ladder(spec: &ProblemSpec, descending: &[f64], opts: &SolverOptions) -> Result<Vec<SolveReport>> {
    let mut out: Vec<SolveReport> = Vec::with_capacity(descending.len());
    for &s in descending {
        let problem = spec.with_coupling_scale(s).build()?;
        let report = match out.last() {
            None => solve_with_restarts(&problem, opts)?,
            Some(prev) if prev.state.in_e_plus() => {
                let mut r = solve_ground_state(&problem, Some(&prev.state), opts)?;
                r.restarts = opts.restarts;
                r
            }
            Some(_) => solve_with_restarts(&problem, opts)?,
        };
        out.push(report);
    }
    Ok(out)
}

/// Ground-state level for the coupling `σ·λ` at every scale. Each scale is
/// solved warm (from the next larger scale) and cold (`opts.restarts`
/// seeds); the row keeps the lower converged level.
pub fn lambda_sweep(spec: &ProblemSpec, scales: &[f64], opts: &SolverOptions) -> Result<SweepReport> {
    opts.validate()?;
    check_scales(spec, scales, true)?;
    let descending: Vec<f64> = scales.iter().rev().copied().collect();

    let ((warm, cold), scalars) = rayon::join(
        || {
            rayon::join(
                || warm_ladder(spec, &descending, opts),
                || {
                    descending
                        .par_iter()
                        .map(|&s| solve_with_restarts(&spec.with_coupling_scale(s).build()?, opts))
                        .collect::<Result<Vec<_>>>()
                },
            )
        },
        || scalar_levels(spec, opts),
    );
    let (warm, cold, (c1, c2)) = (warm?, cold?, scalars?);

    let mut rows: Vec<SweepRow> = descending
        .iter()
        .zip(warm.into_iter().zip(cold))
        .map(|(&s, (w, c))| SweepRow::from_report(s, &lower(w, c)))
        .collect();
    rows.reverse();

    let converged: Vec<&SweepRow> = rows.iter().filter(|r| r.converged).collect();
    let monotone_decreasing = converged.windows(2).all(|w| w[1].level < w[0].level);
    Ok(SweepReport {
        rows,
        monotone_decreasing,
        limit_level: c1.level.min(c2.level),
        scalar_levels: (c1.level, c2.level),
        restarts: opts.restarts,
    })
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub level_periodic: f64,
    pub level_perturbed: f64,
    /// `max(1e-8, 1e-4·level_periodic)`
    pub margin: f64,
    /// `level_perturbed < level_periodic - margin`
    pub ordering_holds: bool,
    pub periodic: SolveReport,
    pub perturbed: SolveReport,
}

impl CompareReport {
    pub fn gap(&self) -> f64 {
        self.level_periodic - self.level_perturbed
    }
}

/// Every active perturbation must lower the potentials and raise the
/// coupling at each grid point.
fn check_perturbation_signs(spec: &ProblemSpec) -> Result<()> {
    let grid = &spec.grid;
    for (name, f, lowers) in [("V1", &spec.v1, true), ("V2", &spec.v2, true), ("coupling", &spec.coupling, false)] {
        if !f.has_perturbation() {
            continue;
        }
        let p = f.sample_perturbation(grid)?;
        let ok = if lowers { p.max() < 0.0 } else { p.min() > 0.0 };
        if !ok {
            let want = if lowers { "negative" } else { "positive" };
            return Err(Error::PerturbationSignViolation(format!(
                "{name} perturbation must be strictly {want} on the grid (range [{:.3e}, {:.3e}])",
                p.min(),
                p.max()
            )));
        }
    }
    Ok(())
}

/// Ground-state levels with and without the perturbations, solved with the
/// same options and restarts.
pub fn compare_periodic_limit(spec: &ProblemSpec, opts: &SolverOptions) -> Result<CompareReport> {
    opts.validate()?;
    check_perturbation_signs(spec)?;
    let periodic_problem = spec.with_periodic_reference(true).build()?;
    let perturbed_problem = spec.with_periodic_reference(false).build()?;
    let (periodic, perturbed) = rayon::join(
        || solve_with_restarts(&periodic_problem, opts),
        || solve_with_restarts(&perturbed_problem, opts),
    );
    let (periodic, perturbed) = (periodic?, perturbed?);
    let margin = (1e-4 * periodic.level).max(1e-8);
    Ok(CompareReport {
        level_periodic: periodic.level,
        level_perturbed: perturbed.level,
        margin,
        ordering_holds: perturbed.level < periodic.level - margin,
        periodic,
        perturbed,
    })
}

#[derive(Clone, Debug)]
pub struct LimitReport {
    /// In the order of the (decreasing) input scales.
    pub rows: Vec<SweepRow>,
    pub scalar_levels: (f64, f64),
    /// Component whose scalar level is lower; `None` on a tie.
    pub survivor: Option<Component>,
    pub tie: bool,
    /// Non-survivor mass over survivor mass at the smallest scale.
    pub mass_ratio: Option<f64>,
    /// `‖w - W0‖₂ / ‖W0‖₂` between the surviving component at the smallest
    /// scale and the scalar ground state.
    pub survivor_distance: Option<f64>,
    /// `|level - min(c1, c2)|` per row.
    pub level_gaps: Vec<f64>,
    /// The last three gaps strictly shrink.
    pub gap_shrinking: bool,
    /// Total mass never exceeds ten times that of the first row.
    pub mass_bounded: bool,
    /// Best cold-start level at the smallest scale.
    pub cold_level: f64,
    pub branch_switch: bool,
    pub final_state: StatePair,
    pub restarts: usize,
}

/// Follows the ground state along a decreasing coupling ladder and
/// compares it with the ground state of the scalar equation that wins.
pub fn theorem_c_limit(spec: &ProblemSpec, scales: &[f64], opts: &SolverOptions) -> Result<LimitReport> {
    opts.validate()?;
    check_scales(spec, scales, false)?;
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidScales(format!("scale {s} is not positive")));
    }
    let smallest = *scales.last().unwrap();

    let ((ladder, cold), scalars) = rayon::join(
        || {
            rayon::join(
                || warm_ladder(spec, scales, opts),
                || solve_with_restarts(&spec.with_coupling_scale(smallest).build()?, opts),
            )
        },
        || scalar_levels(spec, opts),
    );
    let (ladder, cold, (s1, s2)) = (ladder?, cold?, scalars?);
    let (c1, c2) = (s1.level, s2.level);
    let c0 = c1.min(c2);

    let rows: Vec<SweepRow> = scales
        .iter()
        .zip(&ladder)
        .map(|(&s, r)| SweepRow::from_report(s, r))
        .collect();
    let last = ladder.last().unwrap();

    let tie = (c1 - c2).abs() < TIE_GAP;
    let survivor = if tie {
        None
    } else if c1 < c2 {
        Some(Component::U)
    } else {
        Some(Component::V)
    };
    let (mass_ratio, survivor_distance) = match survivor {
        None => (None, None),
        Some(w) => {
            let scalar = if w == Component::U { &s1 } else { &s2 };
            let kept = last.state.component(w);
            let lost = last.state.component(w.other());
            let reference = scalar.state.component(w);
            let dist = kept.combine(1.0, reference, -1.0)?.mass().sqrt() / reference.mass().sqrt();
            (Some(lost.mass() / kept.mass()), Some(dist))
        }
    };

    let level_gaps: Vec<f64> = rows.iter().map(|r| (r.level - c0).abs()).collect();
    let tail = &level_gaps[level_gaps.len().saturating_sub(3)..];
    let gap_shrinking = tail.len() == 3 && tail.windows(2).all(|w| w[1] < w[0]);
    let first_mass = rows[0].u_mass + rows[0].v_mass;
    let mass_bounded = rows.iter().all(|r| r.u_mass + r.v_mass <= 10.0 * first_mass);
    let branch_switch = (cold.level - last.level).abs() > BRANCH_GAP * last.level.abs().max(1.0);

    Ok(LimitReport {
        rows,
        scalar_levels: (c1, c2),
        survivor,
        tie,
        mass_ratio,
        survivor_distance,
        level_gaps,
        gap_shrinking,
        mass_bounded,
        cold_level: cold.level,
        branch_switch,
        final_state: last.state.clone(),
        restarts: opts.restarts,
    })
}
