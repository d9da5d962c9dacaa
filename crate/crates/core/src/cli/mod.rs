//! Command-line runs: parse a config, dispatch to a solver or experiment and
//! persist the results in an output directory.
//!
//! Exit codes: 0 success, 1 invalid input or failed hypothesis check,
//! 2 non-convergence, 3 I/O failure.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_config_with_overrides, render_config, RunParameters, OVERRIDE_LINE};

use crate::energy::StatePair;
use crate::error::{Error, Result};
use crate::experiments::{compare_periodic_limit, lambda_sweep, theorem_c_limit, write_sweep_csv};
use crate::grid::write_field_file;
use crate::model::validate_assumptions;
use crate::solver::{
    default_init, mountain_pass_diagnostics, solve_scalar_with_restarts, solve_with_restarts, SolveReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Check,
    Solve,
    SolveScalar,
    Sweep,
    ComparePeriodic,
    Limit,
    Diagnose,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Check => "check",
            Subcommand::Solve => "solve",
            Subcommand::SolveScalar => "solve-scalar",
            Subcommand::Sweep => "sweep",
            Subcommand::ComparePeriodic => "compare-periodic",
            Subcommand::Limit => "limit",
            Subcommand::Diagnose => "diagnose",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    /// `key=value` strings applied after the file.
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
}

/// Exit code for an error escaping a run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::FieldFormat(_) => EXIT_IO,
        Error::BracketFailure { .. } | Error::NonFinite(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_INVALID,
    }
}

/// Text written to `report.txt` plus the exit code the run earned.
struct Outcome {
    text: String,
    code: i32,
}

fn converged_code(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn write_state(dir: &Path, state: &StatePair) -> Result<()> {
    write_field_file(dir.join("u.field"), &state.u)?;
    write_field_file(dir.join("v.field"), &state.v)
}

fn solved(dir: &Path, report: &SolveReport, text: &mut String) -> Result<i32> {
    write_state(dir, &report.state)?;
    let _ = writeln!(text, "{report}");
    Ok(converged_code(report.converged))
}

fn dispatch(cmd: Subcommand, params: &RunParameters, dir: &Path) -> Result<Outcome> {
    let spec = &params.spec;
    let opts = &params.options;
    let mut text = String::new();
    let _ = writeln!(text, "subcommand = {}", cmd.name());
    let _ = writeln!(text, "\n[config]\n{}", render_config(params));

    let validation = validate_assumptions(spec);
    let _ = writeln!(text, "[validation]\n{validation}");
    // compare-periodic and the coupling ladders validate every problem they build
    let needs_valid = matches!(cmd, Subcommand::Check | Subcommand::Solve | Subcommand::Diagnose);
    if needs_valid && !validation.passed() {
        return Ok(Outcome {
            text,
            code: EXIT_INVALID,
        });
    }

    let code = match cmd {
        Subcommand::Check => EXIT_OK,
        Subcommand::Solve => {
            let r = solve_with_restarts(&spec.build()?, opts)?;
            let _ = writeln!(text, "[solve]");
            solved(dir, &r, &mut text)?
        }
        Subcommand::SolveScalar => {
            let r = solve_scalar_with_restarts(params.component, &spec.build()?, opts)?;
            let _ = writeln!(text, "[solve-scalar {:?}]", params.component);
            solved(dir, &r, &mut text)?
        }
        Subcommand::Sweep => {
            let r = lambda_sweep(spec, &params.scales, opts)?;
            write_sweep_csv(fs::File::create(dir.join("sweep.csv"))?, &r.rows)?;
            let _ = writeln!(text, "[sweep]");
            let _ = writeln!(text, "scalar_levels       = {:.16e}, {:.16e}", r.scalar_levels.0, r.scalar_levels.1);
            let _ = writeln!(text, "limit_level         = {:.16e}", r.limit_level);
            let _ = writeln!(text, "monotone_decreasing = {}", r.monotone_decreasing);
            for row in &r.rows {
                let _ = writeln!(
                    text,
                    "  scale {:.6e}  level {:.16e}  converged {}",
                    row.scale, row.level, row.converged
                );
            }
            converged_code(r.all_converged())
        }
        Subcommand::ComparePeriodic => {
            let r = compare_periodic_limit(spec, opts)?;
            write_state(dir, &r.perturbed.state)?;
            let _ = writeln!(text, "[compare-periodic]");
            let _ = writeln!(text, "level_periodic  = {:.16e}", r.level_periodic);
            let _ = writeln!(text, "level_perturbed = {:.16e}", r.level_perturbed);
            let _ = writeln!(text, "gap             = {:.6e}", r.gap());
            let _ = writeln!(text, "margin          = {:.6e}", r.margin);
            let _ = writeln!(text, "ordering_holds  = {}", r.ordering_holds);
            let _ = writeln!(text, "\n[periodic]\n{}\n\n[perturbed]\n{}", r.periodic, r.perturbed);
            converged_code(r.periodic.converged && r.perturbed.converged)
        }
        Subcommand::Limit => {
            let r = theorem_c_limit(spec, &params.scales, opts)?;
            write_sweep_csv(fs::File::create(dir.join("sweep.csv"))?, &r.rows)?;
            write_state(dir, &r.final_state)?;
            let _ = writeln!(text, "[limit]");
            let _ = writeln!(text, "scalar_levels     = {:.16e}, {:.16e}", r.scalar_levels.0, r.scalar_levels.1);
            let _ = writeln!(text, "survivor          = {:?}", r.survivor);
            let _ = writeln!(text, "tie               = {}", r.tie);
            let _ = writeln!(text, "mass_ratio        = {:?}", r.mass_ratio);
            let _ = writeln!(text, "survivor_distance = {:?}", r.survivor_distance);
            let _ = writeln!(text, "level_gaps        = {:?}", r.level_gaps);
            let _ = writeln!(text, "gap_shrinking     = {}", r.gap_shrinking);
            let _ = writeln!(text, "mass_bounded      = {}", r.mass_bounded);
            let _ = writeln!(text, "cold_level        = {:.16e}", r.cold_level);
            let _ = writeln!(text, "branch_switch     = {}", r.branch_switch);
            converged_code(r.rows.iter().all(|x| x.converged))
        }
        Subcommand::Diagnose => {
            let problem = spec.build()?;
            let probe = default_init(problem.grid(), opts.seed);
            let d = mountain_pass_diagnostics(&problem, &probe, opts)?;
            let r = solve_with_restarts(&problem, opts)?;
            let _ = writeln!(text, "[diagnose]");
            for (rho, m) in d.radii.iter().zip(&d.sphere_min) {
                let _ = writeln!(text, "  radius {rho:.3e}  min energy {m:.6e}");
            }
            let _ = writeln!(text, "small_sphere_positive = {}", d.small_sphere_positive);
            let _ = writeln!(text, "negative_at           = {:?}", d.negative_at);
            let _ = writeln!(text, "ray_max               = {:.16e}", d.ray_max);
            let _ = writeln!(text, "ray_argmax            = {:.16e}", d.ray_argmax);
            let _ = writeln!(text, "ground level          = {:.16e}", r.level);
            let _ = writeln!(text, "ray_max >= level      = {}", d.consistent_with_level(r.level, 1e-8));
            let _ = writeln!(text, "\n[solve]");
            solved(dir, &r, &mut text)?
        }
    };
    Ok(Outcome { text, code })
}

/// Runs one subcommand, printing the report and writing it to
/// `out_dir/report.txt`. Every failure maps to an exit code.
pub fn run(config: &RunConfig) -> i32 {
    let text = match fs::read_to_string(&config.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", config.config_path.display());
            return EXIT_IO;
        }
    };
    let mut overrides = config.overrides.clone();
    if let Some(seed) = config.seed {
        overrides.push(format!("solver.seed={seed}"));
    }
    if let Some(r) = config.restarts {
        overrides.push(format!("solver.restarts={r}"));
    }
    let params = match parse_config_with_overrides(&text, &overrides) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = fs::create_dir_all(&config.out_dir) {
        eprintln!("cannot create {}: {e}", config.out_dir.display());
        return EXIT_IO;
    }
    let outcome = match dispatch(config.subcommand, &params, &config.out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            let text = format!("subcommand = {}\nerror = {e}\n", config.subcommand.name());
            let _ = fs::write(config.out_dir.join("report.txt"), text);
            return exit_code(&e);
        }
    };
    print!("{}", outcome.text);
    if let Err(e) = fs::write(config.out_dir.join("report.txt"), &outcome.text) {
        eprintln!("cannot write report: {e}");
        return EXIT_IO;
    }
    outcome.code
}
