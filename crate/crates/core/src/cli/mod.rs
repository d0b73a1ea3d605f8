//! Command implementations behind the `allelo` binary.
//!
//! Every command reads an [`ExperimentConfig`], writes its artifacts into an
//! output directory and returns an [`Outcome`] whose exit code follows one
//! contract: 0 when every requested check passes, 1 when a check fails or a
//! computation does not converge, 2 for usage and configuration errors.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{ConfigError, ExperimentConfig, Tolerances};

use crate::averaged::{closed_form_mu0, solve_averaged, ClosedFormMu0};
use crate::conditions::{check_conditions, compute_bounds, BoundReport, ConditionCheck};
use crate::integrator::{integrate_at, Trajectory};
use crate::model::{LogField, LogState, ModelParams, State};
use crate::orbit::{find_periodic_orbit, seed_by_transient, verify_bounds, BoundVerdicts, PeriodicOrbit, TransientSeed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// End-of-run derivative norm below which a trajectory counts as at rest.
pub const STEADY_STATE_TOL: f64 = 1e-7;
/// Largest one-period shift difference still accepted as periodic.
pub const PERIODIC_SHIFT_TOL: f64 = 1e-6;
/// Smallest one-period amplitude reported as an oscillation.
pub const OSCILLATION_AMPLITUDE: f64 = 1e-6;
/// Tolerance of the regression deltas in `reproduce`.
pub const GOLDEN_TOL: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Model(_) => EXIT_FAILED,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Result of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    /// Written artifacts, in creation order.
    pub files: Vec<PathBuf>,
    /// One-line human summary for the terminal.
    pub summary: String,
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            context: format!("creating {}", dir.display()),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, &text)
}

// ---------------------------------------------------------------------------
// check

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedSummary {
    pub mu: f64,
    pub root: Option<LogState>,
    pub root_x: Option<State>,
    pub error: Option<String>,
    pub closed_form_mu0: Option<ClosedFormMu0>,
    pub closed_form_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckDocument {
    #[serde(flatten)]
    pub report: BoundReport,
    pub all_hold: bool,
    /// Coefficients that are not strictly positive on the extremum interval.
    pub flagged_coefficients: Vec<&'static str>,
    pub averaged: AveragedSummary,
}

/// Damped Newton on the averaged system from a few fixed starting points.
pub fn averaged_summary(params: &ModelParams, start: LogState) -> AveragedSummary {
    let guesses = [LogState::new(0.0, 0.0), start, LogState::new(0.0, -5.0)];
    let mut first_error = None;
    let mut root = None;
    for g in guesses {
        match solve_averaged(params, 1.0, g, 1e-12, 100) {
            Ok(z) => {
                root = Some(z);
                break;
            }
            Err(e) => {
                first_error.get_or_insert(e.to_string());
            }
        }
    }
    let (closed_form_mu0, closed_form_error) = match closed_form_mu0(params) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    AveragedSummary {
        mu: 1.0,
        root,
        root_x: root.map(LogState::to_original),
        error: root.is_none().then(|| first_error.unwrap_or_default()),
        closed_form_mu0,
        closed_form_error,
    }
}

pub fn check_document(cfg: &ExperimentConfig) -> CliResult<CheckDocument> {
    let report = compute_bounds(&cfg.model, &cfg.bound_options())?;
    let all_hold = report.all_hold();
    let flagged_coefficients = report.positivity_audit.flagged();
    let averaged = averaged_summary(&cfg.model, cfg.initial_state.to_log());
    Ok(CheckDocument {
        report,
        all_hold,
        flagged_coefficients,
        averaged,
    })
}

/// Writes `check.json`; exit 0 only when A1, A2 and A3 all hold.
pub fn cmd_check(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<Outcome> {
    run_check(cfg, out_dir).map(|(o, _)| o)
}

fn run_check(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<(Outcome, CheckDocument)> {
    let doc = check_document(cfg)?;
    let path = out_dir.join("check.json");
    write_json(&path, &doc)?;
    let c = doc.report.conditions();
    let mark = |b: bool| if b { "holds" } else { "fails" };
    let outcome = Outcome {
        exit_code: if doc.all_hold { EXIT_OK } else { EXIT_FAILED },
        files: vec![path],
        summary: format!(
            "A1 {} (margin {:e}), A2 {} (margin {:e}), A3 {} (margin {:e})",
            mark(c.A1.holds),
            c.A1.margin,
            mark(c.A2.holds),
            c.A2.margin,
            mark(c.A3.holds),
            c.A3.margin
        ),
    };
    Ok((outcome, doc))
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub horizon: f64,
    pub period: f64,
    pub samples: usize,
    pub final_time: f64,
    pub final_state: State,
    /// `||f(t, x)||_inf` in the original frame at the final sample.
    pub final_derivative_norm: f64,
    pub steady_state: bool,
    /// `max |x(t) - x(t - T)|` over the last full period, if one was simulated.
    pub tail_period_shift: Option<f64>,
    /// Largest component range over the last full period.
    pub tail_amplitude: Option<f64>,
    pub periodic_oscillation: bool,
}

/// Index of the last sample of the form `k T / samples_per_period`.
fn aligned_count(period: f64, samples_per_period: usize, horizon: f64) -> usize {
    (horizon / period * samples_per_period as f64 * (1.0 + 1e-12)).floor() as usize
}

/// Output times `k T / samples_per_period` up to the horizon, plus the horizon itself.
pub fn sample_times(period: f64, samples_per_period: usize, horizon: f64) -> Vec<f64> {
    let step = period / samples_per_period as f64;
    let n = aligned_count(period, samples_per_period, horizon);
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let last = *times.last().expect("at least t = 0");
    if horizon - last > 1e-9 * horizon {
        times.push(horizon);
    }
    times
}

/// Integrates the configured run in log coordinates and returns densities.
pub fn simulate(cfg: &ExperimentConfig) -> CliResult<(Trajectory, SimulationSummary)> {
    let params = &cfg.model;
    let period = params.period();
    let times = sample_times(period, cfg.samples_per_period, cfg.horizon);
    let z0 = cfg.initial_state.to_log();
    let traj = integrate_at(&LogField(params), 0.0, z0.as_array(), &times, &cfg.integrator)?.to_original();

    let (final_time, last) = traj.last().expect("non-empty trajectory");
    let final_state = State::from(last);
    let f = params.rhs_original(final_time, final_state);
    let final_derivative_norm = f[0].abs().max(f[1].abs());

    // samples k T / spp stay aligned with the period; an appended horizon point does not
    let spp = cfg.samples_per_period;
    let aligned = aligned_count(period, spp, cfg.horizon);
    let (tail_period_shift, tail_amplitude) = if aligned >= spp {
        let window = &traj.states[aligned - spp..=aligned];
        let shift = (aligned - spp + 1..=aligned)
            .flat_map(|i| (0..2).map(move |c| (i, c)))
            .map(|(i, c)| (traj.states[i][c] - traj.states[i - spp][c]).abs())
            .fold(0.0f64, f64::max);
        let amplitude = (0..2)
            .map(|c| {
                let (lo, hi) = window
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[c]), hi.max(s[c])));
                hi - lo
            })
            .fold(0.0f64, f64::max);
        (Some(shift), Some(amplitude))
    } else {
        (None, None)
    };
    let periodic_oscillation = matches!(
        (tail_period_shift, tail_amplitude),
        (Some(s), Some(a)) if s < PERIODIC_SHIFT_TOL && a > OSCILLATION_AMPLITUDE
    );

    let summary = SimulationSummary {
        horizon: cfg.horizon,
        period,
        samples: traj.len(),
        final_time,
        final_state,
        final_derivative_norm,
        steady_state: final_derivative_norm < STEADY_STATE_TOL,
        tail_period_shift,
        tail_amplitude,
        periodic_oscillation,
    };
    Ok((traj, summary))
}

/// Writes `trajectory.csv` (`t,x1,x2`) and `simulation.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<Outcome> {
    run_simulate(cfg, out_dir).map(|(o, _)| o)
}

fn run_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<(Outcome, SimulationSummary)> {
    let (traj, summary) = simulate(cfg)?;
    let csv = out_dir.join("trajectory.csv");
    let json = out_dir.join("simulation.json");
    write_file(&csv, &traj.to_csv_string())?;
    write_json(&json, &summary)?;
    let outcome = Outcome {
        exit_code: EXIT_OK,
        files: vec![csv, json],
        summary: format!(
            "t = {}: x = ({:e}, {:e}), |f| = {:e}, steady state: {}, periodic oscillation: {}",
            summary.final_time,
            summary.final_state.x1,
            summary.final_state.x2,
            summary.final_derivative_norm,
            summary.steady_state,
            summary.periodic_oscillation
        ),
    };
    Ok((outcome, summary))
}

// ---------------------------------------------------------------------------
// find-orbit

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Multiplier {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSummary {
    pub z0: LogState,
    pub x0: State,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub monodromy: [[f64; 2]; 2],
    pub floquet_multipliers: [Multiplier; 2],
    pub stable: bool,
    /// `[min, max]` of each density over the sampled period.
    pub x_range: [[f64; 2]; 2],
    /// Population variance of each density over the sampled period.
    pub x_variance: [f64; 2],
}

impl OrbitSummary {
    pub fn new(orbit: &PeriodicOrbit) -> Self {
        let x = orbit.orbit_samples.to_original();
        let n = x.states.len().max(1) as f64;
        let stats = |c: usize| {
            let vals = x.states.iter().map(|s| s[c]);
            let (lo, hi) = vals
                .clone()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let mean = vals.clone().sum::<f64>() / n;
            let var = vals.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            ([lo, hi], var)
        };
        let (r1, v1) = stats(0);
        let (r2, v2) = stats(1);
        let mult = |c: num_complex::Complex64| Multiplier {
            re: c.re,
            im: c.im,
            modulus: c.norm(),
        };
        Self {
            z0: orbit.z0,
            x0: orbit.z0.to_original(),
            residual_norm: orbit.residual_norm,
            newton_iterations: orbit.newton_iterations,
            residual_history: orbit.residual_history.clone(),
            monodromy: orbit.monodromy,
            floquet_multipliers: [mult(orbit.floquet_multipliers[0]), mult(orbit.floquet_multipliers[1])],
            stable: orbit.stable,
            x_range: [r1, r2],
            x_variance: [v1, v2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedSummary {
    pub endpoint: LogState,
    pub contraction: f64,
    pub periods: usize,
}

impl From<TransientSeed> for SeedSummary {
    fn from(s: TransientSeed) -> Self {
        Self {
            endpoint: s.endpoint,
            contraction: s.contraction,
            periods: s.periods,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitDocument {
    /// `"converged"` or `"failed"`.
    pub status: &'static str,
    pub period: f64,
    pub conditions: Option<ConditionCheck>,
    pub conditions_hold: Option<bool>,
    pub bounds_error: Option<String>,
    pub seed: Option<SeedSummary>,
    pub orbit: Option<OrbitSummary>,
    pub bound_verdicts: Option<BoundVerdicts>,
    pub error: Option<String>,
    pub failure: Option<FailureDiagnostics>,
}

/// Numbers carried by a failed search.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FailureDiagnostics {
    pub last_z: Option<LogState>,
    pub last_x: Option<State>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub det: Option<f64>,
    pub time: Option<f64>,
}

impl FailureDiagnostics {
    pub fn from_error(e: &crate::Error) -> Self {
        use crate::Error as E;
        let at = |z: [f64; 2]| {
            let z = LogState::from(z);
            (Some(z), Some(z.to_original()))
        };
        match *e {
            E::SingularJacobian { det, z } => {
                let (last_z, last_x) = at(z);
                Self { last_z, last_x, det: Some(det), ..Self::default() }
            }
            E::NonConvergence { iterations, residual, z } => {
                let (last_z, last_x) = at(z);
                Self { last_z, last_x, residual: Some(residual), iterations: Some(iterations), ..Self::default() }
            }
            E::NoPositiveSolution { residual, z } => {
                let (last_z, last_x) = at(z);
                Self { last_z, last_x, residual: Some(residual), ..Self::default() }
            }
            E::DomainOverflow { t, z1, z2 } => Self {
                last_z: Some(LogState::new(z1, z2)),
                time: Some(t),
                ..Self::default()
            },
            E::StepUnderflow { t, .. } | E::NonFinite { t } => Self { time: Some(t), ..Self::default() },
            _ => Self::default(),
        }
    }
}

/// Seeds by transient integration, runs the shooting Newton and checks the bounds.
pub fn find_orbit(cfg: &ExperimentConfig) -> (OrbitDocument, Option<PeriodicOrbit>) {
    let params = &cfg.model;
    let report = compute_bounds(params, &cfg.bound_options());
    let (conditions, bounds_error) = match &report {
        Ok(r) => (Some(check_conditions(r)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut doc = OrbitDocument {
        status: "failed",
        period: params.period(),
        conditions,
        conditions_hold: conditions.map(|c| c.all_hold()),
        bounds_error,
        seed: None,
        orbit: None,
        bound_verdicts: None,
        error: None,
        failure: None,
    };
    let seed = match seed_by_transient(params, cfg.initial_state.to_log(), cfg.seed_periods, &cfg.integrator) {
        Ok(s) => s,
        Err(e) => {
            doc.error = Some(format!("transient seeding failed: {e}"));
            doc.failure = Some(FailureDiagnostics::from_error(&e));
            return (doc, None);
        }
    };
    doc.seed = Some(seed.into());
    match find_periodic_orbit(params, seed.endpoint, &cfg.orbit_options(), &cfg.integrator) {
        Ok(orbit) => {
            doc.status = "converged";
            doc.orbit = Some(OrbitSummary::new(&orbit));
            doc.bound_verdicts = report.as_ref().ok().map(|r| verify_bounds(&orbit, r));
            (doc, Some(orbit))
        }
        Err(e) => {
            doc.error = Some(e.to_string());
            doc.failure = Some(FailureDiagnostics::from_error(&e));
            (doc, None)
        }
    }
}

/// Writes `orbit.json` and, on convergence, `orbit.csv` (`t,x1,x2`) and
/// `orbit_log.csv` (`t,z1,z2`). Exit 0 when the orbit converged and every
/// applicable bound holds on it.
pub fn cmd_find_orbit(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<Outcome> {
    run_find_orbit(cfg, out_dir).map(|(o, _)| o)
}

fn run_find_orbit(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<(Outcome, OrbitDocument)> {
    let (doc, orbit) = find_orbit(cfg);
    let json = out_dir.join("orbit.json");
    write_json(&json, &doc)?;
    let mut files = vec![json];
    let outcome = match (&doc.orbit, orbit) {
        (Some(summary), Some(orbit)) => {
            let csv = out_dir.join("orbit.csv");
            let log_csv = out_dir.join("orbit_log.csv");
            write_file(&csv, &orbit.orbit_samples.to_original().to_csv_string())?;
            write_file(&log_csv, &orbit.orbit_samples.to_csv_string())?;
            files.push(csv);
            files.push(log_csv);
            let bounds_ok = doc.bound_verdicts.as_ref().map_or(true, BoundVerdicts::all_applicable_hold);
            let m = &summary.floquet_multipliers;
            Outcome {
                exit_code: if bounds_ok { EXIT_OK } else { EXIT_FAILED },
                files,
                summary: format!(
                    "orbit through x = ({:.10}, {:.10}), residual {:e}, multipliers |{:.6}|, |{:.6}| ({}), bounds {}",
                    summary.x0.x1,
                    summary.x0.x2,
                    summary.residual_norm,
                    m[0].modulus,
                    m[1].modulus,
                    if summary.stable { "stable" } else { "unstable" },
                    if bounds_ok { "hold" } else { "violated" }
                ),
            }
        }
        _ => Outcome {
            exit_code: EXIT_FAILED,
            files,
            summary: format!("no periodic orbit: {}", doc.error.as_deref().unwrap_or("unknown failure")),
        },
    };
    Ok((outcome, doc))
}

// ---------------------------------------------------------------------------
// reproduce

/// Configurations shipped with the binary.
pub const BUNDLED: [(&str, &str); 3] = [
    ("example1", include_str!("../../configs/example1.json")),
    ("remark-constant", include_str!("../../configs/remark-constant.json")),
    ("coexistence", include_str!("../../configs/coexistence.json")),
];

pub fn bundled_config(name: &str) -> CliResult<ExperimentConfig> {
    let (_, text) = BUNDLED.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<_> = BUNDLED.iter().map(|(n, _)| *n).collect();
        CliError::Usage(format!("unknown experiment `{name}`; expected one of: {}", names.join(", ")))
    })?;
    Ok(ExperimentConfig::from_json(text, &format!("<bundled {name}>"))?)
}

/// Published value of a derived quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Golden {
    pub name: &'static str,
    pub expected: f64,
    pub actual: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Expected qualitative outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub name: &'static str,
    pub expected: bool,
    pub actual: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepExit {
    pub check: i32,
    pub simulate: i32,
    pub find_orbit: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: String,
    /// Paths relative to the experiment directory.
    pub files: Vec<String>,
    pub goldens: Vec<Golden>,
    pub expectations: Vec<Expectation>,
    pub steps: StepExit,
    pub exit_code: i32,
}

fn golden(name: &'static str, expected: f64, actual: f64) -> Golden {
    let delta = (actual - expected).abs();
    Golden {
        name,
        expected,
        actual,
        delta,
        tolerance: GOLDEN_TOL,
        pass: delta <= GOLDEN_TOL,
    }
}

fn expectation(name: &'static str, expected: bool, actual: bool) -> Expectation {
    Expectation {
        name,
        expected,
        actual,
        pass: expected == actual,
    }
}

fn published_goldens(name: &str, report: &BoundReport) -> Vec<Golden> {
    match name {
        "example1" => vec![
            golden("k2_r2M", 5.4006, report.k2_r2M),
            golden("one_plus_w1k1", 161.0, report.one_plus_w1k1),
            golden("m0", 0.0446, report.m0),
            golden("beta1M_m0", 0.0223, report.beta1M_m0),
            golden("r1L", 0.03, report.r1L),
            golden("r2L_k2", 0.0006, report.r2L_k2),
            golden("a3_rhs", 15600.9161, report.a3_rhs),
        ],
        _ => Vec::new(),
    }
}

fn published_expectations(
    name: &str,
    check: &CheckDocument,
    sim: &SimulationSummary,
    orbit: &OrbitDocument,
) -> Vec<Expectation> {
    let converged = orbit.status == "converged";
    match name {
        "example1" => vec![
            expectation("conditions_hold", true, check.all_hold),
            expectation("positive_periodic_orbit", true, converged),
        ],
        "remark-constant" => vec![
            expectation("steady_state", true, sim.steady_state),
            expectation("periodic_oscillation", false, sim.periodic_oscillation),
            expectation("positive_periodic_orbit", true, converged),
        ],
        _ => vec![
            expectation("conditions_hold", true, check.all_hold),
            expectation("positive_periodic_orbit", true, converged),
            expectation("stable", true, orbit.orbit.as_ref().is_some_and(|o| o.stable)),
        ],
    }
}

/// Runs `check`, `simulate` and `find-orbit` on a bundled experiment into
/// `out_root/<name>/` and writes `manifest.json` with regression deltas.
pub fn cmd_reproduce(name: &str, out_root: &Path) -> CliResult<Outcome> {
    let cfg = bundled_config(name)?;
    let dir = out_root.join(name);
    let config_path = dir.join("config.json");
    write_file(&config_path, &(cfg.to_json() + "\n"))?;

    let (check, check_doc) = run_check(&cfg, &dir)?;
    let (sim, sim_summary) = run_simulate(&cfg, &dir)?;
    let (orbit, orbit_doc) = run_find_orbit(&cfg, &dir)?;

    let goldens = published_goldens(name, &check_doc.report);
    let expectations = published_expectations(name, &check_doc, &sim_summary, &orbit_doc);
    let regressions_ok = goldens.iter().all(|g| g.pass) && expectations.iter().all(|e| e.pass);

    let mut all_files = vec![config_path];
    all_files.extend(check.files.iter().cloned());
    all_files.extend(sim.files.iter().cloned());
    all_files.extend(orbit.files.iter().cloned());
    let manifest_path = dir.join("manifest.json");
    let relative = |p: &PathBuf| {
        p.strip_prefix(&dir)
            .unwrap_or(p)
            .to_string_lossy()
            .replace('\\', "/")
    };
    let mut files: Vec<String> = all_files.iter().map(relative).collect();
    files.push("manifest.json".into());

    let steps = StepExit {
        check: check.exit_code,
        simulate: sim.exit_code,
        find_orbit: orbit.exit_code,
    };
    let exit_code = if regressions_ok && steps.check == EXIT_OK && steps.simulate == EXIT_OK && steps.find_orbit == EXIT_OK {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    let failed: Vec<&str> = goldens
        .iter()
        .filter(|g| !g.pass)
        .map(|g| g.name)
        .chain(expectations.iter().filter(|e| !e.pass).map(|e| e.name))
        .collect();
    let manifest = Manifest {
        experiment: name.to_string(),
        files,
        goldens,
        expectations,
        steps,
        exit_code,
    };
    write_json(&manifest_path, &manifest)?;
    all_files.push(manifest_path);

    let summary = if failed.is_empty() && exit_code == EXIT_OK {
        format!("{name}: all published values and outcomes reproduced")
    } else if failed.is_empty() {
        format!("{name}: published values reproduced, but a step failed")
    } else {
        format!("{name}: not reproduced: {}", failed.join(", "))
    };
    Ok(Outcome {
        exit_code,
        files: all_files,
        summary,
    })
}
