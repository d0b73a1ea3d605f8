//! Periodic solutions as fixed points of the time-T map: transient seeding,
//! Newton shooting and Floquet classification.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conditions::BoundReport;
use crate::error::{Error, Result};
use crate::integrator::{self, flow_map, monodromy, uniform_times, IntegratorConfig, Trajectory};
use crate::linalg::{self, Mat2};
use crate::model::{LogField, LogState, ModelParams};

/// Determinant threshold below which `M - I` counts as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// Orbit samples are never coarser than this many points per period.
pub const MIN_SAMPLES: usize = 256;

/// Slack used by [`verify_bounds`].
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientSeed {
    pub endpoint: LogState,
    /// `||z(nT) - z((n-1)T)||_inf`
    pub contraction: f64,
    pub periods: usize,
}

/// Integrates `n_periods` periods from `z_start`.
pub fn seed_by_transient(
    params: &ModelParams,
    z_start: LogState,
    n_periods: usize,
    cfg: &IntegratorConfig,
) -> Result<TransientSeed> {
    if n_periods == 0 {
        return Err(Error::InvalidParameter {
            name: "n_periods",
            reason: "need at least one period".into(),
        });
    }
    let mut z = z_start;
    let mut contraction = f64::NAN;
    for _ in 0..n_periods {
        let next = flow_map(params, z, cfg)?;
        contraction = sup_dist(next, z);
        z = next;
    }
    Ok(TransientSeed {
        endpoint: z,
        contraction,
        periods: n_periods,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Sample intervals per period for `orbit_samples`; raised to [`MIN_SAMPLES`].
    pub samples: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10,
            samples: MIN_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub z0: LogState,
    pub residual_norm: f64,
    pub monodromy: Mat2,
    pub floquet_multipliers: [Complex64; 2],
    pub stable: bool,
    pub newton_iterations: usize,
    /// `||G(z_k)||_inf` for every Newton iterate, starting with the guess.
    pub residual_history: Vec<f64>,
    /// One period in log coordinates.
    pub orbit_samples: Trajectory,
}

/// Newton iteration on `G(z) = flow_map(z) - z` with Jacobian `M(z) - I`.
pub fn find_periodic_orbit(
    params: &ModelParams,
    guess: LogState,
    opts: &OrbitOptions,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be > 0, got {}", opts.tol),
        });
    }
    params.validate()?;
    let mut z = guess;
    let mut history = Vec::new();
    let mut mono = monodromy(params, z, cfg)?;
    for iter in 0..=opts.max_iter {
        let g = [mono.endpoint.z1 - z.z1, mono.endpoint.z2 - z.z2];
        let residual = g[0].abs().max(g[1].abs());
        history.push(residual);
        if residual < opts.tol {
            return finish(params, z, residual, mono.matrix, iter, history, opts, cfg);
        }
        if iter == opts.max_iter {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual,
                z: z.as_array(),
            });
        }
        let m = mono.matrix;
        let jac = [[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]];
        let Some(step) = linalg::solve(&jac, [-g[0], -g[1]], SINGULAR_DET) else {
            return Err(Error::SingularJacobian {
                det: linalg::det(&jac),
                z: z.as_array(),
            });
        };
        // back off only when the full step leaves the representable range
        let mut scale = 1.0;
        let mut attempt = 0;
        loop {
            let cand = LogState::new(z.z1 + scale * step[0], z.z2 + scale * step[1]);
            match monodromy(params, cand, cfg) {
                Ok(next) => {
                    z = cand;
                    mono = next;
                    break;
                }
                Err(_) if attempt < 10 => {
                    scale *= 0.5;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    unreachable!("loop returns at iter == max_iter")
}

#[allow(clippy::too_many_arguments)]
fn finish(
    params: &ModelParams,
    z0: LogState,
    residual: f64,
    matrix: Mat2,
    iterations: usize,
    residual_history: Vec<f64>,
    opts: &OrbitOptions,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    let multipliers = linalg::eigenvalues(&matrix);
    let times = uniform_times(0.0, params.period(), opts.samples.max(MIN_SAMPLES));
    let orbit_samples = integrator::integrate_at(&LogField(params), 0.0, z0.as_array(), &times, cfg)?;
    Ok(PeriodicOrbit {
        z0,
        residual_norm: residual,
        monodromy: matrix,
        floquet_multipliers: multipliers,
        stable: multipliers.iter().all(|m| m.norm() < 1.0),
        newton_iterations: iterations,
        residual_history,
        orbit_samples,
    })
}

fn sup_dist(a: LogState, b: LogState) -> f64 {
    (a.z1 - b.z1).abs().max((a.z2 - b.z2).abs())
}

/// One inequality checked over all orbit samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    /// `None` when the bound itself is undefined.
    pub holds: Option<bool>,
    /// Log-space bound.
    pub bound: Option<f64>,
    /// Same bound in densities, `exp(bound)`.
    pub bound_x: Option<f64>,
    /// Smallest signed distance to the bound over the samples; negative means violated.
    pub worst_margin: Option<f64>,
}

impl BoundVerdict {
    fn upper(bound: Option<f64>, max: f64) -> Self {
        Self::build(bound, |b| b - max)
    }

    fn lower(bound: Option<f64>, min: f64) -> Self {
        Self::build(bound, |b| min - b)
    }

    fn build(bound: Option<f64>, margin: impl Fn(f64) -> f64) -> Self {
        match bound {
            Some(b) => {
                let m = margin(b);
                Self {
                    holds: Some(m >= -BOUND_SLACK),
                    bound: Some(b),
                    bound_x: Some(b.exp()),
                    worst_margin: Some(m),
                }
            }
            None => Self {
                holds: None,
                bound: None,
                bound_x: None,
                worst_margin: None,
            },
        }
    }
}

/// `L2 <= z1 <= L1` and `L4 <= z2 <= L3` on the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdicts {
    pub z1_upper_l1: BoundVerdict,
    pub z1_lower_l2: BoundVerdict,
    pub z2_upper_l3: BoundVerdict,
    pub z2_lower_l4: BoundVerdict,
}

impl BoundVerdicts {
    pub fn as_array(&self) -> [&BoundVerdict; 4] {
        [&self.z1_upper_l1, &self.z1_lower_l2, &self.z2_upper_l3, &self.z2_lower_l4]
    }

    /// All applicable inequalities hold (vacuously true if none apply).
    pub fn all_applicable_hold(&self) -> bool {
        self.as_array().iter().all(|v| v.holds != Some(false))
    }
}

pub fn verify_bounds(orbit: &PeriodicOrbit, report: &BoundReport) -> BoundVerdicts {
    verify_samples(&orbit.orbit_samples, report)
}

/// Bound check on any log-frame sample set.
pub fn verify_samples(samples: &Trajectory, report: &BoundReport) -> BoundVerdicts {
    let log = match samples.frame {
        integrator::Frame::Log => samples.clone(),
        integrator::Frame::Original => Trajectory {
            frame: integrator::Frame::Log,
            times: samples.times.clone(),
            states: samples.states.iter().map(|s| [s[0].ln(), s[1].ln()]).collect(),
        },
    };
    let fold = |i: usize| {
        log.states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s[i]), hi.max(s[i]))
        })
    };
    let (z1_min, z1_max) = fold(0);
    let (z2_min, z2_max) = fold(1);
    BoundVerdicts {
        z1_upper_l1: BoundVerdict::upper(Some(report.L1), z1_max),
        z1_lower_l2: BoundVerdict::lower(report.L2, z1_min),
        z2_upper_l3: BoundVerdict::upper(report.L3, z2_max),
        z2_lower_l4: BoundVerdict::lower(report.L4, z2_min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaged::solve_averaged;
    use crate::conditions::{compute_bounds, BoundOptions};
    use crate::integrator::Frame;
    use crate::model::State;
    use crate::PeriodicCoefficient;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    fn coexistence_orbit() -> PeriodicOrbit {
        let p = ModelParams::coexistence();
        let seed = seed_by_transient(&p, State::new(0.002, 0.002).to_log(), 30, &cfg()).unwrap();
        find_periodic_orbit(&p, seed.endpoint, &OrbitOptions::default(), &cfg()).unwrap()
    }

    #[test]
    fn coexistence_orbit_converges_and_is_stable() {
        let orbit = coexistence_orbit();
        assert!(orbit.residual_norm < 1e-10);
        assert!(orbit.newton_iterations <= 10);
        // reference from an independent scipy DOP853 shooting run
        assert!((orbit.z0.z1 - 0.6262173).abs() < 1e-6);
        assert!((orbit.z0.z2 - -0.60282502).abs() < 1e-6);
        assert!(orbit.stable);
        let mods: Vec<f64> = orbit.floquet_multipliers.iter().map(|m| m.norm()).collect();
        assert!((mods[0] - 0.21995734).abs() < 1e-5 && (mods[1] - 0.00761116).abs() < 1e-6);
        let prod = orbit.floquet_multipliers[0] * orbit.floquet_multipliers[1];
        assert!((prod.re - linalg::det(&orbit.monodromy)).abs() < 1e-10);
        let sum = orbit.floquet_multipliers[0] + orbit.floquet_multipliers[1];
        assert!((sum.re - linalg::trace(&orbit.monodromy)).abs() < 1e-10);
        assert_eq!(orbit.orbit_samples.len(), MIN_SAMPLES + 1);
    }

    #[test]
    fn orbit_persists_and_closes_in_densities() {
        let p = ModelParams::coexistence();
        let orbit = coexistence_orbit();
        let mut z = orbit.z0;
        for _ in 0..5 {
            z = flow_map(&p, z, &cfg()).unwrap();
        }
        assert!(sup_dist(z, orbit.z0) < 100.0 * 1e-10);

        let x = orbit.orbit_samples.to_original();
        let (first, last) = (x.states[0], *x.states.last().unwrap());
        for i in 0..2 {
            assert!((last[i] - first[i]).abs() < 1e-8 * first[i]);
        }
        assert!(x.states.iter().all(|s| s[0] > 0.0 && s[1] > 0.0));
    }

    #[test]
    fn newton_converges_quadratically() {
        let p = ModelParams::coexistence();
        let guess = LogState::new(0.2, -1.2);
        let orbit = find_periodic_orbit(&p, guess, &OrbitOptions { tol: 1e-12, ..Default::default() }, &cfg()).unwrap();
        let h = &orbit.residual_history;
        assert!(h.len() >= 3, "{h:?}");
        let mut checked = 0;
        for w in h.windows(2) {
            if w[0] < 1e-4 && w[1] > 1e-13 {
                assert!(w[1] <= 1e3 * w[0] * w[0], "{h:?}");
                checked += 1;
            }
        }
        assert!(checked >= 1, "{h:?}");
    }

    #[test]
    fn perturbed_start_reconverges() {
        let p = ModelParams::coexistence();
        let orbit = coexistence_orbit();
        let start = LogState::new(orbit.z0.z1 + 1e-4, orbit.z0.z2 + 1e-4);
        let again = find_periodic_orbit(&p, start, &OrbitOptions::default(), &cfg()).unwrap();
        assert!(sup_dist(again.z0, orbit.z0) < 1e-8);
    }

    fn constant(r1: f64, r2: f64, b1: f64, b2: f64, k1: f64, k2: f64, w1: f64, w2: f64) -> ModelParams {
        ModelParams {
            r1: PeriodicCoefficient::constant(r1),
            r2: PeriodicCoefficient::constant(r2),
            beta1: PeriodicCoefficient::constant(b1),
            beta2: PeriodicCoefficient::constant(b2),
            k1,
            k2,
            w1,
            w2,
        }
    }

    #[test]
    fn constant_coefficients_give_the_equilibrium() {
        let p = constant(1.0, 1.5, 0.1, 0.005, 1.0, 1.0, 1.0, 0.0);
        let eq = solve_averaged(&p, 1.0, LogState::new(0.0, 0.0), 1e-13, 50).unwrap();
        assert!(flow_map(&p, eq, &cfg()).map(|z| sup_dist(z, eq)).unwrap() < 1e-8);

        let seed = seed_by_transient(&p, LogState::new(0.3, -0.2), 50, &cfg()).unwrap();
        assert!(sup_dist(seed.endpoint, eq) < 1e-6);

        let orbit = find_periodic_orbit(&p, seed.endpoint, &OrbitOptions::default(), &cfg()).unwrap();
        assert!(sup_dist(orbit.z0, eq) < 1e-9);
        assert!(orbit.orbit_samples.states.iter().all(|s| (s[0] - eq.z1).abs() < 1e-9 && (s[1] - eq.z2).abs() < 1e-9));

        let report = compute_bounds(&p, &BoundOptions::default()).unwrap();
        assert!(report.all_hold());
        let v = verify_bounds(&orbit, &report);
        assert!(v.as_array().iter().all(|b| b.holds == Some(true)), "{v:?}");
    }

    #[test]
    fn lower_density_bound_ignores_competition_loss() {
        // h0 carries no beta2 term, so the constant coexistence equilibrium
        // x2 = 0.5635 sits below h0 = 0.6 even though A1-A3 hold
        let p = ModelParams::coexistence().averaged();
        let eq = solve_averaged(&p, 1.0, LogState::new(0.0, 0.0), 1e-13, 50).unwrap();
        let orbit = find_periodic_orbit(&p, eq, &OrbitOptions::default(), &cfg()).unwrap();
        let report = compute_bounds(&p, &BoundOptions::default()).unwrap();
        assert!(report.all_hold());
        assert!((report.h0 - 0.6).abs() < 1e-12);
        let v = verify_bounds(&orbit, &report);
        assert_eq!(v.z2_lower_l4.holds, Some(false));
        assert!(v.z2_lower_l4.worst_margin.unwrap() < -0.06);
        assert_eq!(v.z1_upper_l1.holds, Some(true));
        assert_eq!(v.z1_lower_l2.holds, Some(true));
        assert_eq!(v.z2_upper_l3.holds, Some(true));
    }

    #[test]
    fn converged_start_is_a_fixed_point_of_the_transient() {
        let p = ModelParams::coexistence();
        let orbit = coexistence_orbit();
        let seed = seed_by_transient(&p, orbit.z0, 3, &cfg()).unwrap();
        assert!(sup_dist(seed.endpoint, orbit.z0) < 1e-7);
        assert!(seed.contraction < 1e-7);
    }

    #[test]
    fn example1_has_no_positive_orbit_to_find() {
        // x2 keeps decaying toward the boundary state (k1, 0)
        let p = ModelParams::example1();
        let seed = seed_by_transient(&p, State::new(0.002, 0.002).to_log(), 30, &cfg()).unwrap();
        assert!(seed.contraction > 0.1, "{seed:?}");
        let res = find_periodic_orbit(&p, seed.endpoint, &OrbitOptions::default(), &cfg());
        assert!(
            matches!(res, Err(Error::NonConvergence { .. }) | Err(Error::SingularJacobian { .. }) | Err(Error::DomainOverflow { .. }) | Err(Error::StepUnderflow { .. })),
            "{res:?}"
        );
    }

    #[test]
    fn zero_periods_rejected() {
        let p = ModelParams::coexistence();
        assert!(seed_by_transient(&p, LogState::new(0.0, 0.0), 0, &cfg()).is_err());
        assert!(find_periodic_orbit(&p, LogState::new(0.0, 0.0), &OrbitOptions { tol: 0.0, ..Default::default() }, &cfg()).is_err());
    }

    #[test]
    fn artificial_samples_outside_the_box() {
        let report = compute_bounds(&ModelParams::coexistence(), &BoundOptions::default()).unwrap();
        let l1 = report.L1;
        let l2 = report.L2.unwrap();
        let samples = Trajectory {
            frame: Frame::Log,
            times: vec![0.0, 1.0],
            states: vec![[l1 + 0.5, -0.5], [l2 - 0.25, -0.5]],
        };
        let v = verify_samples(&samples, &report);
        assert_eq!(v.z1_upper_l1.holds, Some(false));
        assert!((v.z1_upper_l1.worst_margin.unwrap() - -0.5).abs() < 1e-12);
        assert_eq!(v.z1_lower_l2.holds, Some(false));
        assert!((v.z1_lower_l2.worst_margin.unwrap() - -0.25).abs() < 1e-12);
        assert!(!v.all_applicable_hold());
    }

    #[test]
    fn undefined_bounds_are_not_applicable() {
        let mut p = ModelParams::coexistence();
        p.beta1 = p.beta1.scaled(100.0);
        let report = compute_bounds(&p, &BoundOptions::default()).unwrap();
        assert!(report.L2.is_none());
        let samples = Trajectory {
            frame: Frame::Log,
            times: vec![0.0],
            states: vec![[0.0, 0.0]],
        };
        let v = verify_samples(&samples, &report);
        assert_eq!(v.z1_lower_l2.holds, None);
        assert!(v.z1_lower_l2.worst_margin.is_none());
    }
}
