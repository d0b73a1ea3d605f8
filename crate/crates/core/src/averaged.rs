//! The averaged algebraic system and the closed-form mu = 0 candidate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{LogState, ModelParams};

/// Maximum step halvings per damped Newton iteration.
pub const MAX_HALVINGS: usize = 20;

fn sup(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Damped Newton on [`ModelParams::averaged_residual`].
pub fn solve_averaged(
    params: &ModelParams,
    mu: f64,
    guess: LogState,
    tol: f64,
    max_iter: usize,
) -> Result<LogState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be > 0, got {tol}"),
        });
    }
    let mut z = guess;
    let mut res = params.averaged_residual(z, mu)?;
    let mut norm = sup(res);
    let mut res2_negative = res[1] < 0.0;
    let mut best = (norm, z);

    let fail = |z: LogState, norm: f64, all_negative: bool, iterations: usize| {
        if all_negative {
            Error::NoPositiveSolution {
                residual: norm,
                z: z.as_array(),
            }
        } else {
            Error::NonConvergence {
                iterations,
                residual: norm,
                z: z.as_array(),
            }
        }
    };

    for iter in 0..max_iter {
        if norm < tol {
            return Ok(z);
        }
        let jac = params.averaged_jacobian(z, mu);
        let scale = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let Some(step) = linalg::solve(&jac, [-res[0], -res[1]], 1e-300f64.max(1e-14 * scale * scale)) else {
            return Err(fail(best.1, best.0, res2_negative, iter));
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = LogState::new(z.z1 + lambda * step[0], z.z2 + lambda * step[1]);
            if cand.z1.exp().is_finite() && cand.z2.exp().is_finite() {
                let r = params.averaged_residual(cand, mu)?;
                if sup(r) < norm {
                    accepted = Some((cand, r));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((cand, r)) = accepted else {
            return Err(fail(best.1, best.0, res2_negative, iter));
        };
        z = cand;
        res = r;
        norm = sup(r);
        res2_negative &= r[1] < 0.0;
        if norm < best.0 {
            best = (norm, z);
        }
    }
    if norm < tol {
        return Ok(z);
    }
    Err(fail(best.1, best.0, res2_negative, max_iter))
}

/// The explicit `(z1*, z2*)` formulas printed for the `mu = 0` system.
///
/// They solve the linear system `r1 - r1 u / k1 - b1 v = 0`,
/// `r2 v / k2 + b2 u = 0` in `(u, v) = (e^z1, e^z2)` (period means), so
/// `arg1 = u` and `arg2 = v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormMu0 {
    pub denominator: f64,
    pub arg1: f64,
    pub arg2: f64,
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    /// Both logarithm arguments are positive.
    pub valid: bool,
}

pub fn closed_form_mu0(params: &ModelParams) -> Result<ClosedFormMu0> {
    let m = params.means();
    let (k1, k2) = (params.k1, params.k2);
    let coupling = m.beta1 * m.beta2 * k1 * k2;
    let growth = m.r1 * m.r2;
    let denominator = coupling - growth;
    if denominator.abs() <= f64::EPSILON * coupling.abs().max(growth.abs()) {
        return Err(Error::DivisionByZero("mean(beta1) mean(beta2) k1 k2 = mean(r1) mean(r2)"));
    }
    let arg1 = (k1 / m.r1) * (m.r1 - k1 * k2 * m.r1 * m.beta1 * m.beta2 / denominator);
    let arg2 = k1 * k2 * m.r1 * m.beta2 / denominator;
    let ln = |v: f64| (v > 0.0).then(|| v.ln());
    Ok(ClosedFormMu0 {
        denominator,
        arg1,
        arg2,
        z1: ln(arg1),
        z2: ln(arg2),
        valid: arg1 > 0.0 && arg2 > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PeriodicCoefficient;
    use proptest::prelude::*;

    fn decoupled() -> ModelParams {
        ModelParams {
            r1: PeriodicCoefficient::sinusoid(0.9, 0.2, 1.0),
            r2: PeriodicCoefficient::sinusoid(0.5, 0.1, 1.0),
            beta1: PeriodicCoefficient::sinusoid(0.05, 0.01, 1.0),
            beta2: PeriodicCoefficient::constant(0.0),
            k1: 3.0,
            k2: 4.0,
            w1: 0.0,
            w2: 0.0,
        }
    }

    #[test]
    fn decoupled_case_matches_hand_solution() {
        let p = decoupled();
        let z = solve_averaged(&p, 1.0, LogState::new(0.0, 0.0), 1e-13, 50).unwrap();
        let u = 3.0 * (1.0 - 0.05 * 4.0 / 0.9);
        assert!((z.z2.exp() - 4.0).abs() < 1e-11);
        assert!((z.z1.exp() - u).abs() < 1e-11);
    }

    #[test]
    fn example1_means_have_no_positive_root() {
        let p = ModelParams::example1();
        let err = solve_averaged(&p, 1.0, LogState::new(0.0, -5.0), 1e-12, 100).unwrap_err();
        match err {
            Error::NoPositiveSolution { residual, .. } | Error::NonConvergence { residual, .. } => {
                // grid minimum of ||res||_inf on [-25, 3]^2 is 0.0187
                assert!(residual > 0.018, "{residual}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn mu_zero_has_no_solution() {
        let p = ModelParams::coexistence();
        let err = solve_averaged(&p, 0.0, LogState::new(0.0, 0.0), 1e-12, 100).unwrap_err();
        assert!(matches!(err, Error::NoPositiveSolution { .. }), "{err:?}");
    }

    #[test]
    fn closed_form_example1() {
        let c = closed_form_mu0(&ModelParams::example1()).unwrap();
        assert!((c.denominator - 1.122e-4).abs() < 1e-18);
        assert!((c.arg1 - -0.2139037433155078).abs() < 1e-12);
        assert!((c.arg2 - 77.00534759358288).abs() < 1e-9);
        assert!(c.z1.is_none());
        assert!((c.z2.unwrap() - 4.343874868709506).abs() < 1e-12);
        assert!(!c.valid);
    }

    #[test]
    fn closed_form_singular() {
        let one = PeriodicCoefficient::constant(1.0);
        let p = ModelParams {
            r1: one.clone(),
            r2: one.clone(),
            beta1: one.clone(),
            beta2: one,
            k1: 1.0,
            k2: 1.0,
            w1: 0.0,
            w2: 0.0,
        };
        assert!(matches!(closed_form_mu0(&p), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn closed_form_valid_with_negative_mean() {
        // a negative mean r2 puts both arguments on the positive side
        let mut p = ModelParams::coexistence();
        p.r2 = PeriodicCoefficient::constant(-0.6);
        let c = closed_form_mu0(&p).unwrap();
        assert!(c.valid);
        let m = p.means();
        let (u, v) = (c.z1.unwrap().exp(), c.z2.unwrap().exp());
        assert!((m.r1 - m.r1 * u / p.k1 - m.beta1 * v).abs() < 1e-10);
        assert!((m.r2 * v / p.k2 + m.beta2 * u).abs() < 1e-10);
    }

    fn random_params() -> impl Strategy<Value = ModelParams> {
        (0.05..2.0f64, 0.05..2.0f64, 0.01..1.0f64, 0.01..1.0f64, 0.2..8.0f64, 0.2..8.0f64, 0.0..5.0f64, 0.0..1.0f64)
            .prop_map(|(r1, r2, b1, b2, k1, k2, w1, w2)| ModelParams {
                r1: PeriodicCoefficient::sinusoid(r1, 0.5 * r1, 1.0),
                r2: PeriodicCoefficient::sinusoid(r2, 0.5 * r2, 1.0),
                beta1: PeriodicCoefficient::sinusoid(b1, 0.5 * b1, 1.0),
                beta2: PeriodicCoefficient::constant(b2),
                k1,
                k2,
                w1,
                w2,
            })
    }

    proptest! {
        #[test]
        fn roots_zero_the_residual(p in random_params(), mu in 0.0..=1.0f64) {
            if let Ok(z) = solve_averaged(&p, mu, LogState::new(0.0, 0.0), 1e-12, 200) {
                let r = p.averaged_residual(z, mu).unwrap();
                prop_assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
            }
        }

        #[test]
        fn closed_form_solves_the_linear_reduction(p in random_params()) {
            let c = closed_form_mu0(&p).unwrap();
            let m = p.means();
            let (u, v) = (c.arg1, c.arg2);
            let scale = 1.0 + m.r1.abs() + m.r2.abs();
            prop_assert!((m.r1 - m.r1 * u / p.k1 - m.beta1 * v).abs() < 1e-10 * scale * (1.0 + v.abs()));
            prop_assert!((m.r2 * v / p.k2 + m.beta2 * u).abs() < 1e-10 * scale * (1.0 + u.abs()));
            // with positive means the two arguments have opposite signs
            prop_assert!(!c.valid);
        }
    }
}
