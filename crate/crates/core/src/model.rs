//! Vector fields of the competition model: original densities, log densities,
//! the lambda-homotopy family and the averaged algebraic system.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::coefficients::PeriodicCoefficient;
use crate::error::{Error, Result};
use crate::integrator::{Frame, VectorField};
use crate::linalg::Mat2;

/// Period used when every coefficient is constant.
pub const CONSTANT_PERIOD: f64 = TAU;

/// Parameters of the non-autonomous competition model.
///
/// `x1` is the toxic species, `x2` the non-toxic one. `w1` scales the fear
/// factor `1 / (1 + w1 x1)`, `w2` the allelopathic term `w2 x1 x2^2`. The
/// common period is derived from the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub r1: PeriodicCoefficient,
    pub r2: PeriodicCoefficient,
    pub beta1: PeriodicCoefficient,
    pub beta2: PeriodicCoefficient,
    pub k1: f64,
    pub k2: f64,
    pub w1: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogState {
    pub z1: f64,
    pub z2: f64,
}

impl State {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn to_log(self) -> LogState {
        LogState::new(self.x1.ln(), self.x2.ln())
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

impl LogState {
    pub fn new(z1: f64, z2: f64) -> Self {
        Self { z1, z2 }
    }

    pub fn to_original(self) -> State {
        State::new(self.z1.exp(), self.z2.exp())
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.z1, self.z2]
    }
}

impl From<[f64; 2]> for LogState {
    fn from([z1, z2]: [f64; 2]) -> Self {
        Self { z1, z2 }
    }
}

impl From<[f64; 2]> for State {
    fn from([x1, x2]: [f64; 2]) -> Self {
        Self { x1, x2 }
    }
}

/// Period averages of the four coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Means {
    pub r1: f64,
    pub r2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl ModelParams {
    /// The illustrative parameter set with `sin t` forcing.
    pub fn example1() -> Self {
        Self {
            r1: PeriodicCoefficient::sinusoid(0.03, 0.5, 1.0),
            r2: PeriodicCoefficient::sinusoid(0.0001, 0.9, 1.0),
            beta1: PeriodicCoefficient::sinusoid(0.0004, 0.5, 1.0),
            beta2: PeriodicCoefficient::sinusoid(0.006, 0.2, 1.0),
            k1: 8.0,
            k2: 6.0,
            w1: 20.0,
            w2: 2.0,
        }
    }

    /// `example1` with the forcing removed.
    pub fn remark_constant() -> Self {
        Self::example1().averaged()
    }

    /// A positively forced parameter set with a stable coexistence orbit.
    pub fn coexistence() -> Self {
        Self {
            r1: PeriodicCoefficient::sinusoid(0.8, 0.3, 1.0),
            r2: PeriodicCoefficient::sinusoid(0.6, 0.2, 1.0),
            beta1: PeriodicCoefficient::sinusoid(0.1, 0.05, 1.0),
            beta2: PeriodicCoefficient::sinusoid(0.02, 0.01, 1.0),
            k1: 2.0,
            k2: 2.0,
            w1: 0.5,
            w2: 0.1,
        }
    }

    /// Same parameters with every coefficient replaced by its mean.
    pub fn averaged(&self) -> Self {
        Self {
            r1: self.r1.averaged(),
            r2: self.r2.averaged(),
            beta1: self.beta1.averaged(),
            beta2: self.beta2.averaged(),
            ..self.clone()
        }
    }

    pub fn coefficients(&self) -> [(&'static str, &PeriodicCoefficient); 4] {
        [
            ("r1", &self.r1),
            ("r2", &self.r2),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
        ]
    }

    pub fn means(&self) -> Means {
        Means {
            r1: self.r1.mean(),
            r2: self.r2.mean(),
            beta1: self.beta1.mean(),
            beta2: self.beta2.mean(),
        }
    }

    /// Common period: the longest coefficient period, or [`CONSTANT_PERIOD`].
    pub fn period(&self) -> f64 {
        self.coefficients()
            .iter()
            .filter_map(|(_, c)| c.period())
            .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))))
            .unwrap_or(CONSTANT_PERIOD)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in self.coefficients() {
            c.validate(name)?;
        }
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be > 0, got {v}"),
                })
            }
        };
        let nonneg = |name, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be >= 0, got {v}"),
                })
            }
        };
        positive("k1", self.k1)?;
        positive("k2", self.k2)?;
        nonneg("w1", self.w1)?;
        nonneg("w2", self.w2)?;

        let period = self.period();
        for (name, c) in self.coefficients() {
            if let Some(p) = c.period() {
                let ratio = period / p;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                    return Err(Error::InvalidParameter {
                        name,
                        reason: format!("period {p} does not divide the common period {period}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Right-hand side in densities.
    pub fn rhs_original(&self, t: f64, x: State) -> [f64; 2] {
        let State { x1, x2 } = x;
        let (r1, r2, b1, b2) = self.coefficients_at(t);
        [
            r1 * x1 * (1.0 - x1 / self.k1) - b1 * x1 * x2,
            r2 * x2 * (1.0 / (1.0 + self.w1 * x1) - x2 / self.k2)
                - b2 * x1 * x2
                - self.w2 * x1 * x2 * x2,
        ]
    }

    pub fn jacobian_original(&self, t: f64, x: State) -> Mat2 {
        let State { x1, x2 } = x;
        let (r1, r2, b1, b2) = self.coefficients_at(t);
        let fear = 1.0 + self.w1 * x1;
        [
            [r1 * (1.0 - 2.0 * x1 / self.k1) - b1 * x2, -b1 * x1],
            [
                -r2 * x2 * self.w1 / (fear * fear) - b2 * x2 - self.w2 * x2 * x2,
                r2 / fear - 2.0 * r2 * x2 / self.k2 - b2 * x1 - 2.0 * self.w2 * x1 * x2,
            ],
        ]
    }

    /// Right-hand side in log densities `z = ln x`.
    pub fn rhs_log(&self, t: f64, z: LogState) -> Result<[f64; 2]> {
        let (e1, e2) = exp_checked(t, z)?;
        let (r1, r2, b1, b2) = self.coefficients_at(t);
        Ok([
            r1 * (1.0 - e1 / self.k1) - b1 * e2,
            r2 * (1.0 / (1.0 + self.w1 * e1) - e2 / self.k2) - b2 * e1 - self.w2 * e1 * e2,
        ])
    }

    /// Analytic Jacobian of [`Self::rhs_log`] with respect to `z`.
    pub fn jacobian_log(&self, t: f64, z: LogState) -> Result<Mat2> {
        let (e1, e2) = exp_checked(t, z)?;
        let (r1, r2, b1, b2) = self.coefficients_at(t);
        let fear = 1.0 + self.w1 * e1;
        Ok([
            [-r1 * e1 / self.k1, -b1 * e2],
            [
                -r2 * self.w1 * e1 / (fear * fear) - b2 * e1 - self.w2 * e1 * e2,
                -r2 * e2 / self.k2 - self.w2 * e1 * e2,
            ],
        ])
    }

    /// `lambda * rhs_log`, for `0 < lambda <= 1`.
    pub fn rhs_homotopy(&self, lambda: f64, t: f64, z: LogState) -> Result<[f64; 2]> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::LambdaOutOfRange(lambda));
        }
        let [a, b] = self.rhs_log(t, z)?;
        Ok([lambda * a, lambda * b])
    }

    /// Averaged system with the fear term weighted by `mu`; `mu = 1` is the
    /// full averaged system.
    pub fn averaged_residual(&self, z: LogState, mu: f64) -> Result<[f64; 2]> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::MuOutOfRange(mu));
        }
        let m = self.means();
        let (e1, e2) = (z.z1.exp(), z.z2.exp());
        Ok([
            m.r1 - m.r1 * e1 / self.k1 - m.beta1 * e2,
            -m.r2 * e2 / self.k2 - m.beta2 * e1 - self.w2 * e1 * e2
                + mu * (m.r2 / (1.0 + self.w1 * e1)),
        ])
    }

    pub fn averaged_jacobian(&self, z: LogState, mu: f64) -> Mat2 {
        let m = self.means();
        let (e1, e2) = (z.z1.exp(), z.z2.exp());
        let fear = 1.0 + self.w1 * e1;
        [
            [-m.r1 * e1 / self.k1, -m.beta1 * e2],
            [
                -m.beta2 * e1 - self.w2 * e1 * e2 - mu * m.r2 * self.w1 * e1 / (fear * fear),
                -m.r2 * e2 / self.k2 - self.w2 * e1 * e2,
            ],
        ]
    }

    fn coefficients_at(&self, t: f64) -> (f64, f64, f64, f64) {
        (
            self.r1.eval(t),
            self.r2.eval(t),
            self.beta1.eval(t),
            self.beta2.eval(t),
        )
    }
}

fn exp_checked(t: f64, z: LogState) -> Result<(f64, f64)> {
    let (e1, e2) = (z.z1.exp(), z.z2.exp());
    if e1.is_finite() && e2.is_finite() {
        Ok((e1, e2))
    } else {
        Err(Error::DomainOverflow {
            t,
            z1: z.z1,
            z2: z.z2,
        })
    }
}

/// The model in log coordinates.
#[derive(Debug, Clone, Copy)]
pub struct LogField<'a>(pub &'a ModelParams);

/// The model in density coordinates.
#[derive(Debug, Clone, Copy)]
pub struct OriginalField<'a>(pub &'a ModelParams);

impl VectorField for LogField<'_> {
    fn rhs(&self, t: f64, y: [f64; 2]) -> Result<[f64; 2]> {
        self.0.rhs_log(t, y.into())
    }

    fn jacobian(&self, t: f64, y: [f64; 2]) -> Result<Mat2> {
        self.0.jacobian_log(t, y.into())
    }
}

impl VectorField for OriginalField<'_> {
    fn rhs(&self, t: f64, y: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.0.rhs_original(t, y.into()))
    }

    fn jacobian(&self, t: f64, y: [f64; 2]) -> Result<Mat2> {
        Ok(self.0.jacobian_original(t, y.into()))
    }

    fn frame(&self) -> Frame {
        Frame::Original
    }
}
