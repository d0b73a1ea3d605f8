//! Periodic scalar coefficient functions: evaluation, extrema over an interval
//! and period averages.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples per fundamental period for the Fourier extremum scan.
pub const SAMPLES_PER_PERIOD: usize = 4096;

/// A T-periodic coefficient of time.
///
/// Serialized as a tagged object, e.g.
/// `{"kind":"sinusoid","mean":0.03,"amplitude":0.5,"omega":1.0,"phase":0.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PeriodicCoefficient {
    Constant {
        value: f64,
    },
    /// `mean + amplitude * sin(omega * t + phase)`
    Sinusoid {
        mean: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `mean + sum_k (a_k cos(k omega t) + b_k sin(k omega t))`, harmonics stored as `[a_k, b_k]`.
    Fourier {
        mean: f64,
        harmonics: Vec<[f64; 2]>,
        omega: f64,
    },
}

impl PeriodicCoefficient {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn sinusoid(mean: f64, amplitude: f64, omega: f64) -> Self {
        Self::Sinusoid {
            mean,
            amplitude,
            omega,
            phase: 0.0,
        }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        match self {
            Self::Constant { value } => {
                if !value.is_finite() {
                    return bad("value must be finite");
                }
            }
            Self::Sinusoid {
                mean,
                amplitude,
                omega,
                phase,
            } => {
                if !(mean.is_finite() && amplitude.is_finite() && phase.is_finite()) {
                    return bad("fields must be finite");
                }
                if *amplitude < 0.0 {
                    return bad("amplitude must be >= 0");
                }
                if !(omega.is_finite() && *omega > 0.0) {
                    return bad("omega must be > 0");
                }
            }
            Self::Fourier {
                mean,
                harmonics,
                omega,
            } => {
                if !mean.is_finite() || harmonics.iter().flatten().any(|c| !c.is_finite()) {
                    return bad("coefficients must be finite");
                }
                if !(omega.is_finite() && *omega > 0.0) {
                    return bad("omega must be > 0");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Sinusoid {
                mean,
                amplitude,
                omega,
                phase,
            } => mean + amplitude * (omega * t + phase).sin(),
            Self::Fourier {
                mean,
                harmonics,
                omega,
            } => {
                let mut acc = *mean;
                for (k, [a, b]) in harmonics.iter().enumerate() {
                    let arg = (k + 1) as f64 * omega * t;
                    acc += a * arg.cos() + b * arg.sin();
                }
                acc
            }
        }
    }

    /// Fundamental period, or `None` for a constant.
    pub fn period(&self) -> Option<f64> {
        match self {
            Self::Constant { .. } => None,
            Self::Sinusoid { omega, .. } | Self::Fourier { omega, .. } => Some(TAU / omega),
        }
    }

    /// True when the function carries no time dependence.
    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant { .. } => true,
            Self::Sinusoid { amplitude, .. } => *amplitude == 0.0,
            Self::Fourier { harmonics, .. } => harmonics.iter().flatten().all(|c| *c == 0.0),
        }
    }

    /// Exact period average.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Sinusoid { mean, .. } | Self::Fourier { mean, .. } => *mean,
        }
    }

    /// Period average by composite Simpson quadrature over `intervals` sub-intervals
    /// of `[0, period]`. Constants are integrated over `[0, 1]`.
    pub fn quadrature_mean(&self, intervals: usize) -> f64 {
        let n = intervals.max(2) + intervals % 2;
        let period = self.period().unwrap_or(1.0);
        let h = period / n as f64;
        let mut sum = self.eval(0.0) + self.eval(period);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * self.eval(i as f64 * h);
        }
        sum * h / 3.0 / period
    }

    /// Multiplies the whole function (mean and oscillation) by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Constant { value } => Self::Constant { value: c * value },
            Self::Sinusoid {
                mean,
                amplitude,
                omega,
                phase,
            } => {
                // keep amplitude >= 0 by shifting the phase for negative factors
                let (amplitude, phase) = if c >= 0.0 {
                    (c * amplitude, *phase)
                } else {
                    (-c * amplitude, phase + PI)
                };
                Self::Sinusoid {
                    mean: c * mean,
                    amplitude,
                    omega: *omega,
                    phase,
                }
            }
            Self::Fourier {
                mean,
                harmonics,
                omega,
            } => Self::Fourier {
                mean: c * mean,
                harmonics: harmonics.iter().map(|[a, b]| [c * a, c * b]).collect(),
                omega: *omega,
            },
        }
    }

    /// Removes the oscillating part, keeping the period average.
    pub fn averaged(&self) -> Self {
        Self::Constant { value: self.mean() }
    }

    /// `(min, max)` of the function over `[a, b]`.
    pub fn extrema(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(match self {
            Self::Constant { value } => (*value, *value),
            Self::Sinusoid {
                mean,
                amplitude,
                omega,
                phase,
            } => {
                let ends = (self.eval(a), self.eval(b));
                let mut lo = ends.0.min(ends.1);
                let mut hi = ends.0.max(ends.1);
                // sin attains +1 at pi/2 + 2 pi n and -1 at 3 pi/2 + 2 pi n
                if phase_hit(omega * a + phase, omega * b + phase, FRAC_PI_2) {
                    hi = mean + amplitude;
                }
                if phase_hit(omega * a + phase, omega * b + phase, 3.0 * FRAC_PI_2) {
                    lo = mean - amplitude;
                }
                (lo, hi)
            }
            Self::Fourier { omega, .. } => self.sampled_extrema(a, b, TAU / omega),
        })
    }

    fn sampled_extrema(&self, a: f64, b: f64, period: f64) -> (f64, f64) {
        let n = ((SAMPLES_PER_PERIOD as f64 * (b - a) / period).ceil() as usize).max(SAMPLES_PER_PERIOD);
        let h = (b - a) / n as f64;
        let ts: Vec<f64> = (0..=n).map(|i| if i == n { b } else { a + i as f64 * h }).collect();
        let fs: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect();

        let mut lo = fs[0].min(fs[n]);
        let mut hi = fs[0].max(fs[n]);
        for i in 1..n {
            let (l, c, r) = (fs[i - 1], fs[i], fs[i + 1]);
            if c <= l && c <= r {
                let t = golden_section(|t| self.eval(t), ts[i - 1], ts[i + 1]);
                lo = lo.min(self.eval(t)).min(c);
            }
            if c >= l && c >= r {
                let t = golden_section(|t| -self.eval(t), ts[i - 1], ts[i + 1]);
                hi = hi.max(self.eval(t)).max(c);
            }
        }
        (lo, hi)
    }
}

/// Whether `target + 2 pi n` lies in `[lo, hi]` for some integer n.
fn phase_hit(lo: f64, hi: f64, target: f64) -> bool {
    let n = ((lo - target) / TAU).ceil();
    target + n * TAU <= hi
}

/// Minimizer of a unimodal `f` on `[a, b]`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let width = (b - a).abs();
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * width.max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
