//! Explicit time integration: fixed-step RK4 and adaptive Dormand-Prince 5(4)
//! with its continuous extension, plus the time-T flow map and the monodromy
//! matrix from the variational equations.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{LogField, LogState, ModelParams};

/// Coordinates a trajectory is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Original,
    Log,
}

impl Frame {
    pub fn csv_header(self) -> &'static str {
        match self {
            Frame::Original => "t,x1,x2",
            Frame::Log => "t,z1,z2",
        }
    }
}

/// A planar, possibly time-dependent vector field with its Jacobian.
pub trait VectorField {
    fn rhs(&self, t: f64, y: [f64; 2]) -> Result<[f64; 2]>;

    fn jacobian(&self, t: f64, y: [f64; 2]) -> Result<Mat2>;

    fn frame(&self) -> Frame {
        Frame::Log
    }
}

/// Vector field built from a pair of closures.
pub struct FnField<F, J> {
    pub rhs: F,
    pub jacobian: J,
}

impl<F, J> VectorField for FnField<F, J>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
    J: Fn(f64, [f64; 2]) -> Mat2,
{
    fn rhs(&self, t: f64, y: [f64; 2]) -> Result<[f64; 2]> {
        Ok((self.rhs)(t, y))
    }

    fn jacobian(&self, t: f64, y: [f64; 2]) -> Result<Mat2> {
        Ok((self.jacobian)(t, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum Method {
    #[serde(rename = "rk4-fixed")]
    Rk4Fixed { step: f64 },
    #[serde(rename = "rk45-adaptive")]
    Rk45Adaptive {
        abs_tol: f64,
        rel_tol: f64,
        initial_step: f64,
        max_step: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    #[serde(flatten)]
    pub method: Method,
    /// Interpolate requested output times instead of clipping steps to them.
    #[serde(default)]
    pub dense_output: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::adaptive(1e-10)
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4Fixed { step },
            dense_output: false,
        }
    }

    /// Dormand-Prince with `abs_tol = rel_tol = tol`.
    pub fn adaptive(tol: f64) -> Self {
        Self {
            method: Method::Rk45Adaptive {
                abs_tol: tol,
                rel_tol: tol,
                initial_step: 1e-3,
                max_step: 0.5,
            },
            dense_output: false,
        }
    }

    pub fn with_dense_output(mut self, on: bool) -> Self {
        self.dense_output = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be > 0, got {v}"),
                })
            }
        };
        match self.method {
            Method::Rk4Fixed { step } => check("step", step),
            Method::Rk45Adaptive {
                abs_tol,
                rel_tol,
                initial_step,
                max_step,
            } => {
                check("abs_tol", abs_tol)?;
                check("rel_tol", rel_tol)?;
                check("initial_step", initial_step)?;
                check("max_step", max_step)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frame: Frame,
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, [f64; 2])> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    /// Converts a log-frame trajectory to densities (identity for original frame).
    pub fn to_original(&self) -> Trajectory {
        match self.frame {
            Frame::Original => self.clone(),
            Frame::Log => Trajectory {
                frame: Frame::Original,
                times: self.times.clone(),
                states: self.states.iter().map(|s| [s[0].exp(), s[1].exp()]).collect(),
            },
        }
    }

    /// Header `t,x1,x2` (or `t,z1,z2`), 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.frame.csv_header())?;
        for (t, [a, b]) in self.times.iter().zip(&self.states) {
            writeln!(w, "{t:.16e},{a:.16e},{b:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Integrates `field` from `(t0, y0)` to `t1`, recording every accepted step.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    t0: f64,
    y0: [f64; 2],
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        frame: field.frame(),
        times: vec![t0],
        states: vec![y0],
    };
    drive(
        &|t, y: &[f64; 2]| field.rhs(t, *y),
        t0,
        y0,
        t1,
        cfg,
        Output::Steps,
        &mut |t, y| {
            traj.times.push(t);
            traj.states.push(*y);
        },
    )?;
    Ok(traj)
}

/// States at the requested (ascending, `>= t0`) times.
pub fn integrate_at<F: VectorField + ?Sized>(
    field: &F,
    t0: f64,
    y0: [f64; 2],
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        frame: field.frame(),
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
    };
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "output times must be strictly increasing".into(),
        });
    }
    let mut rest = times;
    while let Some((&t, tail)) = rest.split_first() {
        if t > t0 {
            break;
        }
        if t < t0 {
            return Err(Error::InvalidInterval { a: t0, b: t });
        }
        traj.times.push(t);
        traj.states.push(y0);
        rest = tail;
    }
    if let Some(&t1) = rest.last() {
        drive(
            &|t, y: &[f64; 2]| field.rhs(t, *y),
            t0,
            y0,
            t1,
            cfg,
            Output::At(rest),
            &mut |t, y| {
                traj.times.push(t);
                traj.states.push(*y);
            },
        )?;
    }
    Ok(traj)
}

/// `n + 1` equally spaced sample times covering `[t0, t1]`.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 })
        .collect()
}

/// Final state only.
pub fn flow<F: VectorField + ?Sized>(
    field: &F,
    t0: f64,
    y0: [f64; 2],
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<[f64; 2]> {
    drive(
        &|t, y: &[f64; 2]| field.rhs(t, *y),
        t0,
        y0,
        t1,
        cfg,
        Output::None,
        &mut |_, _| {},
    )
}

/// Final state and the fundamental matrix of the variational equations
/// `Y' = J(t, y(t)) Y`, `Y(t0) = I`.
pub fn variational_flow<F: VectorField + ?Sized>(
    field: &F,
    t0: f64,
    y0: [f64; 2],
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<([f64; 2], Mat2)> {
    let rhs = |t: f64, s: &[f64; 6]| -> Result<[f64; 6]> {
        let y = [s[0], s[1]];
        let f = field.rhs(t, y)?;
        let j = field.jacobian(t, y)?;
        let m = [[s[2], s[3]], [s[4], s[5]]];
        let jm = crate::linalg::mul(&j, &m);
        Ok([f[0], f[1], jm[0][0], jm[0][1], jm[1][0], jm[1][1]])
    };
    let s0 = [y0[0], y0[1], 1.0, 0.0, 0.0, 1.0];
    let s = drive(&rhs, t0, s0, t1, cfg, Output::None, &mut |_, _| {})?;
    Ok(([s[0], s[1]], [[s[2], s[3]], [s[4], s[5]]]))
}

/// The time-T map of the log-coordinate model started at `t = 0`.
pub fn flow_map(params: &ModelParams, z0: LogState, cfg: &IntegratorConfig) -> Result<LogState> {
    flow(&LogField(params), 0.0, z0.as_array(), params.period(), cfg).map(LogState::from)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy {
    /// `flow_map(z0)`.
    pub endpoint: LogState,
    pub matrix: Mat2,
}

/// Monodromy matrix of the log-coordinate model over one period from `z0`.
pub fn monodromy(params: &ModelParams, z0: LogState, cfg: &IntegratorConfig) -> Result<Monodromy> {
    let (end, matrix) = variational_flow(&LogField(params), 0.0, z0.as_array(), params.period(), cfg)?;
    Ok(Monodromy {
        endpoint: end.into(),
        matrix,
    })
}

enum Output<'a> {
    None,
    Steps,
    At(&'a [f64]),
}

type Rhs<'a, const N: usize> = dyn Fn(f64, &[f64; N]) -> Result<[f64; N]> + 'a;

fn drive<const N: usize>(
    f: &Rhs<'_, N>,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    cfg: &IntegratorConfig,
    output: Output<'_>,
    emit: &mut dyn FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    cfg.validate()?;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidInterval { a: t0, b: t1 });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t0 });
    }
    match cfg.method {
        Method::Rk4Fixed { step } => rk4(f, t0, y0, t1, step, output, emit),
        Method::Rk45Adaptive {
            abs_tol,
            rel_tol,
            initial_step,
            max_step,
        } => {
            let opts = AdaptiveOptions {
                abs_tol,
                rel_tol,
                initial_step,
                max_step,
                dense: cfg.dense_output,
            };
            dopri5(f, t0, y0, t1, &opts, output, emit)
        }
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn rk4_step<const N: usize>(f: &Rhs<'_, N>, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]> {
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k1)]))?;
    let k3 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = f(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
    let next = axpy(y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t + h });
    }
    Ok(next)
}

fn rk4<const N: usize>(
    f: &Rhs<'_, N>,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    step: f64,
    output: Output<'_>,
    emit: &mut dyn FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    let targets: Vec<f64> = match output {
        Output::At(ts) => ts.to_vec(),
        _ => vec![t1],
    };
    let steps = matches!(output, Output::Steps);
    let mut t = t0;
    let mut y = y0;
    for target in targets {
        let a = t;
        let n = (((target - a) / step) - 1e-9).ceil().max(1.0) as usize;
        for i in 0..n {
            let next = if i + 1 == n { target } else { a + (i + 1) as f64 * step };
            y = rk4_step(f, t, &y, next - t)?;
            t = next;
            if steps {
                emit(t, &y);
            }
        }
        if !steps && !matches!(output, Output::None) {
            emit(t, &y);
        }
    }
    Ok(y)
}

struct AdaptiveOptions {
    abs_tol: f64,
    rel_tol: f64,
    initial_step: f64,
    max_step: f64,
    dense: bool,
}

// Dormand-Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Trial<const N: usize> {
    y: [f64; N],
    k7: [f64; N],
    err: f64,
    dense: [[f64; N]; 5],
}

fn dopri5_trial<const N: usize>(
    f: &Rhs<'_, N>,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    opts: &AdaptiveOptions,
) -> Result<Trial<N>> {
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let ynew = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    if ynew.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t + h });
    }
    let k7 = f(t + h, &ynew)?;

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(ynew[i].abs());
        sum += (e / scale).powi(2);
    }
    let err = (sum / N as f64).sqrt();

    let mut dense = [[0.0; N]; 5];
    for i in 0..N {
        let dy = ynew[i] - y[i];
        let bspl = h * k1[i] - dy;
        dense[0][i] = y[i];
        dense[1][i] = dy;
        dense[2][i] = bspl;
        dense[3][i] = dy - h * k7[i] - bspl;
        dense[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    // defect control: the interpolant must nearly satisfy the ODE at mid step
    let err = if opts.dense {
        let y_mid = dense_eval(&dense, 0.5);
        let f_mid = f(t + 0.5 * h, &y_mid)?;
        let mut sum = 0.0;
        for i in 0..N {
            let slope = (dense[1][i] + 0.25 * dense[3][i]) / h;
            let e = h * (slope - f_mid[i]);
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(ynew[i].abs());
            sum += (e / scale).powi(2);
        }
        err.max((sum / N as f64).sqrt())
    } else {
        err
    };
    Ok(Trial {
        y: ynew,
        k7,
        err,
        dense,
    })
}

fn dense_eval<const N: usize>(rc: &[[f64; N]; 5], theta: f64) -> [f64; N] {
    let theta1 = 1.0 - theta;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = rc[0][i]
            + theta * (rc[1][i] + theta1 * (rc[2][i] + theta * (rc[3][i] + theta1 * rc[4][i])));
    }
    out
}

fn dopri5<const N: usize>(
    f: &Rhs<'_, N>,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &AdaptiveOptions,
    output: Output<'_>,
    emit: &mut dyn FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    let span = t1 - t0;
    let h_min = 1e-14 * span;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = opts.initial_step.min(opts.max_step).min(span);
    let mut last_rejected = false;

    let stops: &[f64] = match output {
        Output::At(ts) => ts,
        _ => &[],
    };
    let mut next_stop = 0;

    while t < t1 {
        // clip to the end, or to the next output time when not interpolating
        let mut limit = t1;
        if !opts.dense {
            if let Some(&s) = stops.get(next_stop) {
                limit = limit.min(s);
            }
        }
        let mut clipped = false;
        if t + 1.01 * h >= limit {
            h = limit - t;
            clipped = true;
        }
        if h < h_min {
            return Err(Error::StepUnderflow { t, h });
        }

        // overflow inside a trial step is treated as a rejection
        let trial = match dopri5_trial(f, t, &y, &k1, h, opts) {
            Ok(tr) if tr.err.is_finite() => tr,
            outcome => {
                let err = match outcome {
                    Ok(_) => Error::NonFinite { t: t + h },
                    Err(e @ (Error::DomainOverflow { .. } | Error::NonFinite { .. })) => e,
                    Err(e) => return Err(e),
                };
                h *= 0.25;
                last_rejected = true;
                if h < h_min {
                    return Err(err);
                }
                continue;
            }
        };

        if trial.err <= 1.0 {
            let t_new = if clipped { limit } else { t + h };
            if opts.dense {
                while let Some(&s) = stops.get(next_stop) {
                    if s > t_new {
                        break;
                    }
                    let theta = ((s - t) / (t_new - t)).clamp(0.0, 1.0);
                    let ys = if s == t_new { trial.y } else { dense_eval(&trial.dense, theta) };
                    emit(s, &ys);
                    next_stop += 1;
                }
            }
            t = t_new;
            y = trial.y;
            k1 = trial.k7;
            match output {
                Output::Steps => emit(t, &y),
                Output::At(_) if !opts.dense => {
                    if stops.get(next_stop) == Some(&t) {
                        emit(t, &y);
                        next_stop += 1;
                    }
                }
                _ => {}
            }
            let mut factor = (0.9 * trial.err.powf(-0.2)).clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            last_rejected = false;
            // a clipped step says nothing about the natural step size
            if !clipped || factor < 1.0 {
                h *= factor;
            }
            h = h.min(opts.max_step);
        } else {
            h *= (0.9 * trial.err.powf(-0.2)).clamp(0.2, 1.0);
            last_rejected = true;
        }
    }
    Ok(y)
}
