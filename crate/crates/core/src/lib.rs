//! Simulation and periodic-orbit analysis for a non-autonomous allelopathic
//! phytoplankton competition model with a fear effect:
//!
//! ```text
//! x1' = r1(t) x1 (1 - x1/k1) - beta1(t) x1 x2
//! x2' = r2(t) x2 (1/(1 + w1 x1) - x2/k2) - beta2(t) x1 x2 - w2 x1 x2^2
//! ```
//!
//! The crate checks the sufficient conditions A1-A3 for a positive periodic
//! solution, computes the a priori log-space bounds, searches for the periodic
//! solution by shooting on the time-T map and classifies it with Floquet
//! multipliers.

pub mod averaged;
pub mod cli;
pub mod coefficients;
pub mod conditions;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod orbit;

pub use coefficients::PeriodicCoefficient;
pub use conditions::{compute_bounds, BoundOptions, BoundReport, M0Denominator};
pub use error::{Error, Result};
pub use integrator::{IntegratorConfig, Trajectory};
pub use model::{LogState, ModelParams, State};
pub use orbit::PeriodicOrbit;
