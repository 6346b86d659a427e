//! Vehicle-dynamics feasibility toolkit.
//!
//! The crate is split along the processing pipeline:
//!
//! * [`dynamics`] — a 9-DOF car body model (planar motion, roll and pitch on a
//!   linear suspension, four spinning wheels, combined-slip Magic Formula
//!   tires) and a fixed-step RK4 integrator.
//! * [`sampler`] — Monte-Carlo sampling of the accelerations reachable over a
//!   short constant-control horizon, plus sample-density diagnostics.
//! * [`envelope`] — convex envelope fitting of sampled acceleration clouds:
//!   truncated ellipse, speed-dependent longitudinal bounds and a six-row
//!   halfspace system.
//! * [`integrator_model`] — the constrained double integrator that uses the
//!   envelope as its admissible control set.
//! * [`planner`] — receding-horizon planning over the double integrator and a
//!   kinematic bicycle baseline, closed-loop runs and lap metrics.
//!
//! The crate is `no_std` and only needs `alloc`. All transcendental functions
//! go through `libm`, so results are bitwise reproducible across targets.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod envelope;
pub mod integrator_model;
pub mod linalg;
pub(crate) mod math;
pub mod ode;
pub mod planner;
pub mod sampler;

pub use dynamics::{BodyState, Control, TireParams, VehicleParams};
pub use envelope::EnvelopeModel;
pub use integrator_model::{PlanControl, PlanState};
pub use sampler::{AccelSample, SamplingConfig};

/// Standard gravity (m/s²).
pub const GRAVITY: f64 = 9.81;
