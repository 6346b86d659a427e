use alloc::vec::Vec;

use thiserror::Error;

use super::body::{derivatives, BodyState, Control, DynamicsError};
use super::params::VehicleParams;
use crate::math::floor;
use crate::ode::rk4_step as rk4;

/// One RK4 step of the body model with `u` held over the step.
pub fn rk4_step(state: &BodyState, u: &Control, dt: f64, p: &VehicleParams) -> Result<BodyState, DynamicsError> {
    rk4(state, dt, |s| derivatives(s, u, p))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid horizon: T = {horizon} s, dt = {dt} s")]
    Horizon { horizon: f64, dt: f64 },
    #[error("step {step}: {source}")]
    Step { step: usize, source: DynamicsError },
}

/// Number of whole steps of length `dt` in `horizon`, tolerant to the
/// rounding of decimal step sizes (0.1 / 0.001 counts as 100).
pub fn step_count(horizon: f64, dt: f64) -> usize {
    floor(horizon / dt + 1e-9) as usize
}

/// Constant-control rollout; returns `⌊T/dt⌋ + 1` states including `state0`.
pub fn simulate(
    state0: &BodyState,
    u: &Control,
    horizon: f64,
    dt: f64,
    p: &VehicleParams,
) -> Result<Vec<BodyState>, SimulationError> {
    if !(dt > 0.0 && horizon >= dt && horizon.is_finite()) {
        return Err(SimulationError::Horizon { horizon, dt });
    }
    let steps = step_count(horizon, dt);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*state0);
    let mut s = *state0;
    for step in 1..=steps {
        s = rk4_step(&s, u, dt, p).map_err(|source| SimulationError::Step { step, source })?;
        out.push(s);
    }
    Ok(out)
}
