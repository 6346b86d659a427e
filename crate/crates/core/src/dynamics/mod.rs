//! 9-DOF car body model.
//!
//! State: ground-frame position and yaw, roll and pitch on a linear
//! suspension, body-frame planar velocities and rates, and the spin rate of
//! each wheel. Wheels are indexed front-left, front-right, rear-left,
//! rear-right; `x` points forward, `y` left, `z` up. Positive roll lifts the
//! left side and positive pitch lowers the nose.

mod body;
mod params;
mod sim;
mod tire;

pub use body::{
    derivatives, normal_forces, slip_angles, slip_ratio, wheel_forces, wheel_speeds, BodyState, Control, DynamicsError,
    WheelForces, BRAKE_FADE_SPEED, SLIP_ANGLE_MIN_DENOM, STANDSTILL_SPEED, WHEEL_NAMES,
};
pub use params::{ParamError, TireParams, VehicleParams};
pub use sim::{rk4_step, simulate, step_count, SimulationError};
pub use tire::tire_forces;
