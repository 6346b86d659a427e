//! Car body, suspension and wheel equations.

use thiserror::Error;

use super::params::VehicleParams;
use super::tire::tire_forces;
use crate::math::{abs, atan, cos, sin};
use crate::ode::OdeState;
use crate::GRAVITY;

/// Wheel order used everywhere: front-left, front-right, rear-left, rear-right.
pub const WHEEL_NAMES: [&str; 4] = ["front-left", "front-right", "rear-left", "rear-right"];

/// +1 for left wheels, −1 for right wheels (lateral position `y_i = side·l_w`).
const SIDE: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Below this speed (m/s) both the wheel rim and the ground are considered at rest.
pub const STANDSTILL_SPEED: f64 = 1e-3;

/// Floor applied to the longitudinal wheel-center speed in the slip-angle
/// quotient; saturates the arctangent argument near standstill (m/s).
pub const SLIP_ANGLE_MIN_DENOM: f64 = 1e-3;

/// Wheel speed (rad/s) under which a braking torque fades out linearly, so a
/// locked wheel holds at rest instead of being driven backwards.
pub const BRAKE_FADE_SPEED: f64 = 1.0;

/// Full simulation state of the car body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    /// Ground-frame CoM position (m).
    pub x: f64,
    pub y: f64,
    /// Yaw, roll and pitch (rad).
    pub psi: f64,
    pub theta: f64,
    pub phi: f64,
    /// Body-frame velocities (m/s).
    pub v_x: f64,
    pub v_y: f64,
    /// Body rates (rad/s).
    pub psi_dot: f64,
    pub theta_dot: f64,
    pub phi_dot: f64,
    /// Wheel spin rates (rad/s), front-left, front-right, rear-left, rear-right.
    pub omega: [f64; 4],
}

impl BodyState {
    pub const DIM: usize = 14;

    /// Straight-line motion at `v_x`/`v_y` with every wheel rolling without slip.
    pub fn rolling(v_x: f64, v_y: f64, params: &VehicleParams) -> Self {
        Self { v_x, v_y, omega: [v_x / params.r_w; 4], ..Self::default() }
    }

    pub fn to_array(&self) -> [f64; Self::DIM] {
        let w = self.omega;
        [
            self.x,
            self.y,
            self.psi,
            self.theta,
            self.phi,
            self.v_x,
            self.v_y,
            self.psi_dot,
            self.theta_dot,
            self.phi_dot,
            w[0],
            w[1],
            w[2],
            w[3],
        ]
    }

    pub fn from_array(a: &[f64; Self::DIM]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            psi: a[2],
            theta: a[3],
            phi: a[4],
            v_x: a[5],
            v_y: a[6],
            psi_dot: a[7],
            theta_dot: a[8],
            phi_dot: a[9],
            omega: [a[10], a[11], a[12], a[13]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Left-right reflection: negates the lateral and yaw/roll quantities and
    /// swaps the left and right wheels.
    pub fn mirrored(&self) -> Self {
        let w = self.omega;
        Self {
            y: -self.y,
            psi: -self.psi,
            theta: -self.theta,
            v_y: -self.v_y,
            psi_dot: -self.psi_dot,
            theta_dot: -self.theta_dot,
            omega: [w[1], w[0], w[3], w[2]],
            ..*self
        }
    }
}

impl OdeState for BodyState {
    fn add_scaled(&self, d: &Self, h: f64) -> Self {
        Self::from_array(&self.to_array().add_scaled(&d.to_array(), h))
    }
}

/// Control applied over a rollout: per-wheel front torque, per-wheel rear
/// torque (braking only) and front steering angle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Control {
    pub t_f: f64,
    pub t_r: f64,
    pub delta: f64,
}

impl Control {
    pub const fn new(t_f: f64, t_r: f64, delta: f64) -> Self {
        Self { t_f, t_r, delta }
    }

    /// Whether the control lies in the admissible box
    /// `[T_min, T_max] × [T_min, 0] × [−δ_max, δ_max]`.
    pub fn is_admissible(&self, p: &VehicleParams) -> bool {
        (p.torque_min..=p.torque_max).contains(&self.t_f)
            && (p.torque_min..=0.0).contains(&self.t_r)
            && (-p.delta_max..=p.delta_max).contains(&self.delta)
    }

    pub fn mirrored(&self) -> Self {
        Self { delta: -self.delta, ..*self }
    }

    fn wheel_torques(&self) -> [f64; 4] {
        [self.t_f, self.t_f, self.t_r, self.t_r]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("non-finite {quantity} on the {wheel} wheel")]
    WheelNonFinite { wheel: &'static str, quantity: &'static str },
    #[error("non-finite {0} derivative")]
    BodyNonFinite(&'static str),
}

/// Longitudinal slip ratio of a wheel spinning at `omega` whose center moves
/// at `v_xw` along the wheel heading.
///
/// Uses the rim speed as denominator while driving and the ground speed while
/// braking; the result is clamped to `[−1, 1]` and is 0 at standstill.
pub fn slip_ratio(omega: f64, v_xw: f64, r_w: f64) -> f64 {
    let rim = r_w * omega;
    if abs(rim) < STANDSTILL_SPEED && abs(v_xw) < STANDSTILL_SPEED {
        return 0.0;
    }
    let denom = if rim >= v_xw { rim } else { v_xw };
    let denom = if abs(denom) < STANDSTILL_SPEED { STANDSTILL_SPEED.copysign(denom) } else { denom };
    ((rim - v_xw) / denom).clamp(-1.0, 1.0)
}

/// Per-wheel steering angle.
fn wheel_steer(delta: f64) -> [f64; 4] {
    [delta, delta, 0.0, 0.0]
}

/// Longitudinal position of each wheel relative to the CoM.
fn wheel_x(p: &VehicleParams) -> [f64; 4] {
    [p.l_f, p.l_f, -p.l_r, -p.l_r]
}

/// Slip angles of the four tires (rad).
pub fn slip_angles(state: &BodyState, delta: f64, p: &VehicleParams) -> [f64; 4] {
    let xs = wheel_x(p);
    let steer = wheel_steer(delta);
    core::array::from_fn(|i| {
        let num = state.v_y + state.psi_dot * xs[i];
        let den = (state.v_x - SIDE[i] * p.l_w * state.psi_dot).max(SLIP_ANGLE_MIN_DENOM);
        steer[i] - atan(num / den)
    })
}

/// Velocity of each wheel center projected on its heading (m/s).
pub fn wheel_speeds(state: &BodyState, delta: f64, p: &VehicleParams) -> [f64; 4] {
    let xs = wheel_x(p);
    let steer = wheel_steer(delta);
    core::array::from_fn(|i| {
        let vx = state.v_x - SIDE[i] * p.l_w * state.psi_dot;
        let vy = state.v_y + state.psi_dot * xs[i];
        if steer[i] == 0.0 {
            vx
        } else {
            vx * cos(steer[i]) + vy * sin(steer[i])
        }
    })
}

/// Vertical ground force on each wheel (N).
///
/// Static lever-rule load plus a linear spring-damper on the small-angle
/// suspension travel `ζ_i = side_i·l_w·θ ∓ (L/2)·φ` (− front, + rear; positive
/// ζ extends the spring). Pitch is taken about the midpoint of the wheelbase
/// because the body has no heave freedom, which keeps `ΣF_z = M_T·g`. Each
/// force is clamped at zero on wheel lift-off.
pub fn normal_forces(theta: f64, phi: f64, theta_dot: f64, phi_dot: f64, p: &VehicleParams) -> [f64; 4] {
    let l = p.wheelbase();
    let weight = p.mass * GRAVITY;
    let fz_front = weight * p.l_r / (2.0 * l);
    let fz_rear = weight * p.l_f / (2.0 * l);
    let pitch_arm = [-0.5 * l, -0.5 * l, 0.5 * l, 0.5 * l];
    let static_load = [fz_front, fz_front, fz_rear, fz_rear];
    core::array::from_fn(|i| {
        let zeta = SIDE[i] * p.l_w * theta + pitch_arm[i] * phi;
        let zeta_dot = SIDE[i] * p.l_w * theta_dot + pitch_arm[i] * phi_dot;
        (static_load[i] - p.k_s * zeta - p.d_s * zeta_dot).max(0.0)
    })
}

/// Per-wheel force breakdown at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelForces {
    pub slip_ratio: [f64; 4],
    pub slip_angle: [f64; 4],
    pub f_z: [f64; 4],
    /// Wheel-frame forces.
    pub f_xw: [f64; 4],
    pub f_yw: [f64; 4],
    /// Body-frame forces.
    pub f_x: [f64; 4],
    pub f_y: [f64; 4],
}

pub fn wheel_forces(state: &BodyState, delta: f64, p: &VehicleParams) -> WheelForces {
    let v_xw = wheel_speeds(state, delta, p);
    let alpha = slip_angles(state, delta, p);
    let f_z = normal_forces(state.theta, state.phi, state.theta_dot, state.phi_dot, p);
    let steer = wheel_steer(delta);
    let mut out = WheelForces { slip_angle: alpha, f_z, ..WheelForces::default() };
    for i in 0..4 {
        let tau = slip_ratio(state.omega[i], v_xw[i], p.r_w);
        let (fxw, fyw) = tire_forces(tau, alpha[i], f_z[i], p.mu, &p.tire);
        out.slip_ratio[i] = tau;
        out.f_xw[i] = fxw;
        out.f_yw[i] = fyw;
        if steer[i] == 0.0 {
            out.f_x[i] = fxw;
            out.f_y[i] = fyw;
        } else {
            let (s, c) = (sin(steer[i]), cos(steer[i]));
            out.f_x[i] = fxw * c - fyw * s;
            out.f_y[i] = fxw * s + fyw * c;
        }
    }
    out
}

/// Braking torque fades to zero as the wheel stops; drive torque is unchanged.
fn effective_torque(torque: f64, omega: f64) -> f64 {
    if torque < 0.0 {
        torque * (omega / BRAKE_FADE_SPEED).clamp(-1.0, 1.0)
    } else {
        torque
    }
}

/// Time derivative of the full body state under control `u`.
pub fn derivatives(state: &BodyState, u: &Control, p: &VehicleParams) -> Result<BodyState, DynamicsError> {
    let wf = wheel_forces(state, u.delta, p);
    for i in 0..4 {
        for (quantity, v) in [
            ("slip ratio", wf.slip_ratio[i]),
            ("slip angle", wf.slip_angle[i]),
            ("normal force", wf.f_z[i]),
            ("longitudinal force", wf.f_xw[i]),
            ("lateral force", wf.f_yw[i]),
        ] {
            if !v.is_finite() {
                return Err(DynamicsError::WheelNonFinite { wheel: WHEEL_NAMES[i], quantity });
            }
        }
    }
    let (fx, fy, fz) = (wf.f_x, wf.f_y, wf.f_z);
    // pairwise sums keep the left-right reflection exact in floating point
    let sum_fx = (fx[0] + fx[1]) + (fx[2] + fx[3]);
    let sum_fy = (fy[0] + fy[1]) + (fy[2] + fy[3]);
    let drag = p.c_drag * state.v_x * abs(state.v_x);

    let (s_psi, c_psi) = (sin(state.psi), cos(state.psi));
    let yaw_moment = p.l_f * (fy[0] + fy[1]) - p.l_r * (fy[2] + fy[3]) + p.l_w * ((fx[1] + fx[3]) - (fx[0] + fx[2]));
    let roll_moment = p.l_w * ((fz[0] + fz[2]) - (fz[1] + fz[3])) + p.h * sum_fy;
    let pitch_moment = p.l_r * (fz[2] + fz[3]) - p.l_f * (fz[0] + fz[1]) - p.h * sum_fx;

    let torques = u.wheel_torques();
    let omega_dot: [f64; 4] =
        core::array::from_fn(|i| (effective_torque(torques[i], state.omega[i]) - p.r_w * wf.f_xw[i]) / p.wheel_inertia);

    let d = BodyState {
        x: state.v_x * c_psi - state.v_y * s_psi,
        y: state.v_x * s_psi + state.v_y * c_psi,
        psi: state.psi_dot,
        theta: state.theta_dot,
        phi: state.phi_dot,
        v_x: state.psi_dot * state.v_y + (sum_fx - drag) / p.mass,
        v_y: -state.psi_dot * state.v_x + sum_fy / p.mass,
        psi_dot: yaw_moment / p.inertia_yaw,
        theta_dot: roll_moment / p.inertia_roll,
        phi_dot: pitch_moment / p.inertia_pitch,
        omega: omega_dot,
    };
    let names = [
        "X",
        "Y",
        "yaw",
        "roll",
        "pitch",
        "V_x",
        "V_y",
        "yaw rate",
        "roll rate",
        "pitch rate",
        "front-left wheel",
        "front-right wheel",
        "rear-left wheel",
        "rear-right wheel",
    ];
    if let Some(i) = d.to_array().iter().position(|v| !v.is_finite()) {
        return Err(DynamicsError::BodyNonFinite(names[i]));
    }
    Ok(d)
}
