use crate::math;
use crate::ode::{rk4_step_pure, OdeState};

/// Pose and speed of the kinematic bicycle; `(x, y)` is the center of mass.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BicycleState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
}

impl OdeState for BicycleState {
    fn add_scaled(&self, d: &Self, h: f64) -> Self {
        Self { x: self.x + h * d.x, y: self.y + h * d.y, psi: self.psi + h * d.psi, v: self.v + h * d.v }
    }
}

/// Geometry and input bounds of the baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct BicycleParams {
    pub l_f: f64,
    pub l_r: f64,
    pub accel_min: f64,
    pub accel_max: f64,
    pub delta_max: f64,
    /// Lateral acceleration the model is trusted up to (m/s²); steering is
    /// limited so that the steady-turn value `v²·sin β / l_r` stays below it.
    pub lateral_max: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        Self {
            l_f: 1.17,
            l_r: 1.77,
            accel_min: -9.3,
            accel_max: 4.3,
            delta_max: 30f64.to_radians(),
            lateral_max: 0.5 * crate::GRAVITY,
        }
    }
}

impl BicycleParams {
    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    /// Side-slip angle of the center of mass for steering angle `delta`.
    pub fn slip(&self, delta: f64) -> f64 {
        math::atan(self.l_r / self.wheelbase() * math::tan(delta))
    }

    /// Steering bound at speed `v`: the mechanical limit, tightened so the
    /// steady-turn lateral acceleration stays within `lateral_max`.
    pub fn steering_limit(&self, v: f64) -> f64 {
        let v2 = v * v;
        if v2 <= 0.0 {
            return self.delta_max;
        }
        let sin_beta = (self.lateral_max * self.l_r / v2).min(1.0);
        let beta = math::asin(sin_beta);
        let delta = math::atan(math::tan(beta) * self.wheelbase() / self.l_r);
        delta.min(self.delta_max)
    }

    /// Clamps `(accel, delta)` into the admissible box at speed `v`.
    pub fn clamp(&self, v: f64, accel: f64, delta: f64) -> (f64, f64) {
        let lim = self.steering_limit(v);
        (accel.clamp(self.accel_min, self.accel_max), delta.clamp(-lim, lim))
    }

    pub fn admissible(&self, v: f64, accel: f64, delta: f64) -> bool {
        let lim = self.steering_limit(v);
        accel >= self.accel_min && accel <= self.accel_max && math::abs(delta) <= lim
    }
}

fn derivative(s: &BicycleState, accel: f64, beta: f64, l_r: f64) -> BicycleState {
    BicycleState {
        x: s.v * math::cos(s.psi + beta),
        y: s.v * math::sin(s.psi + beta),
        psi: s.v * math::sin(beta) / l_r,
        v: accel,
    }
}

/// One RK4 step of the kinematic bicycle with constant acceleration and
/// steering.
pub fn kinematic_bicycle_step(s: &BicycleState, accel: f64, delta: f64, p: &BicycleParams, dt: f64) -> BicycleState {
    let beta = p.slip(delta);
    rk4_step_pure(s, dt, |x: &BicycleState| derivative(x, accel, beta, p.l_r))
}
