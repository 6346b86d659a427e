use core::f64::consts::PI;

use thiserror::Error;

/// Combined-slip Magic Formula coefficients.
///
/// Pure-slip curves are `D·sin(C·atan(B·s − E·(B·s − atan(B·s))))` with peak
/// `D = d·μ·F_z`. The stored stiffness factors `b_x`, `b_y` are the values on
/// a μ = 1 road; the effective factor is `b / μ`, which keeps the slip
/// stiffness `B·C·D` independent of the road while the peak scales with μ.
/// Combined slip multiplies each pure force by `cos(C_w·atan(B_w·s_other))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TireParams {
    pub b_x: f64,
    pub c_x: f64,
    pub d_x: f64,
    pub e_x: f64,
    pub b_y: f64,
    pub c_y: f64,
    pub d_y: f64,
    pub e_y: f64,
    /// Reduction of the longitudinal force with slip angle.
    pub b_xa: f64,
    pub c_xa: f64,
    /// Reduction of the lateral force with slip ratio.
    pub b_yk: f64,
    pub c_yk: f64,
}

impl Default for TireParams {
    fn default() -> Self {
        Self {
            b_x: 14.0,
            c_x: 1.65,
            d_x: 1.0,
            e_x: 0.1,
            b_y: 16.0,
            c_y: 1.3,
            d_y: 1.0,
            e_y: -0.1,
            b_xa: 10.0,
            c_xa: 1.0,
            b_yk: 8.0,
            c_yk: 1.0,
        }
    }
}

/// Physical constants of the car body, wheels, suspension and actuators.
///
/// Serialized keys follow the usual vehicle-dynamics symbols (`M_T`, `I_x`,
/// `l_f`, ...), all SI.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct VehicleParams {
    /// Total mass (kg).
    #[cfg_attr(feature = "serde", serde(rename = "M_T"))]
    pub mass: f64,
    /// Roll inertia (kg·m²).
    #[cfg_attr(feature = "serde", serde(rename = "I_x"))]
    pub inertia_roll: f64,
    /// Pitch inertia (kg·m²).
    #[cfg_attr(feature = "serde", serde(rename = "I_y"))]
    pub inertia_pitch: f64,
    /// Yaw inertia (kg·m²).
    #[cfg_attr(feature = "serde", serde(rename = "I_z"))]
    pub inertia_yaw: f64,
    /// Spin inertia of one wheel (kg·m²).
    #[cfg_attr(feature = "serde", serde(rename = "I_r"))]
    pub wheel_inertia: f64,
    /// CoM to front axle (m).
    pub l_f: f64,
    /// CoM to rear axle (m).
    pub l_r: f64,
    /// Half-track (m).
    pub l_w: f64,
    /// Effective wheel radius (m).
    pub r_w: f64,
    /// Suspension stiffness per corner (N/m).
    pub k_s: f64,
    /// Suspension damping per corner (N·s/m).
    pub d_s: f64,
    /// CoM height above ground, the lever arm of the tire forces in roll and pitch (m).
    pub h: f64,
    /// Aerodynamic drag coefficient, force = `c_drag·V_x²` (N·s²/m²).
    pub c_drag: f64,
    /// Tire-road friction coefficient.
    pub mu: f64,
    /// Lower torque bound per wheel, braking (N·m).
    #[cfg_attr(feature = "serde", serde(rename = "T_min"))]
    pub torque_min: f64,
    /// Upper drive torque per front wheel (N·m).
    #[cfg_attr(feature = "serde", serde(rename = "T_max"))]
    pub torque_max: f64,
    /// Symmetric steering bound (rad).
    pub delta_max: f64,
    pub tire: TireParams,
}

impl VehicleParams {
    /// Front-wheel-drive berline: the geometry, mass and control bounds of the
    /// reference car, with typical values for the remaining constants.
    pub fn berline() -> Self {
        Self {
            mass: 1820.0,
            inertia_roll: 600.0,
            inertia_pitch: 2800.0,
            inertia_yaw: 3300.0,
            wheel_inertia: 1.5,
            l_f: 1.17,
            l_r: 1.77,
            l_w: 0.81,
            r_w: 0.31,
            k_s: 50_000.0,
            d_s: 4_000.0,
            h: 0.55,
            c_drag: 0.4,
            mu: 1.0,
            torque_min: -1500.0,
            torque_max: 1250.0,
            delta_max: 30.0 * PI / 180.0,
            tire: TireParams::default(),
        }
    }

    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    /// Same car on a road with friction coefficient `mu`.
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("M_T", self.mass),
            ("I_x", self.inertia_roll),
            ("I_y", self.inertia_pitch),
            ("I_z", self.inertia_yaw),
            ("I_r", self.wheel_inertia),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("l_w", self.l_w),
            ("r_w", self.r_w),
            ("k_s", self.k_s),
            ("h", self.h),
            ("delta_max", self.delta_max),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamError::NotPositive { key, value: v });
            }
        }
        for (key, v) in [("d_s", self.d_s), ("c_drag", self.c_drag)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ParamError::Negative { key, value: v });
            }
        }
        if !(self.mu > 0.0 && self.mu <= 2.0) {
            return Err(ParamError::Friction(self.mu));
        }
        if !(self.torque_min < 0.0 && self.torque_max > 0.0) {
            return Err(ParamError::TorqueBounds { min: self.torque_min, max: self.torque_max });
        }
        self.tire.validate()
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::berline()
    }
}

impl TireParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (key, v) in [
            ("b_x", self.b_x),
            ("b_y", self.b_y),
            ("c_x", self.c_x),
            ("c_y", self.c_y),
            ("b_xa", self.b_xa),
            ("b_yk", self.b_yk),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamError::NotPositive { key, value: v });
            }
        }
        for (key, v) in [("c_x", self.c_x), ("c_y", self.c_y)] {
            if v >= 2.0 {
                return Err(ParamError::Tire { key, value: v, allowed: "(0, 2)" });
            }
        }
        for (key, v) in [("d_x", self.d_x), ("d_y", self.d_y)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ParamError::Tire { key, value: v, allowed: "(0, 1]" });
            }
        }
        for (key, v) in [("e_x", self.e_x), ("e_y", self.e_y)] {
            if !(v.is_finite() && v <= 1.0) {
                return Err(ParamError::Tire { key, value: v, allowed: "(-inf, 1]" });
            }
        }
        // keeps the interaction weights non-negative
        for (key, v) in [("c_xa", self.c_xa), ("c_yk", self.c_yk)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ParamError::Tire { key, value: v, allowed: "(0, 1]" });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("`{key}` must be strictly positive, got {value}")]
    NotPositive { key: &'static str, value: f64 },
    #[error("`{key}` must be non-negative, got {value}")]
    Negative { key: &'static str, value: f64 },
    #[error("friction coefficient must lie in (0, 2], got {0}")]
    Friction(f64),
    #[error("torque bounds need T_min < 0 < T_max, got [{min}, {max}]")]
    TorqueBounds { min: f64, max: f64 },
    #[error("tire coefficient `{key}` = {value} outside {allowed}")]
    Tire { key: &'static str, value: f64, allowed: &'static str },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn berline_is_valid() {
        VehicleParams::berline().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = VehicleParams::berline();
        p.mass = 0.0;
        assert!(matches!(p.validate(), Err(ParamError::NotPositive { key: "M_T", .. })));
        let p = VehicleParams::berline().with_mu(2.5);
        assert_eq!(p.validate(), Err(ParamError::Friction(2.5)));
        let mut p = VehicleParams::berline();
        p.torque_max = -1.0;
        assert!(matches!(p.validate(), Err(ParamError::TorqueBounds { .. })));
        let mut p = VehicleParams::berline();
        p.tire.d_y = 1.2;
        assert!(matches!(p.validate(), Err(ParamError::Tire { key: "d_y", .. })));
    }
}
