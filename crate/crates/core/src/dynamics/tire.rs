//! Combined-slip Magic Formula tire.

use super::params::TireParams;
use crate::math::{atan, cos, sin, sqrt};

fn pure_slip(slip: f64, b: f64, c: f64, e: f64) -> f64 {
    let bs = b * slip;
    sin(c * atan(bs - e * (bs - atan(bs))))
}

/// Longitudinal and lateral wheel-frame forces `(F_xw, F_yw)` for slip ratio
/// `tau`, slip angle `alpha` (rad), normal load `f_z` (N) and friction `mu`.
///
/// The result never leaves the friction circle of radius `mu·f_z`; when the
/// cosine-weighted pure-slip forces would exceed it they are scaled back
/// radially.
pub fn tire_forces(tau: f64, alpha: f64, f_z: f64, mu: f64, tire: &TireParams) -> (f64, f64) {
    if !(f_z > 0.0) || !(mu > 0.0) {
        return (0.0, 0.0);
    }
    let peak = mu * f_z;
    let fx0 = tire.d_x * peak * pure_slip(tau, tire.b_x / mu, tire.c_x, tire.e_x);
    let fy0 = tire.d_y * peak * pure_slip(alpha, tire.b_y / mu, tire.c_y, tire.e_y);
    let gx = cos(tire.c_xa * atan(tire.b_xa * alpha));
    let gy = cos(tire.c_yk * atan(tire.b_yk * tau));
    let (fx, fy) = (gx * fx0, gy * fy0);
    let norm = sqrt(fx * fx + fy * fy);
    if norm > peak {
        let s = peak / norm;
        (fx * s, fy * s)
    } else {
        (fx, fy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_slip_zero_force() {
        let t = TireParams::default();
        assert_eq!(tire_forces(0.0, 0.0, 5000.0, 1.0, &t), (0.0, 0.0));
        assert_eq!(tire_forces(0.0, 0.0, 0.0, 1.0, &t), (0.0, 0.0));
    }

    #[test]
    fn unloaded_wheel_has_no_force() {
        let t = TireParams::default();
        assert_eq!(tire_forces(0.2, 0.1, 0.0, 1.0, &t), (0.0, 0.0));
        assert_eq!(tire_forces(0.2, 0.1, -10.0, 1.0, &t), (0.0, 0.0));
    }

    #[test]
    fn small_positive_slip_drives_forward() {
        let t = TireParams::default();
        let (fx, fy) = tire_forces(0.03, 0.0, 5000.0, 1.0, &t);
        assert!(fx > 0.0);
        assert_eq!(fy, 0.0);
        let (fx_ice, fy_ice) = tire_forces(0.03, 0.0, 5000.0, 0.3, &t);
        assert!(fx_ice > 0.0 && fx_ice < fx);
        assert!(fx_ice <= 1500.0);
        assert_eq!(fy_ice, 0.0);
        // frozen values of the shipped coefficients
        assert!((fx - 3037.644476).abs() < 1e-6, "fx = {fx}");
        assert!((fx_ice - 1499.412453).abs() < 1e-6, "fx_ice = {fx_ice}");
    }

    #[test]
    fn low_slip_stiffness_matches_bcd() {
        // dF/ds at zero slip is B·C·D
        let t = TireParams::default();
        let (fz, mu, s) = (4000.0, 0.7, 1e-7);
        let (fx, _) = tire_forces(s, 0.0, fz, mu, &t);
        let k = t.b_x / mu * t.c_x * t.d_x * mu * fz;
        assert!((fx / s - k).abs() / k < 1e-6);
    }

    proptest! {
        #[test]
        fn friction_circle(tau in -1.0f64..1.0, alpha in -1.5f64..1.5, fz in 0.0f64..20_000.0, mu in 0.05f64..2.0) {
            let (fx, fy) = tire_forces(tau, alpha, fz, mu, &TireParams::default());
            prop_assert!((fx * fx + fy * fy).sqrt() <= mu * fz + 1e-9);
        }

        #[test]
        fn odd_symmetry(tau in -1.0f64..1.0, alpha in -1.5f64..1.5, fz in 0.0f64..20_000.0, mu in 0.05f64..2.0) {
            let t = TireParams::default();
            let (fx, fy) = tire_forces(tau, alpha, fz, mu, &t);
            let (gx, gy) = tire_forces(-tau, -alpha, fz, mu, &t);
            prop_assert_eq!(fx, -gx);
            prop_assert_eq!(fy, -gy);
            // each component is odd in its own slip and even in the other
            let (hx, hy) = tire_forces(-tau, alpha, fz, mu, &t);
            prop_assert_eq!(fx, -hx);
            prop_assert_eq!(fy, hy);
        }

        #[test]
        fn pure_slip_curves_respect_peak(s in -3.0f64..3.0, fz in 1.0f64..20_000.0, mu in 0.05f64..2.0) {
            let t = TireParams::default();
            let (fx, fy) = tire_forces(s.clamp(-1.0, 1.0), 0.0, fz, mu, &t);
            prop_assert_eq!(fy, 0.0);
            prop_assert!(fx.abs() <= mu * fz);
            let (fx, fy) = tire_forces(0.0, s, fz, mu, &t);
            prop_assert_eq!(fx, 0.0);
            prop_assert!(fy.abs() <= mu * fz);
        }
    }
}
