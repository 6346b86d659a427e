//! Fixed-step explicit integration.

/// A state that supports the `x + h·dx` update used by explicit Runge-Kutta schemes.
pub trait OdeState: Copy {
    fn add_scaled(&self, d: &Self, h: f64) -> Self;
}

impl<const N: usize> OdeState for [f64; N] {
    #[inline]
    fn add_scaled(&self, d: &Self, h: f64) -> Self {
        let mut out = *self;
        for (o, di) in out.iter_mut().zip(d) {
            *o += h * di;
        }
        out
    }
}

/// One classical fourth-order Runge-Kutta step of `ẋ = f(x)`.
pub fn rk4_step<S, E, F>(x: &S, dt: f64, mut f: F) -> Result<S, E>
where
    S: OdeState,
    F: FnMut(&S) -> Result<S, E>,
{
    let k1 = f(x)?;
    let k2 = f(&x.add_scaled(&k1, 0.5 * dt))?;
    let k3 = f(&x.add_scaled(&k2, 0.5 * dt))?;
    let k4 = f(&x.add_scaled(&k3, dt))?;
    Ok(x.add_scaled(&k1, dt / 6.0).add_scaled(&k2, dt / 3.0).add_scaled(&k3, dt / 3.0).add_scaled(&k4, dt / 6.0))
}

/// Infallible variant of [`rk4_step`].
pub fn rk4_step_pure<S, F>(x: &S, dt: f64, mut f: F) -> S
where
    S: OdeState,
    F: FnMut(&S) -> S,
{
    match rk4_step::<S, core::convert::Infallible, _>(x, dt, |s| Ok(f(s))) {
        Ok(s) => s,
        Err(e) => match e {},
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_acceleration_is_exact() {
        // x'' = 3 with x(0) = 1, x'(0) = -2
        let f = |s: &[f64; 2]| [s[1], 3.0];
        let mut s = [1.0, -2.0];
        let dt = 0.125;
        for _ in 0..16 {
            s = rk4_step_pure(&s, dt, f);
        }
        let t = 2.0;
        assert!((s[0] - (1.0 - 2.0 * t + 1.5 * t * t)).abs() < 1e-12);
        assert!((s[1] - (-2.0 + 3.0 * t)).abs() < 1e-12);
    }

    #[test]
    fn cubic_time_polynomial_is_exact() {
        // x' = t², carried as an augmented clock state
        let f = |s: &[f64; 2]| [s[1] * s[1], 1.0];
        let mut s = [0.0, 0.0];
        for _ in 0..10 {
            s = rk4_step_pure(&s, 0.1, f);
        }
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-14);
    }
}
