//! Monte-Carlo sampling of reachable accelerations.
//!
//! Each sample draws a constant control uniformly from the admissible box,
//! rolls the body model out over a short horizon, fits a quadratic to the
//! ground-frame `X`, `Y` and yaw series and keeps twice the leading
//! coefficients as the sample's `(a_X, a_Y, a_ψ)`.
//!
//! Every sample index owns its own ChaCha stream, so samples can be computed
//! in any order or in parallel and still reproduce the sequential result.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{simulate, BodyState, Control, SimulationError, VehicleParams};
use crate::linalg;

/// Initial conditions swept by a sampling campaign.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SamplingGrid {
    pub v_x0: Vec<f64>,
    pub v_y0: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Default for SamplingGrid {
    fn default() -> Self {
        Self { v_x0: alloc::vec![5.0, 10.0, 20.0, 30.0, 40.0], v_y0: alloc::vec![0.0], mu: alloc::vec![1.0] }
    }
}

impl SamplingGrid {
    /// All `(v_x0, v_y0, μ)` combinations, `v_x0` varying slowest.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.v_x0.len() * self.v_y0.len() * self.mu.len());
        for &vx in &self.v_x0 {
            for &vy in &self.v_y0 {
                for &mu in &self.mu {
                    out.push((vx, vy, mu));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct SamplingConfig {
    /// Number of control draws per initial condition.
    pub n: usize,
    /// Rollout horizon (s).
    pub horizon: f64,
    /// Integration step (s).
    pub dt: f64,
    pub seed: u64,
    pub grid: SamplingGrid,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { n: 100_000, horizon: 0.1, dt: 1e-3, seed: 0, grid: SamplingGrid::default() }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.n == 0 {
            return Err(SamplerError::Config("n must be at least 1"));
        }
        if !(self.dt > 0.0 && self.horizon.is_finite() && crate::dynamics::step_count(self.horizon, self.dt) >= 2) {
            return Err(SamplerError::Config("need dt > 0 and at least two steps per horizon"));
        }
        let g = &self.grid;
        if g.v_x0.is_empty() || g.v_y0.is_empty() || g.mu.is_empty() {
            return Err(SamplerError::Config("every grid axis needs at least one value"));
        }
        if g.v_x0.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SamplerError::Config("v_x0 values must be finite and positive"));
        }
        if g.v_y0.iter().any(|v| !v.is_finite()) {
            return Err(SamplerError::Config("v_y0 values must be finite"));
        }
        if g.mu.iter().any(|m| !(*m > 0.0 && *m <= 2.0)) {
            return Err(SamplerError::Config("mu values must lie in (0, 2]"));
        }
        Ok(())
    }
}

/// One reachable acceleration with the conditions that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AccelSample {
    /// Ground-frame accelerations (m/s²).
    pub a_x: f64,
    pub a_y: f64,
    /// Yaw acceleration (rad/s²).
    pub a_psi: f64,
    pub control: Control,
    pub v_x0: f64,
    pub v_y0: f64,
    pub mu: f64,
}

impl AccelSample {
    pub fn accel(&self) -> [f64; 3] {
        [self.a_x, self.a_y, self.a_psi]
    }

    /// The sampled acceleration as a double-integrator control.
    pub fn plan_control(&self) -> crate::integrator_model::PlanControl {
        crate::integrator_model::PlanControl::new(self.a_x, self.a_y, self.a_psi)
    }

    /// Left-right reflection `(a_X, −a_Y, −a_ψ)` with mirrored steering and
    /// lateral velocity.
    pub fn mirrored(&self) -> Self {
        Self { a_y: -self.a_y, a_psi: -self.a_psi, control: self.control.mirrored(), v_y0: -self.v_y0, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid sampling configuration: {0}")]
    Config(&'static str),
    #[error("quadratic fit needs at least 3 distinct time points, got {0}")]
    TooFewPoints(usize),
    #[error("time and value series differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("quadratic fit is rank deficient")]
    RankDeficient,
    #[error("no samples")]
    Empty,
    #[error("invalid histogram grid: {0}")]
    Histogram(&'static str),
    #[error(transparent)]
    Simulation(SimulationError),
    #[error("sample {index}: {source}")]
    Rollout { index: usize, source: SimulationError },
    #[error("sample {index}: non-finite acceleration fit")]
    NonFinite { index: usize },
}

/// Least-squares quadratic through `(times, values)`, leading coefficient first.
///
/// Times are centered and scaled before forming the normal equations, which
/// keeps the 3×3 system well conditioned for short horizons.
pub fn fit_quadratic(times: &[f64], values: &[f64]) -> Result<[f64; 3], SamplerError> {
    if times.len() != values.len() {
        return Err(SamplerError::LengthMismatch { times: times.len(), values: values.len() });
    }
    let mut distinct: Vec<f64> = times.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(SamplerError::TooFewPoints(distinct.len()));
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let scale = times.iter().fold(0.0_f64, |m, t| m.max(crate::math::abs(t - mean)));
    let mut s = [0.0; 5];
    let mut r = [0.0; 3];
    for (t, y) in times.iter().zip(values) {
        let u = (t - mean) / scale;
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                r[k] += p * y;
            }
            p *= u;
        }
    }
    // unknowns ordered (u², u, 1)
    let normal = [s[4], s[3], s[2], s[3], s[2], s[1], s[2], s[1], s[0]];
    let rhs = [r[2], r[1], r[0]];
    let c = linalg::solve(&normal, &rhs, 1e-12).ok_or(SamplerError::RankDeficient)?;
    let (p2, p1, p0) = (c[0], c[1], c[2]);
    let a = p2 / (scale * scale);
    let b = p1 / scale - 2.0 * a * mean;
    let c0 = p0 - p1 * mean / scale + a * mean * mean;
    Ok([a, b, c0])
}

/// The control drawn for sample `index` of a campaign seeded with `seed`.
pub fn draw_control(seed: u64, index: u64, p: &VehicleParams) -> Control {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let t_f = rng.random_range(p.torque_min..=p.torque_max);
    let t_r = rng.random_range(p.torque_min..=0.0);
    let delta = rng.random_range(-p.delta_max..=p.delta_max);
    Control::new(t_f, t_r, delta)
}

/// Accelerations `(a_X, a_Y, a_ψ)` reached from `xi0` under the constant control `u`.
pub fn accelerations_under(
    xi0: &BodyState,
    u: &Control,
    horizon: f64,
    dt: f64,
    p: &VehicleParams,
) -> Result<[f64; 3], SamplerError> {
    let traj = simulate(xi0, u, horizon, dt, p).map_err(SamplerError::Simulation)?;
    let times: Vec<f64> = (0..traj.len()).map(|k| k as f64 * dt).collect();
    let leading = |get: fn(&BodyState) -> f64| -> Result<f64, SamplerError> {
        let values: Vec<f64> = traj.iter().map(get).collect();
        Ok(2.0 * fit_quadratic(&times, &values)?[0])
    };
    Ok([leading(|s| s.x)?, leading(|s| s.y)?, leading(|s| s.psi)?])
}

/// Computes sample `index` of a campaign.
pub fn feasible_sample(
    xi0: &BodyState,
    cfg: &SamplingConfig,
    p: &VehicleParams,
    index: usize,
) -> Result<AccelSample, SamplerError> {
    let u = draw_control(cfg.seed, index as u64, p);
    let [a_x, a_y, a_psi] = match accelerations_under(xi0, &u, cfg.horizon, cfg.dt, p) {
        Ok(a) => a,
        Err(SamplerError::Simulation(source)) => return Err(SamplerError::Rollout { index, source }),
        Err(e) => return Err(e),
    };
    if !(a_x.is_finite() && a_y.is_finite() && a_psi.is_finite()) {
        return Err(SamplerError::NonFinite { index });
    }
    Ok(AccelSample { a_x, a_y, a_psi, control: u, v_x0: xi0.v_x, v_y0: xi0.v_y, mu: p.mu })
}

/// Result of a sampling campaign at one initial condition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibleSet {
    /// Samples in index order.
    pub samples: Vec<AccelSample>,
    /// Indices whose rollout diverged; `samples.len() + skipped.len() == n`.
    pub skipped: Vec<usize>,
}

/// Draws `cfg.n` controls and returns the accelerations they reach from `xi0`.
/// The friction coefficient is taken from `p`.
pub fn feasible_set(xi0: &BodyState, cfg: &SamplingConfig, p: &VehicleParams) -> Result<FeasibleSet, SamplerError> {
    cfg.validate()?;
    let mut out = FeasibleSet { samples: Vec::with_capacity(cfg.n), skipped: Vec::new() };
    for index in 0..cfg.n {
        match feasible_sample(xi0, cfg, p, index) {
            Ok(s) => out.samples.push(s),
            Err(SamplerError::Rollout { index, .. } | SamplerError::NonFinite { index }) => out.skipped.push(index),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Rectangular binning of the `(a_X, a_Y)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl HistogramSpec {
    /// Bins spanning the bounding box of `samples`.
    pub fn covering(samples: &[AccelSample], nx: usize, ny: usize) -> Result<Self, SamplerError> {
        let first = samples.first().ok_or(SamplerError::Empty)?;
        let mut x = (first.a_x, first.a_x);
        let mut y = (first.a_y, first.a_y);
        for s in samples {
            x = (x.0.min(s.a_x), x.1.max(s.a_x));
            y = (y.0.min(s.a_y), y.1.max(s.a_y));
        }
        // degenerate extents still get a unit-width cell
        let widen = |r: (f64, f64)| if r.1 > r.0 { r } else { (r.0 - 0.5, r.0 + 0.5) };
        Ok(Self { x_range: widen(x), y_range: widen(y), nx, ny })
    }

    fn bin(v: f64, range: (f64, f64), n: usize) -> usize {
        let f = (v - range.0) / (range.1 - range.0) * n as f64;
        if f.is_nan() || f < 0.0 {
            0
        } else {
            (f as usize).min(n - 1)
        }
    }
}

/// Sample counts per `(a_X, a_Y)` cell, row-major with `a_Y` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.spec.nx + ix]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Largest cell count divided by the mean count of the occupied cells.
    /// Close to 1 for samples spread evenly over their support; large when
    /// samples pile up in a few cells.
    pub fn concentration_ratio(&self) -> f64 {
        let occupied: Vec<u64> = self.counts.iter().copied().filter(|c| *c > 0).collect();
        if occupied.is_empty() {
            return 0.0;
        }
        let max = *occupied.iter().max().unwrap_or(&0) as f64;
        let mean = occupied.iter().sum::<u64>() as f64 / occupied.len() as f64;
        max / mean
    }
}

/// Bins samples in the `(a_X, a_Y)` plane. Samples outside the grid land in
/// the nearest edge cell, so the total always equals the sample count.
pub fn density_histogram(samples: &[AccelSample], spec: &HistogramSpec) -> Result<Histogram, SamplerError> {
    if samples.is_empty() {
        return Err(SamplerError::Empty);
    }
    if spec.nx == 0 || spec.ny == 0 {
        return Err(SamplerError::Histogram("bin counts must be positive"));
    }
    if !(spec.x_range.1 > spec.x_range.0 && spec.y_range.1 > spec.y_range.0) {
        return Err(SamplerError::Histogram("ranges must be increasing"));
    }
    let mut counts = alloc::vec![0u64; spec.nx * spec.ny];
    for s in samples {
        let ix = HistogramSpec::bin(s.a_x, spec.x_range, spec.nx);
        let iy = HistogramSpec::bin(s.a_y, spec.y_range, spec.ny);
        counts[iy * spec.nx + ix] += 1;
    }
    Ok(Histogram { spec: *spec, counts })
}
