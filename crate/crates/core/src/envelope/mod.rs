//! Convex envelope of sampled acceleration clouds.
//!
//! The envelope has three constraint families on `a = (a_X, a_Y, a_ψ)`:
//!
//! * a truncated ellipse `(a_X/α)² + (a_Y/β)² ≤ 1`,
//! * a speed-dependent slab `a_X^min(v) ≤ a_X ≤ a_X^max(v)`,
//! * six halfspaces `A·a ≤ b`: two rows coupling `(a_X, a_Y)` that cut the
//!   traction corners, and a parallelogram in the `(a_Y, a_ψ)` plane.
//!
//! [`build_envelope`] fits all three to a pooled sample cloud.

mod fit;
mod hull;
mod synthetic;

pub use fit::{
    fit_ax_bounds, fit_ax_bounds_from_extremes, fit_ellipse, fit_halfspaces, quantile, speed_extremes, SpeedExtremes,
};
pub use hull::{convex_hull_2d, point_in_hull};
pub use synthetic::{synthetic_cloud, SyntheticCloud};

use alloc::vec::Vec;

use crate::linalg::polyval;
use crate::sampler::AccelSample;

/// Speed range (m/s) over which the a_X polynomials are calibrated. Outside
/// it they are evaluated at the nearest endpoint.
pub const CALIBRATED_SPEED: (f64, f64) = (0.0, 50.0);

/// Fitted envelope parameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvelopeModel {
    /// Ellipse semi-axis along a_X (m/s²).
    pub alpha: f64,
    /// Ellipse semi-axis along a_Y (m/s²).
    pub beta: f64,
    /// Halfspace matrix, row-major, acting on `(a_X, a_Y, a_ψ)`.
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub a: [[f64; 3]; 6],
    /// Halfspace offsets.
    pub b: [f64; 6],
    /// Lower a_X bound as a quadratic in v_x (constant first).
    pub ax_min_poly: [f64; 3],
    /// Upper a_X bound as an affine function of v_x (constant first).
    pub ax_max_poly: [f64; 2],
}

impl EnvelopeModel {
    /// The reference berline envelope.
    pub fn reference() -> Self {
        Self {
            alpha: 9.4,
            beta: 9.0,
            a: [
                [2.6, 1.0, 0.0],
                [2.6, -1.0, 0.0],
                [0.0, 1.1, 1.0],
                [0.0, -1.1, -1.0],
                [0.0, -0.57, 1.0],
                [0.0, 0.57, -1.0],
            ],
            b: [15.3, 15.3, 9.9, 9.9, 5.1, 5.1],
            ax_min_poly: [-9.3, -0.013, 0.00072],
            ax_max_poly: [4.3, -0.009],
        }
    }

    fn clamp_speed(v_x: f64) -> f64 {
        v_x.clamp(CALIBRATED_SPEED.0, CALIBRATED_SPEED.1)
    }

    /// Lower a_X bound at longitudinal speed `v_x`.
    pub fn ax_min(&self, v_x: f64) -> f64 {
        polyval(&self.ax_min_poly, Self::clamp_speed(v_x))
    }

    /// Upper a_X bound at longitudinal speed `v_x`.
    pub fn ax_max(&self, v_x: f64) -> f64 {
        polyval(&self.ax_max_poly, Self::clamp_speed(v_x))
    }

    /// Largest `|a_Y|` admissible with `a_X = 0` and `a_ψ = 0`: the lateral
    /// acceleration that can be held in a steady turn, since a constant yaw
    /// rate needs zero yaw acceleration.
    pub fn steady_lateral_limit(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .filter(|(row, _)| row[1] != 0.0)
            .fold(self.beta, |lim, (row, b)| lim.min(b / crate::math::abs(row[1])))
    }

    /// Checks the structural invariants: positive semi-axes, the origin
    /// strictly inside the polytope, and `ax_min < 0 < ax_max` over the
    /// calibrated speed range.
    pub fn validate(&self) -> Result<(), EnvelopeError> {
        let finite = [self.alpha, self.beta]
            .iter()
            .chain(self.a.iter().flatten())
            .chain(self.b.iter())
            .chain(self.ax_min_poly.iter())
            .chain(self.ax_max_poly.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(EnvelopeError::InvalidModel("non-finite coefficient"));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(EnvelopeError::InvalidModel("ellipse semi-axes must be positive"));
        }
        if self.b.iter().any(|b| *b <= 0.0) {
            return Err(EnvelopeError::InvalidModel("origin must be strictly inside the polytope"));
        }
        let (lo, hi) = CALIBRATED_SPEED;
        let mut probes = alloc::vec![lo, hi];
        let c2 = self.ax_min_poly[2];
        if c2 != 0.0 {
            let vertex = -self.ax_min_poly[1] / (2.0 * c2);
            if vertex > lo && vertex < hi {
                probes.push(vertex);
            }
        }
        for v in probes {
            if !(self.ax_min(v) < 0.0) {
                return Err(EnvelopeError::InvalidModel("a_X lower bound must be negative"));
            }
            if !(self.ax_max(v) > 0.0) {
                return Err(EnvelopeError::InvalidModel("a_X upper bound must be positive"));
            }
        }
        Ok(())
    }
}

/// Knobs of [`build_envelope`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct FitConfig {
    /// Fraction of samples each halfspace and a_X bound must contain.
    pub quantile: f64,
    /// Ellipse crop band, lower end, as a fraction of the most negative a_X.
    pub crop_braking: f64,
    /// Ellipse crop band, upper end, as a fraction of the largest a_X.
    pub crop_traction: f64,
    /// Pool each sample with its left-right mirror image before fitting.
    pub symmetrize: bool,
    /// Width (degrees) of the bins of the hull edge-direction histograms.
    pub direction_bin_deg: f64,
    /// Minimum angle (degrees) between the two parallelogram edge families.
    pub family_separation_deg: f64,
    /// Traction-corner edges whose normal is tilted more than this (degrees)
    /// from the a_Y axis belong to the a_X bound and are ignored.
    pub corner_max_tilt_deg: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            quantile: 0.999,
            crop_braking: 0.8,
            crop_traction: 0.5,
            symmetrize: true,
            direction_bin_deg: 2.0,
            family_separation_deg: 20.0,
            corner_max_tilt_deg: 80.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), EnvelopeError> {
        if !(self.quantile > 0.5 && self.quantile <= 1.0) {
            return Err(EnvelopeError::Config("quantile must lie in (0.5, 1]"));
        }
        if !(self.crop_braking > 0.0 && self.crop_braking <= 1.0) {
            return Err(EnvelopeError::Config("crop_braking must lie in (0, 1]"));
        }
        if !(self.crop_traction > 0.0 && self.crop_traction <= 1.0) {
            return Err(EnvelopeError::Config("crop_traction must lie in (0, 1]"));
        }
        if !(self.direction_bin_deg > 0.0 && self.direction_bin_deg <= 15.0) {
            return Err(EnvelopeError::Config("direction_bin_deg must lie in (0, 15]"));
        }
        if !(self.family_separation_deg >= self.direction_bin_deg && self.family_separation_deg < 90.0) {
            return Err(EnvelopeError::Config("family_separation_deg must lie in [bin width, 90)"));
        }
        if !(self.corner_max_tilt_deg > 0.0 && self.corner_max_tilt_deg < 90.0) {
            return Err(EnvelopeError::Config("corner_max_tilt_deg must lie in (0, 90)"));
        }
        Ok(())
    }
}

/// Pipeline stage an error came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStage {
    Hull,
    Ellipse,
    Halfspaces,
    AxBounds,
    Model,
}

impl core::fmt::Display for FitStage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            FitStage::Hull => "convex hull",
            FitStage::Ellipse => "ellipse fit",
            FitStage::Halfspaces => "halfspace fit",
            FitStage::AxBounds => "a_X bound fit",
            FitStage::Model => "model check",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvelopeError {
    #[error("no samples")]
    Empty,
    #[error("non-finite input point")]
    NonFinite,
    #[error("degenerate input: points are collinear or coincident")]
    Degenerate,
    #[error("hull does not span both signs of a_Y")]
    OneSided,
    #[error("only {got} hull vertices inside the crop band, need at least 4")]
    TooFewVertices { got: usize },
    #[error("vertices are not consistent with an origin-centered ellipse")]
    NotAnEllipse,
    #[error("hull lacks the edge structure for {0}")]
    NoStructure(&'static str),
    #[error("{got} distinct speeds, need at least {need}")]
    TooFewSpeeds { got: usize, need: usize },
    #[error("rank-deficient least-squares system")]
    RankDeficient,
    #[error("invalid fit configuration: {0}")]
    Config(&'static str),
    #[error("invalid envelope: {0}")]
    InvalidModel(&'static str),
    #[error("{stage}: {source}")]
    Stage {
        stage: FitStage,
        #[source]
        source: alloc::boxed::Box<EnvelopeError>,
    },
}

impl EnvelopeError {
    fn at(self, stage: FitStage) -> Self {
        EnvelopeError::Stage { stage, source: alloc::boxed::Box::new(self) }
    }
}

/// Envelope plus fit diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFit {
    pub model: EnvelopeModel,
    /// Number of vertices of the pooled `(a_X, a_Y)` hull.
    pub hull_vertices: usize,
    /// a_X interval whose hull vertices entered the ellipse fit.
    pub crop_band: (f64, f64),
    /// Per-speed a_X extremes behind the polynomial fits.
    pub extremes: Vec<SpeedExtremes>,
    /// Fraction of the (unmirrored) input samples satisfying every
    /// constraint at their own initial speed.
    pub containment: f64,
}

/// Pools the samples (optionally mirror-symmetrized) and fits the ellipse,
/// halfspaces and a_X bound polynomials.
pub fn build_envelope(samples: &[AccelSample], cfg: &FitConfig) -> Result<EnvelopeFit, EnvelopeError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(EnvelopeError::Empty);
    }
    let mut pooled: Vec<AccelSample> = samples.to_vec();
    if cfg.symmetrize {
        pooled.extend(samples.iter().map(AccelSample::mirrored));
    }

    let planar: Vec<[f64; 2]> = pooled.iter().map(|s| [s.a_x, s.a_y]).collect();
    let hull = convex_hull_2d(&planar).map_err(|e| e.at(FitStage::Hull))?;
    let min_x = hull.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let max_x = hull.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let crop_band = (cfg.crop_braking * min_x.min(0.0), cfg.crop_traction * max_x.max(0.0));
    let (alpha, beta) = fit_ellipse(&hull, crop_band).map_err(|e| e.at(FitStage::Ellipse))?;

    let (a, b) = fit_halfspaces(&pooled, cfg).map_err(|e| e.at(FitStage::Halfspaces))?;

    let extremes = speed_extremes(&pooled, cfg.quantile);
    let (ax_min_poly, ax_max_poly) = fit_ax_bounds_from_extremes(&extremes).map_err(|e| e.at(FitStage::AxBounds))?;

    let model = EnvelopeModel { alpha, beta, a, b, ax_min_poly, ax_max_poly };
    model.validate().map_err(|e| e.at(FitStage::Model))?;

    let inside = samples
        .iter()
        .filter(|s| crate::integrator_model::is_feasible(&model, &s.plan_control(), s.v_x0).feasible)
        .count();
    let containment = inside as f64 / samples.len() as f64;
    Ok(EnvelopeFit { model, hull_vertices: hull.len(), crop_band, extremes, containment })
}

#[cfg(test)]
mod tests;
