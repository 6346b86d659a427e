use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EnvelopeModel;
use crate::dynamics::Control;
use crate::integrator_model::{is_feasible, PlanControl};
use crate::sampler::AccelSample;

/// Recipe for a synthetic cloud filling a known envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCloud {
    /// Initial speeds; each gets its own a_X slab.
    pub speeds: Vec<f64>,
    /// Points per speed.
    pub per_speed: usize,
    /// Fraction of each speed's points placed exactly on the a_X bounds
    /// (half on each), so that the bounds are attained.
    pub face_fraction: f64,
    pub seed: u64,
}

/// Uniform rejection sample of the set described by `model`, labelled as if
/// sampled from `v_x0 = speed`, `v_y0 = 0`, `μ = 1` with a zero control.
/// Used to validate the envelope fit against known constants.
pub fn synthetic_cloud(model: &EnvelopeModel, recipe: &SyntheticCloud) -> Vec<AccelSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let (psi_lo, psi_hi) = yaw_range(model);
    let mut out = Vec::with_capacity(recipe.speeds.len() * recipe.per_speed);
    for &v in &recipe.speeds {
        let (lo, hi) = (model.ax_min(v), model.ax_max(v));
        let on_face = (recipe.face_fraction * recipe.per_speed as f64) as usize;
        for i in 0..recipe.per_speed {
            let a = loop {
                let a_x = if i < on_face {
                    if i % 2 == 0 {
                        lo
                    } else {
                        hi
                    }
                } else {
                    rng.random_range(lo..=hi)
                };
                let a_y = rng.random_range(-model.beta..=model.beta);
                let a_psi = rng.random_range(psi_lo..=psi_hi);
                let a = PlanControl::new(a_x, a_y, a_psi);
                if is_feasible(model, &a, v).feasible {
                    break a;
                }
            };
            out.push(AccelSample {
                a_x: a.u_x,
                a_y: a.u_y,
                a_psi: a.u_psi,
                control: Control::new(0.0, 0.0, 0.0),
                v_x0: v,
                v_y0: 0.0,
                mu: 1.0,
            });
        }
    }
    out
}

/// A box on a_ψ implied by the halfspaces and the ellipse extents.
fn yaw_range(model: &EnvelopeModel) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (row, b) in model.a.iter().zip(model.b.iter()) {
        let slack = b + crate::math::abs(row[0]) * model.alpha + crate::math::abs(row[1]) * model.beta;
        if row[2] > 0.0 {
            hi = hi.min(slack / row[2]);
        } else if row[2] < 0.0 {
            lo = lo.max(-slack / -row[2]);
        }
    }
    assert!(lo.is_finite() && hi.is_finite(), "halfspaces must bound a_psi from both sides");
    (lo, hi)
}
