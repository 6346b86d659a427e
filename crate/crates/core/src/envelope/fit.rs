use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{convex_hull_2d, EnvelopeError, FitConfig};
use crate::linalg;
use crate::math;
use crate::sampler::AccelSample;

/// Linear-interpolation quantile (the "type 7" estimator) of `values` at
/// level `q ∈ [0, 1]`. `None` for an empty slice.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = math::floor(h) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let w = h - lo as f64;
    if w == 0.0 || v[lo] == v[hi] {
        return Some(v[lo]);
    }
    Some(v[lo] + w * (v[hi] - v[lo]))
}

/// Least-squares fit of `(a_X/α)² + (a_Y/β)² = 1` to the hull vertices whose
/// a_X lies inside `crop_band`. Returns `(α, β)`.
pub fn fit_ellipse(hull: &[[f64; 2]], crop_band: (f64, f64)) -> Result<(f64, f64), EnvelopeError> {
    let spans = hull.iter().any(|p| p[1] > 0.0) && hull.iter().any(|p| p[1] < 0.0);
    if !spans {
        return Err(EnvelopeError::OneSided);
    }
    let used: Vec<[f64; 2]> = hull.iter().copied().filter(|p| p[0] >= crop_band.0 && p[0] <= crop_band.1).collect();
    if used.len() < 4 {
        return Err(EnvelopeError::TooFewVertices { got: used.len() });
    }
    let design: Vec<f64> = used.iter().flat_map(|p| [p[0] * p[0], p[1] * p[1]]).collect();
    let ones = alloc::vec![1.0; used.len()];
    let pq = linalg::lstsq(&design, used.len(), 2, &ones, 1e-12).ok_or(EnvelopeError::RankDeficient)?;
    if !(pq[0] > 0.0 && pq[1] > 0.0) {
        return Err(EnvelopeError::NotAnEllipse);
    }
    Ok((1.0 / math::sqrt(pq[0]), 1.0 / math::sqrt(pq[1])))
}

/// `x` reduced to `[0, π)`.
fn rem_pi(x: f64) -> f64 {
    let r = libm::fmod(x, PI);
    if r < 0.0 {
        r + PI
    } else {
        r
    }
}

/// Length-weighted histogram of line directions, periodic with period π.
struct DirectionHistogram {
    width: f64,
    weights: Vec<f64>,
    /// `(angle in [0, π), length)` of every contributing edge.
    edges: Vec<(f64, f64)>,
}

impl DirectionHistogram {
    fn new(bin_deg: f64) -> Self {
        let nbins = math::ceil(180.0 / bin_deg).max(1.0) as usize;
        Self { width: PI / nbins as f64, weights: alloc::vec![0.0; nbins], edges: Vec::new() }
    }

    fn add(&mut self, angle: f64, len: f64) {
        let a = rem_pi(angle);
        let bin = ((a / self.width) as usize).min(self.weights.len() - 1);
        self.weights[bin] += len;
        self.edges.push((a, len));
    }

    fn circular_distance(a: f64, b: f64) -> f64 {
        let d = rem_pi(a - b);
        d.min(PI - d)
    }

    fn smoothed(&self, bin: usize) -> f64 {
        let n = self.weights.len();
        self.weights[(bin + n - 1) % n] + self.weights[bin] + self.weights[(bin + 1) % n]
    }

    fn center(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) * self.width
    }

    /// Center of the heaviest (3-bin smoothed) direction, optionally at
    /// least `min_sep` away from `avoid`.
    fn peak(&self, avoid: Option<(f64, f64)>) -> Option<f64> {
        let mut best: Option<(usize, f64)> = None;
        for bin in 0..self.weights.len() {
            if let Some((center, min_sep)) = avoid {
                if Self::circular_distance(self.center(bin), center) < min_sep {
                    continue;
                }
            }
            let w = self.smoothed(bin);
            if w > 0.0 && best.is_none_or(|(_, bw)| w > bw) {
                best = Some((bin, w));
            }
        }
        best.map(|(bin, _)| self.center(bin))
    }

    /// Length-weighted mean direction of the edges within the smoothing
    /// window around `center`, computed on doubled angles so that the wrap at
    /// π is handled. Result in (−π/2, π/2].
    fn refine(&self, center: f64) -> f64 {
        let window = 1.5 * self.width;
        let (mut c, mut s) = (0.0, 0.0);
        for &(a, len) in &self.edges {
            if Self::circular_distance(a, center) <= window {
                c += len * math::cos(2.0 * a);
                s += len * math::sin(2.0 * a);
            }
        }
        let mean = 0.5 * math::atan2(s, c);
        if mean <= -PI / 2.0 {
            mean + PI
        } else {
            mean
        }
    }
}

fn offset(values: &[f64], q: f64) -> Result<f64, EnvelopeError> {
    quantile(values, q).ok_or(EnvelopeError::Empty)
}

/// Six halfspaces `A·a ≤ b` around the pooled cloud.
///
/// Rows 0–1 are `k·a_X ± a_Y ≤ b`, cutting the traction corners of the
/// `(a_X, a_Y)` cloud; `k` is the dominant normal direction of the hull edges
/// in the `a_X ≥ 0` half of the cloud folded onto `a_Y ≥ 0`. Rows 2–5 are a
/// parallelogram in the `(a_Y, a_ψ)` plane along the two dominant hull edge
/// directions, steeper family first, each row scaled to a unit a_ψ
/// coefficient (unit a_Y coefficient for a family within one histogram bin
/// of vertical). Offsets are quantiles of each row's value over the samples
/// at level `1 − (1 − cfg.quantile)/6`, so that by the union bound the
/// polytope as a whole contains at least a `cfg.quantile` fraction.
pub fn fit_halfspaces(samples: &[AccelSample], cfg: &FitConfig) -> Result<([[f64; 3]; 6], [f64; 6]), EnvelopeError> {
    if samples.is_empty() {
        return Err(EnvelopeError::Empty);
    }
    let bin_deg = cfg.direction_bin_deg;
    let deg = PI / 180.0;
    let level = 1.0 - (1.0 - cfg.quantile) / 6.0;

    // traction corner rows
    let folded: Vec<[f64; 2]> = samples.iter().map(|s| [s.a_x, math::abs(s.a_y)]).collect();
    let hull = convex_hull_2d(&folded)?;
    let mut corner = DirectionHistogram::new(bin_deg);
    for i in 0..hull.len() {
        let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
        if p[0] < 0.0 || q[0] < 0.0 {
            continue;
        }
        let normal = [q[1] - p[1], p[0] - q[0]];
        if normal[1] <= 0.0 || normal[0] < 0.0 {
            continue;
        }
        let tilt = math::atan2(normal[0], normal[1]);
        if tilt <= cfg.corner_max_tilt_deg * deg {
            corner.add(tilt, math::hypot(normal[0], normal[1]));
        }
    }
    let peak = corner.peak(None).ok_or(EnvelopeError::NoStructure("the traction corner rows"))?;
    let k = math::tan(corner.refine(peak));

    let mut a = [[0.0; 3]; 6];
    let mut b = [0.0; 6];
    a[0] = [k, 1.0, 0.0];
    a[1] = [k, -1.0, 0.0];
    let row_values = |row: [f64; 3]| -> Vec<f64> {
        samples.iter().map(|s| row[0] * s.a_x + row[1] * s.a_y + row[2] * s.a_psi).collect()
    };
    b[0] = offset(&row_values(a[0]), level)?;
    b[1] = offset(&row_values(a[1]), level)?;

    // (a_Y, a_ψ) parallelogram
    let lateral: Vec<[f64; 2]> = samples.iter().map(|s| [s.a_y, s.a_psi]).collect();
    let hull = convex_hull_2d(&lateral)?;
    let mut dirs = DirectionHistogram::new(bin_deg);
    for i in 0..hull.len() {
        let (p, q) = (hull[i], hull[(i + 1) % hull.len()]);
        let (dy, dpsi) = (q[0] - p[0], q[1] - p[1]);
        dirs.add(math::atan2(dpsi, dy), math::hypot(dy, dpsi));
    }
    let first = dirs.peak(None).ok_or(EnvelopeError::NoStructure("the parallelogram"))?;
    let second = dirs
        .peak(Some((first, cfg.family_separation_deg * deg)))
        .ok_or(EnvelopeError::NoStructure("the second parallelogram edge family"))?;

    let snap = math::tan(dirs.width);
    let mut families: Vec<([f64; 3], f64)> = [first, second]
        .iter()
        .map(|&center| {
            let theta = dirs.refine(center);
            let (n_y, n_psi) = (-math::sin(theta), math::cos(theta));
            if math::abs(n_psi) <= math::abs(n_y) * snap {
                ([0.0, 1.0, 0.0], f64::INFINITY)
            } else {
                ([0.0, n_y / n_psi, 1.0], math::abs(n_y / n_psi))
            }
        })
        .collect();
    families.sort_by(|x, y| y.1.total_cmp(&x.1));
    for (f, (row, _)) in families.iter().enumerate() {
        let neg = [-row[0], -row[1], -row[2]];
        a[2 + 2 * f] = *row;
        a[3 + 2 * f] = neg;
        b[2 + 2 * f] = offset(&row_values(*row), level)?;
        b[3 + 2 * f] = offset(&row_values(neg), level)?;
    }
    Ok((a, b))
}

/// Extreme a_X quantiles of the samples sharing one initial speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedExtremes {
    pub v_x0: f64,
    pub ax_min: f64,
    pub ax_max: f64,
    pub count: usize,
}

/// Groups samples by their exact initial speed and takes the `1 − q` and `q`
/// quantiles of a_X in each group. Groups come out sorted by speed.
pub fn speed_extremes(samples: &[AccelSample], q: f64) -> Vec<SpeedExtremes> {
    let mut sorted: Vec<&AccelSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.v_x0.total_cmp(&b.v_x0));
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let v = sorted[start].v_x0;
        let end = start + sorted[start..].iter().take_while(|s| s.v_x0.to_bits() == v.to_bits()).count();
        let ax: Vec<f64> = sorted[start..end].iter().map(|s| s.a_x).collect();
        out.push(SpeedExtremes {
            v_x0: v,
            ax_min: quantile(&ax, 1.0 - q).unwrap_or(f64::NAN),
            ax_max: quantile(&ax, q).unwrap_or(f64::NAN),
            count: ax.len(),
        });
        start = end;
    }
    out
}

/// Least-squares quadratic (lower bound) and affine (upper bound) fits of
/// per-speed a_X extremes, constant coefficient first.
pub fn fit_ax_bounds_from_extremes(extremes: &[SpeedExtremes]) -> Result<([f64; 3], [f64; 2]), EnvelopeError> {
    let mut speeds: Vec<f64> = extremes.iter().map(|e| e.v_x0).collect();
    speeds.sort_by(f64::total_cmp);
    speeds.dedup();
    if speeds.len() < 3 {
        return Err(EnvelopeError::TooFewSpeeds { got: speeds.len(), need: 3 });
    }
    let v: Vec<f64> = extremes.iter().map(|e| e.v_x0).collect();
    let lo: Vec<f64> = extremes.iter().map(|e| e.ax_min).collect();
    let hi: Vec<f64> = extremes.iter().map(|e| e.ax_max).collect();
    if v.iter().chain(&lo).chain(&hi).any(|x| !x.is_finite()) {
        return Err(EnvelopeError::NonFinite);
    }
    let c_lo = linalg::polyfit(&v, &lo, 2).ok_or(EnvelopeError::RankDeficient)?;
    let c_hi = linalg::polyfit(&v, &hi, 1).ok_or(EnvelopeError::RankDeficient)?;
    Ok(([c_lo[0], c_lo[1], c_lo[2]], [c_hi[0], c_hi[1]]))
}

/// Per-speed a_X quantiles followed by the polynomial fits.
pub fn fit_ax_bounds(samples: &[AccelSample], q: f64) -> Result<([f64; 3], [f64; 2]), EnvelopeError> {
    if samples.is_empty() {
        return Err(EnvelopeError::Empty);
    }
    fit_ax_bounds_from_extremes(&speed_extremes(samples, q))
}
