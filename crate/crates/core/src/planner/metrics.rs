use alloc::vec::Vec;

use super::track::Track;
use super::PlanLog;
use crate::math;

/// Spacing of the resampled speed profile (m).
pub const PROFILE_SPACING: f64 = 1.0;

/// Curvature above which a track point counts as part of a corner (1/m).
pub const CORNER_CURVATURE: f64 = 1.0 / 200.0;

/// Summary of a closed-loop run.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// Mean planner wall time per tick (s).
    pub avg_solve_time: f64,
    /// Root-mean-square lateral error over ticks (m).
    pub rms_lateral_error: f64,
    /// Largest absolute lateral error (m).
    pub max_lateral_error: f64,
    /// `(progress, speed)` on a uniform arc-length grid from the start.
    pub speed_profile: Vec<[f64; 2]>,
    /// Lowest speed logged where the track curvature exceeds
    /// [`CORNER_CURVATURE`]; `None` if no tick was in a corner.
    pub min_corner_speed: Option<f64>,
    pub lap_time: Option<f64>,
}

/// Linearly interpolates the logged speed at uniform progress values. Ticks
/// that do not advance are skipped so the abscissa stays increasing.
fn resample(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut mono: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points {
        if mono.last().is_none_or(|q| p[0] > q[0]) {
            mono.push(*p);
        }
    }
    let (Some(first), Some(last)) = (mono.first(), mono.last()) else {
        return Vec::new();
    };
    let start = math::ceil(first[0] / PROFILE_SPACING);
    let end = math::floor(last[0] / PROFILE_SPACING);
    let mut out = Vec::new();
    let mut j = 0;
    let mut i = start;
    while i <= end {
        let s = i * PROFILE_SPACING;
        while j + 1 < mono.len() && mono[j + 1][0] < s {
            j += 1;
        }
        let v = if j + 1 < mono.len() {
            let (a, b) = (mono[j], mono[j + 1]);
            let t = ((s - a[0]) / (b[0] - a[0])).clamp(0.0, 1.0);
            a[1] + t * (b[1] - a[1])
        } else {
            mono[j][1]
        };
        out.push([s, v]);
        i += 1.0;
    }
    out
}

/// Table-style metrics of a run: timing, lateral error and speed profile.
pub fn metrics(log: &PlanLog, track: &Track) -> Metrics {
    let n = log.ticks.len().max(1) as f64;
    let avg_solve_time = log.ticks.iter().map(|t| t.solve_time).sum::<f64>() / n;
    let sq = log.ticks.iter().map(|t| t.lateral_error * t.lateral_error).sum::<f64>();
    let max_lateral_error = log.ticks.iter().map(|t| math::abs(t.lateral_error)).fold(0.0, f64::max);
    let speeds: Vec<[f64; 2]> = log.ticks.iter().map(|t| [t.progress, t.state.speed()]).collect();
    let mut min_corner_speed: Option<f64> = None;
    let mut hint = None;
    for t in &log.ticks {
        let p = track.project([t.state.x, t.state.y], hint);
        hint = Some(p.segment);
        if math::abs(track.curvature_at(p.s)) > CORNER_CURVATURE {
            let v = t.state.speed();
            min_corner_speed = Some(min_corner_speed.map_or(v, |m| m.min(v)));
        }
    }
    Metrics {
        avg_solve_time,
        rms_lateral_error: math::sqrt(sq / n),
        max_lateral_error,
        speed_profile: resample(&speeds),
        min_corner_speed,
        lap_time: log.lap_time,
    }
}
