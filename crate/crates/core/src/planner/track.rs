use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackError {
    #[error("a track needs at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("half-width must be positive and finite")]
    HalfWidth,
    #[error("points {0} and {1} coincide or are non-finite")]
    Coincident(usize, usize),
    #[error("centerline crosses itself (segments {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("obstacle radius must be positive and finite")]
    ObstacleRadius,
}

/// A disc to keep clear of.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(x: f64, y: f64, radius: f64) -> Result<Self, TrackError> {
        if !(radius > 0.0 && radius.is_finite() && x.is_finite() && y.is_finite()) {
            return Err(TrackError::ObstacleRadius);
        }
        Ok(Self { x, y, radius })
    }
}

/// Nearest centerline point to a query position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point (may leave `[0, L]` on open tracks,
    /// whose end segments extend indefinitely).
    pub s: f64,
    /// Signed lateral offset, positive to the left of the driving direction.
    pub lateral: f64,
    /// Segment holding the foot point; a good hint for nearby queries.
    pub segment: usize,
    /// Centerline heading at the foot point.
    pub heading: f64,
}

/// Polyline centerline with a constant half-width.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    points: Vec<[f64; 2]>,
    /// Arc length at each point.
    s: Vec<f64>,
    /// Discrete curvature at each point (turning angle over mean adjacent
    /// segment length; zero at the ends of open tracks).
    curvature: Vec<f64>,
    length: f64,
    pub half_width: f64,
    pub closed: bool,
}

fn seg_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Segments without improvement after which [`Track::project`] stops walking.
const WALK_PATIENCE: usize = 4;

impl Track {
    /// Builds a track from centerline points. A closed track must not repeat
    /// its first point at the end; the closing segment is implied.
    pub fn new(points: Vec<[f64; 2]>, half_width: f64, closed: bool) -> Result<Self, TrackError> {
        let need = if closed { 3 } else { 2 };
        if points.len() < need {
            return Err(TrackError::TooFewPoints { got: points.len(), need });
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(TrackError::HalfWidth);
        }
        let n = points.len();
        let nseg = if closed { n } else { n - 1 };
        let mut s = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..nseg {
            let (a, b) = (points[i], points[(i + 1) % n]);
            let len = math::hypot(b[0] - a[0], b[1] - a[1]);
            if !(len > 0.0 && len.is_finite()) {
                return Err(TrackError::Coincident(i, (i + 1) % n));
            }
            s.push(acc);
            acc += len;
        }
        if !closed {
            s.push(acc);
        }
        for i in 0..nseg {
            for j in (i + 2)..nseg {
                if closed && i == 0 && j == nseg - 1 {
                    continue;
                }
                if seg_intersect(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]) {
                    return Err(TrackError::SelfIntersecting(i, j));
                }
            }
        }
        let mut track = Self { points, s, curvature: Vec::new(), length: acc, half_width, closed };
        track.curvature = (0..n).map(|i| track.vertex_curvature(i)).collect();
        Ok(track)
    }

    fn vertex_curvature(&self, i: usize) -> f64 {
        let n = self.points.len();
        if !self.closed && (i == 0 || i == n - 1) {
            return 0.0;
        }
        let (p, c, q) = (self.points[(i + n - 1) % n], self.points[i], self.points[(i + 1) % n]);
        let h_in = math::atan2(c[1] - p[1], c[0] - p[0]);
        let h_out = math::atan2(q[1] - c[1], q[0] - c[0]);
        let turn = math::wrap_angle(h_out - h_in);
        let mean_len = 0.5 * (math::hypot(c[0] - p[0], c[1] - p[1]) + math::hypot(q[0] - c[0], q[1] - c[1]));
        turn / mean_len
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Arc length at each centerline point.
    pub fn arc_lengths(&self) -> &[f64] {
        &self.s
    }

    /// Total centerline length (including the closing segment of a loop).
    pub fn length(&self) -> f64 {
        self.length
    }

    fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    /// Squared distance from `p` to segment `i` and the foot point data.
    fn foot(&self, i: usize, p: [f64; 2]) -> (f64, Projection) {
        let nseg = self.segment_count();
        let (a, b) = self.segment(i);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let mut t = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2;
        let lo = if !self.closed && i == 0 { f64::NEG_INFINITY } else { 0.0 };
        let hi = if !self.closed && i == nseg - 1 { f64::INFINITY } else { 1.0 };
        t = t.clamp(lo, hi);
        let (dx, dy) = (p[0] - a[0] - t * d[0], p[1] - a[1] - t * d[1]);
        let dist2 = dx * dx + dy * dy;
        let lateral_sign = if d[0] * dy - d[1] * dx >= 0.0 { 1.0 } else { -1.0 };
        (
            dist2,
            Projection {
                s: self.s[i] + t * math::sqrt(len2),
                lateral: lateral_sign * math::sqrt(dist2),
                segment: i,
                heading: math::atan2(d[1], d[0]),
            },
        )
    }

    /// Nearest-point projection. With a `hint` segment, the search walks
    /// along the centerline from the hint and stops once the distance has
    /// not improved for a few segments; without one it is exhaustive.
    pub fn project(&self, p: [f64; 2], hint: Option<usize>) -> Projection {
        let nseg = self.segment_count();
        let Some(h) = hint else {
            let mut best = self.foot(0, p);
            for i in 1..nseg {
                let c = self.foot(i, p);
                if c.0 < best.0 {
                    best = c;
                }
            }
            return best.1;
        };
        let h = h.min(nseg - 1);
        let mut best = self.foot(h, p);
        for dir in [1isize, -1] {
            let mut j = h as isize;
            let mut stale = 0;
            for _ in 0..nseg / 2 {
                j += dir;
                if self.closed {
                    j = j.rem_euclid(nseg as isize);
                } else if j < 0 || j >= nseg as isize {
                    break;
                }
                let c = self.foot(j as usize, p);
                if c.0 < best.0 {
                    best = c;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale > WALK_PATIENCE {
                        break;
                    }
                }
            }
        }
        best.1
    }

    /// Signed arc-length difference `to − from`, taking the short way round
    /// on a closed track.
    pub fn progress_between(&self, from: f64, to: f64) -> f64 {
        let d = to - from;
        if !self.closed {
            return d;
        }
        let l = self.length;
        let w = d - l * math::floor(d / l + 0.5);
        if w <= -0.5 * l {
            w + l
        } else {
            w
        }
    }

    /// Centerline position and heading at arc length `s`.
    pub fn pose_at(&self, s: f64) -> ([f64; 2], f64) {
        let nseg = self.segment_count();
        let s = if self.closed { s - self.length * math::floor(s / self.length) } else { s };
        let i = match self.s.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(nseg - 1),
            Err(i) => i.saturating_sub(1).min(nseg - 1),
        };
        let (a, b) = self.segment(i);
        let len = math::hypot(b[0] - a[0], b[1] - a[1]);
        let t = (s - self.s[i]) / len;
        ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], math::atan2(b[1] - a[1], b[0] - a[0]))
    }

    /// Curvature at arc length `s`, linearly interpolated between points.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let n = self.points.len();
        let s = if self.closed { s - self.length * math::floor(s / self.length) } else { s.clamp(0.0, self.length) };
        let i = match self.s.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => return self.curvature[i],
            Err(i) => i.saturating_sub(1),
        };
        if !self.closed && i >= n - 1 {
            return self.curvature[n - 1];
        }
        let j = (i + 1) % n;
        let s_j = if j == 0 { self.length } else { self.s[j] };
        let t = (s - self.s[i]) / (s_j - self.s[i]);
        self.curvature[i] + t * (self.curvature[j] - self.curvature[i])
    }

    /// Straight open track along +X.
    pub fn straight(length: f64, spacing: f64, half_width: f64) -> Result<Self, TrackError> {
        let n = math::ceil(length / spacing).max(1.0) as usize;
        let pts = (0..=n).map(|i| [length * i as f64 / n as f64, 0.0]).collect();
        Self::new(pts, half_width, false)
    }

    /// Counter-clockwise circle centered at `(0, radius)`, starting at the
    /// origin heading along +X.
    pub fn circle(radius: f64, spacing: f64, half_width: f64) -> Result<Self, TrackError> {
        let n = math::ceil(TAU * radius / spacing).max(3.0) as usize;
        let pts = (0..n)
            .map(|i| {
                let a = TAU * i as f64 / n as f64;
                [radius * math::sin(a), radius - radius * math::cos(a)]
            })
            .collect();
        Self::new(pts, half_width, true)
    }

    /// Closed track traced from straight and arc pieces, starting at the
    /// origin heading along +X. Points are spaced at most `spacing` apart.
    pub fn from_pieces(pieces: &[Piece], spacing: f64, half_width: f64) -> Result<Self, TrackError> {
        let mut pts: Vec<[f64; 2]> = alloc::vec![[0.0, 0.0]];
        let (mut x, mut y, mut h) = (0.0, 0.0, 0.0);
        for piece in pieces {
            match *piece {
                Piece::Straight(len) => {
                    let n = math::ceil(len / spacing).max(1.0) as usize;
                    let (x0, y0) = (x, y);
                    for i in 1..=n {
                        let f = len * i as f64 / n as f64;
                        pts.push([x0 + f * math::cos(h), y0 + f * math::sin(h)]);
                    }
                    x = x0 + len * math::cos(h);
                    y = y0 + len * math::sin(h);
                }
                Piece::Arc { radius, angle } => {
                    let n = math::ceil(radius * math::abs(angle) / spacing).max(1.0) as usize;
                    let side = if angle >= 0.0 { 1.0 } else { -1.0 };
                    let (cx, cy) = (x - side * radius * math::sin(h), y + side * radius * math::cos(h));
                    let start = h - side * FRAC_PI_2;
                    for i in 1..=n {
                        let a = start + angle * i as f64 / n as f64;
                        pts.push([cx + radius * math::cos(a), cy + radius * math::sin(a)]);
                    }
                    h += angle;
                    x = cx + radius * math::cos(start + angle);
                    y = cy + radius * math::sin(start + angle);
                }
            }
        }
        // the last piece should end where the first began
        if let Some(last) = pts.last() {
            if math::hypot(last[0], last[1]) < 1e-6 {
                pts.pop();
            }
        }
        Self::new(pts, half_width, true)
    }

    /// Radius-50 m loop used for the cornering-speed check.
    pub fn reference_circle() -> Self {
        Self::circle(50.0, 1.0, 5.0).expect("valid pinned geometry")
    }

    /// Pinned rounded-rectangle circuit (240 m × 120 m) with four different
    /// corner radii (50, 25, 40 and 30 m), half-width 5 m, lap ≈ 658 m.
    pub fn reference_circuit() -> Self {
        let (w, h) = (240.0, 120.0);
        let r = [50.0, 25.0, 40.0, 30.0];
        let q = PI / 2.0;
        let pieces = [
            Piece::Straight(w - r[0] - r[1]),
            Piece::Arc { radius: r[1], angle: q },
            Piece::Straight(h - r[1] - r[2]),
            Piece::Arc { radius: r[2], angle: q },
            Piece::Straight(w - r[2] - r[3]),
            Piece::Arc { radius: r[3], angle: q },
            Piece::Straight(h - r[3] - r[0]),
            Piece::Arc { radius: r[0], angle: q },
        ];
        Self::from_pieces(&pieces, 1.0, 5.0).expect("valid pinned geometry")
    }
}

/// A building block of [`Track::from_pieces`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    Straight(f64),
    /// Positive angle turns left.
    Arc {
        radius: f64,
        angle: f64,
    },
}
