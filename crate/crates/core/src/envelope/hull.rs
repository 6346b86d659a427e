use alloc::vec::Vec;

use super::EnvelopeError;

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull (Andrew's monotone chain). Collinear points
/// on hull edges are dropped, so every returned vertex is a strict corner.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, EnvelopeError> {
    if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(EnvelopeError::NonFinite);
    }
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Err(EnvelopeError::Degenerate);
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &[f64; 2]> = if pass == 0 { &mut pts.iter() } else { &mut pts.iter().rev() };
        for p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        // the chain's last point starts the next chain
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(EnvelopeError::Degenerate);
    }
    Ok(hull)
}

/// Whether `p` lies inside or on the counter-clockwise polygon `hull`, with
/// a distance tolerance `tol`.
pub fn point_in_hull(hull: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    let n = hull.len();
    (0..n).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let len = crate::math::hypot(b[0] - a[0], b[1] - a[1]);
        cross(a, b, p) >= -tol * len
    })
}
