use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dynamics::Control;
use crate::integrator_model::{is_feasible, PlanControl};

fn sample(a_x: f64, a_y: f64, a_psi: f64, v_x0: f64) -> AccelSample {
    AccelSample { a_x, a_y, a_psi, control: Control::new(0.0, 0.0, 0.0), v_x0, v_y0: 0.0, mu: 1.0 }
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1]).sum::<f64>()
}

fn reference_cloud(per_speed: usize, seed: u64) -> Vec<AccelSample> {
    let recipe =
        SyntheticCloud { speeds: (0..9).map(|i| 5.0 * i as f64).collect(), per_speed, face_fraction: 0.01, seed };
    synthetic_cloud(&EnvelopeModel::reference(), &recipe)
}

/// Relative distance of `[A_i, b_i]` rows after both are scaled by the
/// reference row's normalizing coefficient.
fn row_error(fit: &EnvelopeModel, reference: &EnvelopeModel, i: usize) -> f64 {
    let f: Vec<f64> = fit.a[i].iter().chain([fit.b[i]].iter()).copied().collect();
    let r: Vec<f64> = reference.a[i].iter().chain([reference.b[i]].iter()).copied().collect();
    let num: f64 = f.iter().zip(&r).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = r.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

// ---------------------------------------------------------------- hull

#[test]
fn square_with_center_gives_four_corners() {
    let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
    let hull = convex_hull_2d(&pts).unwrap();
    assert_eq!(hull.len(), 4);
    for c in &pts[..4] {
        assert!(hull.contains(c));
    }
    assert!(signed_area(&hull) > 0.0, "hull must be counter-clockwise");
}

#[test]
fn triangle_is_its_own_hull() {
    let pts = [[0.0, 0.0], [2.0, 0.5], [0.3, 1.7]];
    let hull = convex_hull_2d(&pts).unwrap();
    assert_eq!(hull.len(), 3);
    assert!((signed_area(&hull) - signed_area(&pts).abs()).abs() < 1e-15);
}

#[test]
fn collinear_points_are_degenerate() {
    let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
    assert_eq!(convex_hull_2d(&pts), Err(EnvelopeError::Degenerate));
    assert_eq!(convex_hull_2d(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]), Err(EnvelopeError::Degenerate));
}

#[test]
fn non_finite_points_are_rejected() {
    let pts = [[0.0, 0.0], [1.0, f64::NAN], [0.0, 1.0]];
    assert_eq!(convex_hull_2d(&pts), Err(EnvelopeError::NonFinite));
}

#[test]
fn edge_midpoints_are_not_vertices() {
    let pts = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    assert_eq!(convex_hull_2d(&pts).unwrap().len(), 4);
}

#[test]
fn disk_cloud_is_contained_in_its_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<[f64; 2]> = (0..1000)
        .map(|_| {
            let r = rng.random_range(0.0f64..1.0).sqrt();
            let t = rng.random_range(0.0..core::f64::consts::TAU);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    let hull = convex_hull_2d(&pts).unwrap();
    // brute force: every point on the inner side of every hull edge
    for p in &pts {
        for i in 0..hull.len() {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            assert!(cross >= -1e-12);
        }
    }
    for v in &hull {
        assert!(pts.contains(v));
    }
}

proptest! {
    #[test]
    fn hull_ignores_input_order(mut pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60), seed in 0u64..1000) {
        let a: Vec<[f64; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..pts.len()).rev() {
            let j = rng.random_range(0..=i);
            pts.swap(i, j);
        }
        let b: Vec<[f64; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
        prop_assert_eq!(convex_hull_2d(&a), convex_hull_2d(&b));
    }

    #[test]
    fn hull_contains_every_input(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..60)) {
        let a: Vec<[f64; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
        if let Ok(hull) = convex_hull_2d(&a) {
            for p in &a {
                prop_assert!(point_in_hull(&hull, *p, 1e-9));
            }
        }
    }
}

// ---------------------------------------------------------------- ellipse

fn ellipse_points(alpha: f64, beta: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let t = core::f64::consts::TAU * i as f64 / n as f64;
            [alpha * t.cos(), beta * t.sin()]
        })
        .collect()
}

#[test]
fn exact_ellipse_is_recovered() {
    let hull = convex_hull_2d(&ellipse_points(9.4, 9.0, 200)).unwrap();
    let (a, b) = fit_ellipse(&hull, (-7.52, 7.52)).unwrap();
    assert!((a - 9.4).abs() < 1e-6 && (b - 9.0).abs() < 1e-6, "{a} {b}");
}

#[test]
fn unit_circle_fits_unit_axes() {
    let hull = convex_hull_2d(&ellipse_points(1.0, 1.0, 64)).unwrap();
    let (a, b) = fit_ellipse(&hull, (-1.0, 1.0)).unwrap();
    assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
}

#[test]
fn noisy_ellipse_is_recovered_within_two_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let pts: Vec<[f64; 2]> = ellipse_points(9.4, 9.0, 400)
            .into_iter()
            .map(|p| {
                let s = 1.0 + rng.random_range(-0.01..=0.01);
                [p[0] * s, p[1] * s]
            })
            .collect();
        let hull = convex_hull_2d(&pts).unwrap();
        let (a, b) = fit_ellipse(&hull, (-7.52, 7.52)).unwrap();
        assert!((a / 9.4 - 1.0).abs() < 0.02 && (b / 9.0 - 1.0).abs() < 0.02, "trial {trial}: {a} {b}");
    }
}

#[test]
fn ellipse_fit_needs_both_lateral_signs_and_four_vertices() {
    let upper = [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.8]];
    assert_eq!(fit_ellipse(&upper, (-1.0, 1.0)), Err(EnvelopeError::OneSided));
    let diamond = [[-1.0, 0.0], [0.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    assert_eq!(fit_ellipse(&diamond, (-0.5, 0.5)), Err(EnvelopeError::TooFewVertices { got: 2 }));
}

// ---------------------------------------------------------------- halfspaces

#[test]
fn reference_polytope_is_recovered_within_five_percent() {
    let cloud = reference_cloud(20_000, 5);
    let cfg = FitConfig::default();
    let mut pooled = cloud.clone();
    pooled.extend(cloud.iter().map(AccelSample::mirrored));
    let (a, b) = fit_halfspaces(&pooled, &cfg).unwrap();
    let fit = EnvelopeModel { a, b, ..EnvelopeModel::reference() };
    let reference = EnvelopeModel::reference();
    for i in 0..6 {
        let e = row_error(&fit, &reference, i);
        assert!(e < 0.05, "row {i}: {:?} {} (error {e})", fit.a[i], fit.b[i]);
    }
}

#[test]
fn box_cloud_gives_axis_aligned_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples: Vec<AccelSample> = (0..20_000)
        .map(|_| sample(rng.random_range(-6.0..=3.0), rng.random_range(-5.0..=5.0), rng.random_range(-2.0..=2.0), 10.0))
        .collect();
    let (a, b) = fit_halfspaces(&samples, &FitConfig::default()).unwrap();
    assert!(a[0][0].abs() < 0.05 && a[1][0].abs() < 0.05, "{:?}", a);
    assert_eq!(a[2], [0.0, 1.0, 0.0]);
    assert_eq!(a[3], [0.0, -1.0, 0.0]);
    assert!(a[4][1].abs() < 0.05 && a[4][2] == 1.0, "{:?}", a[4]);
    assert!((b[0] - 5.0).abs() < 0.05 && (b[2] - 5.0).abs() < 0.05 && (b[4] - 2.0).abs() < 0.05, "{:?}", b);
}

#[test]
fn fitted_polytope_contains_the_calibration_cloud() {
    let mut cloud = reference_cloud(5_000, 21);
    cloud.extend(cloud.clone().iter().map(AccelSample::mirrored));
    let (a, b) = fit_halfspaces(&cloud, &FitConfig::default()).unwrap();
    let inside =
        cloud.iter().filter(|s| (0..6).all(|i| a[i][0] * s.a_x + a[i][1] * s.a_y + a[i][2] * s.a_psi <= b[i])).count();
    assert!(inside as f64 >= 0.995 * cloud.len() as f64, "{inside} of {}", cloud.len());
}

#[test]
fn mirrored_pool_gives_paired_rows_with_equal_offsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let raw: Vec<AccelSample> = (0..4000)
        .map(|_| {
            let y = rng.random_range(-4.0..=6.0);
            sample(rng.random_range(-6.0..=3.0), y, 0.4 * y + rng.random_range(-1.0..=1.5), 10.0)
        })
        .collect();
    let mut pooled = raw.clone();
    pooled.extend(raw.iter().map(AccelSample::mirrored));
    let (a, b) = fit_halfspaces(&pooled, &FitConfig::default()).unwrap();
    for pair in [(0, 1), (2, 3), (4, 5)] {
        assert_eq!(b[pair.0].to_bits(), b[pair.1].to_bits());
    }
    assert_eq!(a[0], [a[1][0], -a[1][1], a[1][2]]);
    assert_eq!(a[2], a[3].map(|v| -v));
    assert_eq!(a[4], a[5].map(|v| -v));
}

// ---------------------------------------------------------------- a_X bounds

fn extremes_from(min: impl Fn(f64) -> f64, max: impl Fn(f64) -> f64) -> Vec<SpeedExtremes> {
    (1..=8)
        .map(|i| {
            let v = 5.0 * i as f64;
            SpeedExtremes { v_x0: v, ax_min: min(v), ax_max: max(v), count: 1 }
        })
        .collect()
}

#[test]
fn reference_polynomials_are_recovered_from_exact_extremes() {
    let ex = extremes_from(|v| -9.3 - 0.013 * v + 0.00072 * v * v, |v| 4.3 - 0.009 * v);
    let (lo, hi) = fit_ax_bounds_from_extremes(&ex).unwrap();
    let expect_lo = [-9.3, -0.013, 0.00072];
    let expect_hi = [4.3, -0.009];
    for (c, e) in lo.iter().zip(expect_lo) {
        assert!((c - e).abs() < 1e-9, "{lo:?}");
    }
    for (c, e) in hi.iter().zip(expect_hi) {
        assert!((c - e).abs() < 1e-9, "{hi:?}");
    }
}

#[test]
fn speed_independent_extremes_give_flat_polynomials() {
    let ex = extremes_from(|_| -8.0, |_| 3.5);
    let (lo, hi) = fit_ax_bounds_from_extremes(&ex).unwrap();
    assert!((lo[0] + 8.0).abs() < 1e-12 && lo[1].abs() < 1e-12 && lo[2].abs() < 1e-13);
    assert!((hi[0] - 3.5).abs() < 1e-12 && hi[1].abs() < 1e-12);
}

#[test]
fn steady_lateral_limit_is_set_by_the_tightest_row() {
    let m = EnvelopeModel::reference();
    assert!((m.steady_lateral_limit() - 5.1 / 0.57).abs() < 1e-12);
    assert!(is_feasible(&m, &PlanControl::new(0.0, m.steady_lateral_limit(), 0.0), 20.0).feasible);
    let wide = EnvelopeModel { b: [100.0; 6], ..m.clone() };
    assert_eq!(wide.steady_lateral_limit(), m.beta);
}

#[test]
fn reference_bounds_at_twenty_metres_per_second() {
    let m = EnvelopeModel::reference();
    assert!((m.ax_max(20.0) - 4.12).abs() < 1e-12);
    assert!((m.ax_min(20.0) + 9.272).abs() < 1e-12);
}

#[test]
fn bounds_are_clamped_outside_the_calibrated_range() {
    let m = EnvelopeModel::reference();
    assert_eq!(m.ax_max(80.0), m.ax_max(50.0));
    assert_eq!(m.ax_min(-3.0), m.ax_min(0.0));
}

#[test]
fn two_speeds_are_not_enough() {
    let ex = vec![
        SpeedExtremes { v_x0: 5.0, ax_min: -9.0, ax_max: 4.0, count: 1 },
        SpeedExtremes { v_x0: 10.0, ax_min: -9.0, ax_max: 4.0, count: 1 },
        SpeedExtremes { v_x0: 10.0, ax_min: -9.1, ax_max: 4.1, count: 1 },
    ];
    assert_eq!(fit_ax_bounds_from_extremes(&ex), Err(EnvelopeError::TooFewSpeeds { got: 2, need: 3 }));
}

#[test]
fn extremes_group_by_speed_and_take_quantiles() {
    let samples: Vec<AccelSample> =
        (0..=100).flat_map(|i| [sample(i as f64 / 10.0, 0.0, 0.0, 5.0), sample(-(i as f64), 0.0, 0.0, 1.0)]).collect();
    let ex = speed_extremes(&samples, 0.99);
    assert_eq!(ex.len(), 2);
    assert_eq!((ex[0].v_x0, ex[0].count), (1.0, 101));
    assert!((ex[0].ax_min + 99.0).abs() < 1e-12 && (ex[0].ax_max + 1.0).abs() < 1e-12);
    assert!((ex[1].ax_max - 9.9).abs() < 1e-12 && (ex[1].ax_min - 0.1).abs() < 1e-12);
}

#[test]
fn quantile_interpolates_linearly() {
    let v = [3.0, 1.0, 2.0, 4.0];
    assert_eq!(quantile(&v, 0.0), Some(1.0));
    assert_eq!(quantile(&v, 1.0), Some(4.0));
    assert!((quantile(&v, 0.5).unwrap() - 2.5).abs() < 1e-15);
    assert_eq!(quantile(&[], 0.5), None);
}

// ---------------------------------------------------------------- model

#[test]
fn reference_model_is_valid_and_origin_is_feasible_everywhere() {
    let m = EnvelopeModel::reference();
    m.validate().unwrap();
    for i in 0..=50 {
        let r = is_feasible(&m, &PlanControl::ZERO, i as f64);
        assert!(r.feasible && r.worst() > 0.0);
    }
}

#[test]
fn validate_rejects_broken_models() {
    let mut m = EnvelopeModel::reference();
    m.b[3] = 0.0;
    assert!(m.validate().is_err());
    let mut m = EnvelopeModel::reference();
    m.alpha = -1.0;
    assert!(m.validate().is_err());
    let mut m = EnvelopeModel::reference();
    m.ax_max_poly = [0.5, -0.02];
    assert!(m.validate().is_err());
    let mut m = EnvelopeModel::reference();
    m.a[0][1] = f64::NAN;
    assert!(m.validate().is_err());
}

#[test]
fn fit_config_validation() {
    FitConfig::default().validate().unwrap();
    let bad = FitConfig { quantile: 0.3, ..FitConfig::default() };
    assert!(bad.validate().is_err());
    let bad = FitConfig { family_separation_deg: 1.0, ..FitConfig::default() };
    assert!(bad.validate().is_err());
}

// ---------------------------------------------------------------- pipeline

#[test]
fn reference_cloud_reproduces_the_reference_envelope() {
    let cloud = reference_cloud(20_000, 1);
    let fit = build_envelope(&cloud, &FitConfig::default()).unwrap();
    let m = &fit.model;
    let r = EnvelopeModel::reference();
    assert!((m.alpha / r.alpha - 1.0).abs() < 0.01, "alpha {}", m.alpha);
    assert!((m.beta / r.beta - 1.0).abs() < 0.01, "beta {}", m.beta);
    for i in 0..6 {
        assert!(row_error(m, &r, i) < 0.05, "row {i}: {:?} {}", m.a[i], m.b[i]);
    }
    for (c, e) in m.ax_min_poly.iter().zip(r.ax_min_poly) {
        assert!((c - e).abs() < 1e-6, "{:?}", m.ax_min_poly);
    }
    for (c, e) in m.ax_max_poly.iter().zip(r.ax_max_poly) {
        assert!((c - e).abs() < 1e-6, "{:?}", m.ax_max_poly);
    }
    assert!(fit.containment >= 0.99, "containment {}", fit.containment);
}

#[test]
fn empty_input_is_an_error() {
    assert_eq!(build_envelope(&[], &FitConfig::default()), Err(EnvelopeError::Empty));
}

#[test]
fn errors_name_the_failing_stage() {
    let cloud: Vec<AccelSample> = reference_cloud(500, 2).into_iter().filter(|s| s.v_x0 <= 5.0).collect();
    match build_envelope(&cloud, &FitConfig::default()) {
        Err(EnvelopeError::Stage { stage: FitStage::AxBounds, source }) => {
            assert_eq!(*source, EnvelopeError::TooFewSpeeds { got: 2, need: 3 })
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn fitted_envelope_keeps_the_origin_strictly_feasible() {
    let fit = build_envelope(&reference_cloud(3_000, 9), &FitConfig::default()).unwrap();
    for i in 0..=50 {
        assert!(is_feasible(&fit.model, &PlanControl::ZERO, i as f64).worst() > 0.0);
    }
}
