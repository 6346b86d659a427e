//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Run with `cargo test -p vdyn-criteria`. Wall-clock budgets are
//! measured in the optimized test profile.

use std::f64::consts::FRAC_PI_4;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vdyn::commands::{self, WallClock};
use vdyn::config::{ModelChoice, RunConfig};
use vdyn::formats;
use vdyn_core::dynamics::{simulate, tire_forces, BodyState, TireParams};
use vdyn_core::envelope::{build_envelope, convex_hull_2d, point_in_hull, synthetic_cloud, FitConfig, SyntheticCloud};
use vdyn_core::integrator_model::{is_feasible, PlanControl};
use vdyn_core::planner::{metrics, FrozenClock, Track};
use vdyn_core::sampler::{density_histogram, draw_control, feasible_set, HistogramSpec};
use vdyn_core::{AccelSample, EnvelopeModel, SamplingConfig, VehicleParams};

const G: f64 = 9.80665;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn sampling(n: usize, speeds: &[f64], seed: u64) -> SamplingConfig {
    let mut cfg = SamplingConfig { n, seed, ..SamplingConfig::default() };
    cfg.grid.v_x0 = speeds.to_vec();
    cfg
}

fn sample_at(v_x0: f64, psi0: f64, mu: f64, cfg: &SamplingConfig) -> Vec<AccelSample> {
    let p = VehicleParams::berline().with_mu(mu);
    let mut xi0 = BodyState::rolling(v_x0, 0.0, &p);
    xi0.psi = psi0;
    let set = feasible_set(&xi0, cfg, &p).expect("sampling");
    assert!(set.skipped.is_empty(), "{} rollouts diverged", set.skipped.len());
    set.samples
}

fn planar(samples: &[AccelSample]) -> Vec<[f64; 2]> {
    samples.iter().map(|s| [s.a_x, s.a_y]).collect()
}

fn friction_circle() -> Outcome {
    let tire = TireParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        let tau = rng.random_range(-1.0..=1.0);
        let alpha = rng.random_range(-1.5..=1.5);
        let f_z = rng.random_range(0.0..=20_000.0);
        let mu = rng.random_range(0.05..=1.5);
        let (f_x, f_y) = tire_forces(tau, alpha, f_z, mu, &tire);
        worst = worst.max(f_x.hypot(f_y) - mu * f_z);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 5.0,
        format!("1e5 draws, max(|F| - mu F_z) = {worst:.3e} N (<= 1e-9), {secs:.3} s (< 5 s)"),
    )
}

fn symmetry_and_yaw_invariance() -> Outcome {
    let p = VehicleParams::berline();
    let start = Instant::now();
    let mut worst_mirror = 0.0f64;
    for i in 0..20 {
        let u = draw_control(99, i, &p);
        let s0 = BodyState::rolling(5.0 + 2.0 * i as f64, 0.0, &p);
        let a = simulate(&s0, &u, 0.1, 1e-3, &p).expect("rollout");
        let b = simulate(&s0, &u.mirrored(), 0.1, 1e-3, &p).expect("rollout");
        for (sa, sb) in a.iter().zip(&b) {
            for (x, y) in [(sa.y, sb.y), (sa.psi, sb.psi), (sa.v_y, sb.v_y), (sa.theta, sb.theta)] {
                worst_mirror = worst_mirror.max((x + y).abs() / x.abs().max(y.abs()).max(1e-12));
            }
        }
    }

    let cfg = sampling(1_000, &[10.0, 20.0, 30.0], 4);
    let mut straight = Vec::new();
    let mut rotated = Vec::new();
    for &v in &cfg.grid.v_x0 {
        straight.extend(sample_at(v, 0.0, 1.0, &cfg));
        rotated.extend(sample_at(v, FRAC_PI_4, 1.0, &cfg).into_iter().map(|s| {
            let (sn, cs) = FRAC_PI_4.sin_cos();
            AccelSample { a_x: cs * s.a_x + sn * s.a_y, a_y: -sn * s.a_x + cs * s.a_y, ..s }
        }));
    }
    let fit = FitConfig::default();
    let (e0, e1) = match (build_envelope(&straight, &fit), build_envelope(&rotated, &fit)) {
        (Ok(a), Ok(b)) => (a.model, b.model),
        (a, b) => return outcome(false, format!("envelope fit failed: {:?} / {:?}", a.err(), b.err())),
    };
    let flat = |m: &EnvelopeModel| -> Vec<f64> {
        let mut v = vec![m.alpha, m.beta];
        v.extend(m.a.iter().flatten());
        v.extend(m.b);
        v.extend(m.ax_min_poly);
        v.extend(m.ax_max_poly);
        v
    };
    let worst_env = flat(&e0).iter().zip(flat(&e1)).map(|(x, y)| (x - y).abs() / x.abs().max(1.0)).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_mirror <= 1e-9 && worst_env <= 1e-6 && secs < 60.0,
        format!(
            "mirror rel err {worst_mirror:.2e} (<= 1e-9), envelope at psi0 = pi/4 rotated back rel err {worst_env:.2e} (<= 1e-6), {secs:.1} s (< 60 s)"
        ),
    )
}

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Clouds {
    high: Vec<AccelSample>,
    low: Vec<AccelSample>,
    secs: f64,
}

fn draw_clouds() -> Clouds {
    let cfg = sampling(10_000, &[20.0], 0);
    let start = Instant::now();
    let high = sample_at(20.0, 0.0, 1.0, &cfg);
    let low = sample_at(20.0, 0.0, 0.3, &cfg);
    Clouds { high, low, secs: start.elapsed().as_secs_f64() }
}

fn sampling_fidelity(c: &Clouds) -> Outcome {
    let radius = |s: &[AccelSample]| s.iter().map(|s| s.a_x.hypot(s.a_y)).fold(0.0, f64::max);
    let r_high = radius(&c.high) / G;
    let r_low = radius(&c.low) / (0.3 * G);
    let (Ok(hull_high), Ok(hull_low)) = (convex_hull_2d(&planar(&c.high)), convex_hull_2d(&planar(&c.low))) else {
        return outcome(false, "degenerate hull".into());
    };
    let area = |h: &[[f64; 2]]| {
        0.5 * (0..h.len()).map(|i| h[i][0] * h[(i + 1) % h.len()][1] - h[(i + 1) % h.len()][0] * h[i][1]).sum::<f64>()
    };
    let convex_shape = area(&hull_high) > 0.0 && point_in_hull(&hull_high, [0.0, 0.0], -1e-6);
    let nested = hull_low.iter().all(|v| point_in_hull(&hull_high, *v, 1e-9));
    outcome(
        convex_shape && (0.8..=1.2).contains(&r_high) && nested && c.secs < 300.0,
        format!(
            "mu=1 hull area {:.1} with origin inside, max |a| = {r_high:.3} g (in [0.8, 1.2]), mu=0.3 max |a| = {r_low:.3} mu g, \
             mu=0.3 hull inside mu=1 hull: {nested}, 2x1e4 draws in {:.1} s (< 300 s)",
            area(&hull_high),
            c.secs
        ),
    )
}

fn clustering(c: &Clouds) -> Outcome {
    let ratio = |s: &[AccelSample]| {
        let spec = HistogramSpec::covering(s, 20, 20).expect("histogram");
        density_histogram(s, &spec).expect("histogram").concentration_ratio()
    };
    let (high, low) = (ratio(&c.high), ratio(&c.low));
    let factor = low / high;
    outcome(
        factor >= 2.0,
        format!("max-bin / mean occupied bin on 20x20: mu=0.3 {low:.2}, mu=1 {high:.2}, factor {factor:.2} (>= 2)"),
    )
}

fn fit_recovery() -> Outcome {
    let reference = EnvelopeModel::reference();
    let recipe = SyntheticCloud {
        speeds: (0..9).map(|i| 5.0 * i as f64).collect(),
        per_speed: 20_000,
        face_fraction: 0.01,
        seed: 1,
    };
    let fit = match build_envelope(&synthetic_cloud(&reference, &recipe), &FitConfig::default()) {
        Ok(f) => f.model,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let row_err = (0..6)
        .map(|i| {
            let f: Vec<f64> = fit.a[i].iter().copied().chain([fit.b[i]]).collect();
            let r: Vec<f64> = reference.a[i].iter().copied().chain([reference.b[i]]).collect();
            let num = f.iter().zip(&r).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            num / r.iter().map(|y| y * y).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    let ab_err = ((fit.alpha / reference.alpha - 1.0).abs()).max((fit.beta / reference.beta - 1.0).abs());
    let poly_err = fit
        .ax_min_poly
        .iter()
        .zip(reference.ax_min_poly)
        .chain(fit.ax_max_poly.iter().zip(reference.ax_max_poly))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    outcome(
        row_err <= 0.05 && ab_err <= 0.01 && poly_err <= 1e-6,
        format!("rows rel err {row_err:.4} (<= 0.05), alpha/beta rel err {ab_err:.4} (<= 0.01), polynomials abs err {poly_err:.1e} (<= 1e-6)"),
    )
}

fn oracle_cases() -> Outcome {
    let env = EnvelopeModel::reference();
    let origin = is_feasible(&env, &PlanControl::new(0.0, 0.0, 0.0), 20.0);
    let traction = is_feasible(&env, &PlanControl::new(4.22, 0.0, 0.0), 20.0);
    let lateral = is_feasible(&env, &PlanControl::new(0.0, 9.0, 0.0), 20.0);
    let traction_only = !traction.feasible
        && env.ax_max(20.0) == 4.12
        && rel_close(traction.ax_max, -0.1, 1e-12)
        && traction.rows.iter().all(|s| *s >= 0.0)
        && traction.ellipse >= 0.0;
    let violated: Vec<usize> = (0..6).filter(|i| lateral.rows[*i] < 0.0).collect();
    let row = violated.first().copied().unwrap_or(usize::MAX);
    let lhs = if row < 6 { env.a[row][1] * 9.0 } else { f64::NAN };
    let lateral_only = !lateral.feasible
        && violated.len() == 1
        && env.a[row][1] == 0.57
        && rel_close(lhs, 5.13, 1e-12)
        && env.b[row] == 5.1
        && lateral.ax_max >= 0.0
        && lateral.ax_min >= 0.0;
    outcome(
        origin.feasible && traction_only && lateral_only,
        format!(
            "(0,0,0)@20 feasible: {}; (4.22,0,0)@20 blocked only by a_X max = {}; (0,9,0)@20 blocked only by row {} ({lhs:.2} > 5.1)",
            origin.feasible,
            env.ax_max(20.0),
            row + 1
        ),
    )
}

fn planner_physics() -> Outcome {
    let env = EnvelopeModel::reference();
    let mut cfg = RunConfig::default();

    cfg.planner.track = Track::reference_circle();
    cfg.planner.closed_loop.ticks = 150;
    cfg.planner.closed_loop.stop_after_lap = false;
    let circle = match commands::closed_loop(&cfg, ModelChoice::Envelope, &mut FrozenClock) {
        Ok(l) => l,
        Err(e) => return outcome(false, format!("circle run failed: {e}")),
    };
    let steady = circle.ticks[circle.ticks.len() / 2..].iter().map(|t| t.state.speed()).fold(0.0, f64::max);
    let bound = (env.beta * 50.0).sqrt() * 1.05;

    cfg.planner.track = Track::straight(400.0, 1.0, 5.0).expect("straight");
    cfg.planner.closed_loop.ticks = 3;
    cfg.planner.closed_loop.start_s = 0.0;
    let straight = match commands::closed_loop(&cfg, ModelChoice::Envelope, &mut FrozenClock) {
        Ok(l) => l,
        Err(e) => return outcome(false, format!("straight run failed: {e}")),
    };
    let first = straight.ticks[0].control[0];
    let limit = env.ax_max(straight.ticks[0].state.speed());
    let accel_err = (first / limit - 1.0).abs();

    let cfg = RunConfig::default();
    let start = Instant::now();
    let lap = commands::closed_loop(&cfg, ModelChoice::Envelope, &mut WallClock::new());
    let secs = start.elapsed().as_secs_f64();
    let lap_time = lap.as_ref().ok().and_then(|l| l.lap_time);
    outcome(
        steady <= bound && accel_err <= 0.02 && lap_time.is_some() && secs < 60.0,
        format!(
            "R=50 steady speed {steady:.2} m/s (<= {bound:.2}); straight first u_x {first:.3} vs a_X max {limit:.3} ({:.2}% <= 2%); \
             circuit lap {} in {secs:.1} s wall (< 60 s)",
            accel_err * 100.0,
            lap_time.map_or("not completed".to_owned(), |t| format!("{t:.1} s"))
        ),
    )
}

fn comparison() -> Outcome {
    let cfg = RunConfig::default();
    let mut rows = Vec::new();
    for model in [ModelChoice::Envelope, ModelChoice::Kinematic] {
        match commands::closed_loop(&cfg, model, &mut WallClock::new()) {
            Ok(log) => rows.push((commands::model_name(model), metrics(&log, &cfg.planner.track), log.failures())),
            Err(e) => return outcome(false, format!("{} run failed: {e}", commands::model_name(model))),
        }
    }
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("metrics.csv");
    let table: Vec<_> = rows.iter().map(|(n, m, f)| (*n, m, *f)).collect();
    formats::write_metrics(&path, &table).expect("metrics table");
    let text = std::fs::read_to_string(&path).expect("metrics table");
    let populated = text.lines().count() == 3
        && text.lines().skip(1).all(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            cells[1..4].iter().all(|c| c.parse::<f64>().is_ok_and(|v| v.is_finite()))
                && cells[1].parse::<f64>().unwrap() > 0.0
        });
    let (env, kin) = (&rows[0].1, &rows[1].1);
    let corner = |m: &vdyn_core::planner::Metrics| m.min_corner_speed.unwrap_or(f64::NAN);
    let laps = env.lap_time.is_some() && kin.lap_time.is_some();
    outcome(
        laps && populated && corner(env) >= corner(kin) && rows.iter().all(|r| r.2 == 0),
        format!(
            "min corner speed envelope {:.2} >= kinematic {:.2} m/s; laps {:?} / {:?} s; \
             solve ms {:.1} / {:.1}, rms lateral error {:.2} / {:.2} m (reported only); table populated: {populated}",
            corner(env),
            corner(kin),
            env.lap_time,
            kin.lap_time,
            env.avg_solve_time * 1e3,
            kin.avg_solve_time * 1e3,
            env.rms_lateral_error,
            kin.rms_lateral_error
        ),
    )
}

fn main() -> ExitCode {
    let clouds = draw_clouds();
    let checks: [Check<'_>; 8] = [
        ("friction circle", Box::new(friction_circle)),
        ("mirror symmetry and yaw invariance", Box::new(symmetry_and_yaw_invariance)),
        ("sampled envelope shape and mu ordering", Box::new(|| sampling_fidelity(&clouds))),
        ("low-friction clustering", Box::new(|| clustering(&clouds))),
        ("envelope fit recovery", Box::new(fit_recovery)),
        ("admissibility oracle cases", Box::new(oracle_cases)),
        ("planner physics", Box::new(planner_physics)),
        ("envelope vs kinematic comparison", Box::new(comparison)),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria pass", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
