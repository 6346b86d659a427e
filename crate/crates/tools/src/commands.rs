//! The five subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use vdyn_core::dynamics::BodyState;
use vdyn_core::envelope::{build_envelope, convex_hull_2d, EnvelopeError};
use vdyn_core::integrator_model::{is_feasible, PlanControl};
use vdyn_core::planner::{metrics, run_closed_loop, Clock, Metrics, PlanLog, PlannerModel};
use vdyn_core::sampler::{feasible_sample, FeasibleSet, SamplerError};
use vdyn_core::EnvelopeModel;

use crate::config::{ModelChoice, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, fmt_num};

/// Planner timing from the process clock.
pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn say(report: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(report, "{line}").map_err(|e| CliError::Config(format!("cannot write report: {e}")))
}

/// Area of the convex hull of the `(a_X, a_Y)` points; zero when they are
/// degenerate.
pub fn hull_area(points: &[[f64; 2]]) -> f64 {
    let Ok(hull) = convex_hull_2d(points) else {
        return 0.0;
    };
    let n = hull.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (hull[i], hull[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

/// File name of the samples drawn at one grid point.
pub fn sample_file_name(v_x0: f64, v_y0: f64, mu: f64) -> String {
    format!("samples_vx{}_vy{}_mu{}.csv", fmt_num(v_x0), fmt_num(v_y0), fmt_num(mu))
}

/// Runs the sampling campaign on a thread pool. Sample `i` always uses the
/// random stream `i`, so the result is identical for any thread count.
pub fn sample_grid_point(cfg: &RunConfig, v_x0: f64, v_y0: f64, mu: f64) -> Result<FeasibleSet> {
    let p = cfg.vehicle.with_mu(mu);
    let xi0 = BodyState::rolling(v_x0, v_y0, &p);
    let results: Vec<_> =
        (0..cfg.sampling.n).into_par_iter().map(|i| feasible_sample(&xi0, &cfg.sampling, &p, i)).collect();
    let mut set = FeasibleSet { samples: Vec::with_capacity(results.len()), skipped: Vec::new() };
    for r in results {
        match r {
            Ok(s) => set.samples.push(s),
            Err(SamplerError::Rollout { index, .. } | SamplerError::NonFinite { index }) => set.skipped.push(index),
            Err(e) => return Err(CliError::Numeric(e.to_string())),
        }
    }
    Ok(set)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// `sample`: one CSV per `(v_x0, v_y0, μ)` grid point.
pub fn sample(cfg: &RunConfig, threads: Option<usize>, report: &mut dyn Write) -> Result<Vec<PathBuf>> {
    cfg.sampling.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let out = cfg.ensure_out()?;
    let pool = thread_pool(threads)?;
    let mut written = Vec::new();
    for (v_x0, v_y0, mu) in cfg.sampling.grid.points() {
        let set = pool.install(|| sample_grid_point(cfg, v_x0, v_y0, mu))?;
        if set.samples.is_empty() {
            return Err(CliError::Numeric(format!("every rollout diverged at v_x0={v_x0} v_y0={v_y0} mu={mu}")));
        }
        let path = out.join(sample_file_name(v_x0, v_y0, mu));
        formats::write_samples(&path, &set.samples)?;
        let pts: Vec<[f64; 2]> = set.samples.iter().map(|s| [s.a_x, s.a_y]).collect();
        say(
            report,
            format_args!(
                "v_x0={} v_y0={} mu={}: {} samples, {} skipped, hull area {} (m/s²)² -> {}",
                fmt_num(v_x0),
                fmt_num(v_y0),
                fmt_num(mu),
                set.samples.len(),
                set.skipped.len(),
                fmt_num(hull_area(&pts)),
                path.display()
            ),
        )?;
        written.push(path);
    }
    Ok(written)
}

fn classify(e: EnvelopeError) -> CliError {
    match e {
        EnvelopeError::Stage { source, .. } if matches!(*source, EnvelopeError::TooFewSpeeds { .. }) => {
            CliError::Config(format!("inputs cover too few speeds: {source}"))
        }
        EnvelopeError::Config(_) => CliError::Config(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}

/// The quadratic a_X lower bound needs this many distinct initial speeds.
pub const MIN_FIT_SPEEDS: usize = 3;

/// `fit`: pools sample CSVs and writes `envelope.toml`.
pub fn fit(cfg: &RunConfig, inputs: &[PathBuf], report: &mut dyn Write) -> Result<PathBuf> {
    if inputs.is_empty() {
        return Err(CliError::Config("fit needs at least one sample CSV".into()));
    }
    let mut samples = Vec::new();
    for path in inputs {
        samples.extend(formats::read_samples(path)?);
    }
    let mut speeds: Vec<f64> = samples.iter().map(|s| s.v_x0).collect();
    speeds.sort_by(f64::total_cmp);
    speeds.dedup();
    if speeds.len() < MIN_FIT_SPEEDS {
        return Err(CliError::Config(format!(
            "the a_X bounds need samples from at least {MIN_FIT_SPEEDS} initial speeds, got {} distinct",
            speeds.len()
        )));
    }
    let fit = build_envelope(&samples, &cfg.fit).map_err(classify)?;
    let out = cfg.ensure_out()?.join("envelope.toml");
    formats::write_envelope(&out, &fit.model)?;
    let m = &fit.model;
    say(report, format_args!("{} samples, {} hull vertices", samples.len(), fit.hull_vertices))?;
    say(report, format_args!("alpha = {}  beta = {}", fmt_num(m.alpha), fmt_num(m.beta)))?;
    for (row, b) in m.a.iter().zip(&m.b) {
        say(
            report,
            format_args!("  [{}, {}, {}] · a <= {}", fmt_num(row[0]), fmt_num(row[1]), fmt_num(row[2]), fmt_num(*b)),
        )?;
    }
    say(
        report,
        format_args!(
            "a_X min(v) = {} + {}·v + {}·v²;  a_X max(v) = {} + {}·v",
            fmt_num(m.ax_min_poly[0]),
            fmt_num(m.ax_min_poly[1]),
            fmt_num(m.ax_min_poly[2]),
            fmt_num(m.ax_max_poly[0]),
            fmt_num(m.ax_max_poly[1])
        ),
    )?;
    say(report, format_args!("containment {} -> {}", fmt_num(fit.containment), out.display()))?;
    Ok(out)
}

/// `check`: whether `a = (a_X, a_Y, a_ψ)` is admissible at speed `v_x`. An
/// infeasible point is an error listing every violated constraint.
pub fn check(env: &EnvelopeModel, a: [f64; 3], v_x: f64, report: &mut dyn Write) -> Result<()> {
    if !(a.iter().all(|x| x.is_finite()) && v_x.is_finite()) {
        return Err(CliError::Config("acceleration and speed must be finite".into()));
    }
    let f = is_feasible(env, &PlanControl::from_array(a), v_x);
    let mut violated = Vec::new();
    let mut line = |name: String, slack: f64| -> Result<()> {
        let mark = if slack < 0.0 { "VIOLATED" } else { "ok" };
        if slack < 0.0 {
            violated.push(format!("{name} by {}", fmt_num(-slack)));
        }
        say(report, format_args!("  {name:<28} slack {:>14}  {mark}", fmt_num(slack)))
    };
    line("ellipse".into(), f.ellipse)?;
    line(format!("a_X >= a_X min({})", fmt_num(v_x)), f.ax_min)?;
    line(format!("a_X <= a_X max({})", fmt_num(v_x)), f.ax_max)?;
    for (i, (row, slack)) in env.a.iter().zip(f.rows).enumerate() {
        let name = format!("row {} [{}, {}, {}]", i + 1, fmt_num(row[0]), fmt_num(row[1]), fmt_num(row[2]));
        line(name, slack)?;
    }
    if f.feasible {
        say(report, format_args!("feasible"))
    } else {
        Err(CliError::Infeasible(format!("infeasible: {}", violated.join("; "))))
    }
}

/// Runs one closed loop with the configured planner and track.
pub fn closed_loop(cfg: &RunConfig, model: ModelChoice, clock: &mut dyn Clock) -> Result<PlanLog> {
    let p = &cfg.planner;
    let selector = match model {
        ModelChoice::Envelope => PlannerModel::Envelope(&p.envelope),
        ModelChoice::Kinematic => PlannerModel::Bicycle(&p.bicycle),
    };
    run_closed_loop(selector, &p.track, &p.obstacles, &p.optimizer, &p.closed_loop, clock).map_err(|e| match e {
        vdyn_core::planner::PlanError::Config(_) => CliError::Config(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    })
}

fn summary_line(report: &mut dyn Write, name: &str, m: &Metrics, failures: usize) -> Result<()> {
    let opt = |x: Option<f64>, scale: f64| x.map_or_else(|| "-".to_owned(), |v| format!("{:.2}", v * scale));
    say(
        report,
        format_args!(
            "{name:<10} {:>14.3} {:>14.3} {:>14.3} {:>10} {:>16} {:>9}",
            m.avg_solve_time * 1e3,
            m.rms_lateral_error,
            m.max_lateral_error,
            opt(m.lap_time, 1.0),
            opt(m.min_corner_speed, 1.0),
            failures
        ),
    )
}

fn table_header(report: &mut dyn Write) -> Result<()> {
    say(
        report,
        format_args!(
            "{:<10} {:>14} {:>14} {:>14} {:>10} {:>16} {:>9}",
            "model", "avg solve ms", "rms lat err m", "max lat err m", "lap s", "min corner m/s", "failures"
        ),
    )
}

fn planner_failure(name: &str, log: &PlanLog) -> Option<String> {
    let n = log.failures();
    (n > 0).then(|| format!("{name} planner failed on {n} of {} ticks", log.ticks.len()))
}

/// `plan`: one closed-loop run; writes `planlog_<model>.csv` and
/// `metrics_<model>.csv`.
pub fn plan(cfg: &RunConfig, model: ModelChoice, clock: &mut dyn Clock, report: &mut dyn Write) -> Result<PathBuf> {
    let out = cfg.ensure_out()?.to_path_buf();
    let name = model_name(model);
    let log = closed_loop(cfg, model, clock)?;
    let m = metrics(&log, &cfg.planner.track);
    let path = out.join(format!("planlog_{name}.csv"));
    formats::write_plan_log(&path, &log)?;
    formats::write_metrics(&out.join(format!("metrics_{name}.csv")), &[(name, &m, log.failures())])?;
    table_header(report)?;
    summary_line(report, name, &m, log.failures())?;
    say(report, format_args!("-> {}", path.display()))?;
    match planner_failure(name, &log) {
        Some(msg) => Err(CliError::Infeasible(msg)),
        None => Ok(path),
    }
}

pub fn model_name(model: ModelChoice) -> &'static str {
    match model {
        ModelChoice::Envelope => "envelope",
        ModelChoice::Kinematic => "kinematic",
    }
}

/// Files written by `compare`.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub logs: [PathBuf; 2],
    pub metrics: PathBuf,
    pub speed_profile: PathBuf,
    pub table: Vec<(String, Metrics, usize)>,
}

/// `compare`: both planners on the same track; writes both plan logs, a
/// metrics table and the speed profiles side by side.
pub fn compare(cfg: &RunConfig, clock: &mut dyn Clock, report: &mut dyn Write) -> Result<Comparison> {
    let out = cfg.ensure_out()?.to_path_buf();
    let mut table = Vec::new();
    let mut logs = Vec::new();
    let mut failures = Vec::new();
    for model in [ModelChoice::Envelope, ModelChoice::Kinematic] {
        let name = model_name(model);
        let log = closed_loop(cfg, model, clock)?;
        let path = out.join(format!("planlog_{name}.csv"));
        formats::write_plan_log(&path, &log)?;
        failures.extend(planner_failure(name, &log));
        table.push((name.to_owned(), metrics(&log, &cfg.planner.track), log.failures()));
        logs.push(path);
    }
    let rows: Vec<(&str, &Metrics, usize)> = table.iter().map(|(n, m, f)| (n.as_str(), m, *f)).collect();
    let metrics_path = out.join("metrics.csv");
    formats::write_metrics(&metrics_path, &rows)?;
    let profiles: Vec<(&str, &Metrics)> = table.iter().map(|(n, m, _)| (n.as_str(), m)).collect();
    let profile_path = out.join("speed_profile.csv");
    formats::write_speed_profiles(&profile_path, &profiles)?;
    table_header(report)?;
    for (name, m, f) in &table {
        summary_line(report, name, m, *f)?;
    }
    say(report, format_args!("-> {} and {}", metrics_path.display(), profile_path.display()))?;
    if !failures.is_empty() {
        return Err(CliError::Infeasible(failures.join("; ")));
    }
    let [a, b]: [PathBuf; 2] = logs.try_into().expect("two runs");
    Ok(Comparison { logs: [a, b], metrics: metrics_path, speed_profile: profile_path, table })
}

/// Whether `path` names an existing file, for argument validation.
pub fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{}: no such file", path.display())))
    }
}
