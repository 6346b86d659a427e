//! Receding-horizon planning on a track.
//!
//! Two vehicle models share one horizon optimizer: the double integrator
//! constrained by an [`EnvelopeModel`], and a kinematic bicycle with box
//! bounds. The optimizer maximizes arc-length progress over the horizon
//! with penalties on lateral deviation, track-limit and obstacle
//! violations, side slip and control effort. It runs projected gradient
//! descent with backtracking on the exact rollout cost, so every returned
//! control is admissible at its own predicted state.

mod bicycle;
mod metrics;
mod optimize;
mod track;

pub use bicycle::{kinematic_bicycle_step, BicycleParams, BicycleState};
pub use metrics::{metrics, Metrics};
pub use optimize::Plan;
pub use track::{Obstacle, Piece, Projection, Track, TrackError};

use alloc::vec::Vec;

use crate::envelope::EnvelopeModel;
use crate::integrator_model::{is_feasible, project_feasible, step_2di_with, Coupling, PlanControl, PlanState};
use crate::math;
use optimize::{Guide, HorizonModel, Problem};

/// Gains of the path-following laws that seed the optimizer (1/s).
const HEADING_GAIN: f64 = 2.0;
const YAW_RATE_GAIN: f64 = 4.0;
const SLIP_GAIN: f64 = 2.0;
/// Bisection steps when fitting the longitudinal demand into the envelope.
const PRIORITY_BISECTIONS: usize = 20;
/// Below this speed (m/s) the envelope model's course is taken as its heading.
const GUIDE_COURSE_SPEED: f64 = 0.5;

/// Cost weights of the horizon optimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct Weights {
    /// Reward per metre of arc-length progress at the end of the horizon.
    pub progress: f64,
    /// Per m² of lateral offset from the centerline.
    pub lateral: f64,
    /// Per m² beyond the usable half-width.
    pub wall: f64,
    /// Per m² of obstacle-disc penetration.
    pub obstacle: f64,
    /// Per (m/s)² of body-frame lateral velocity.
    pub slip: f64,
    /// Per (m/s)² of backward velocity.
    pub reverse: f64,
    /// Per squared change of control between consecutive steps.
    pub smoothness: f64,
    /// Quadratic effort weights of the envelope-model controls `(u_x, u_y, u_ψ)`.
    pub effort_envelope: [f64; 3],
    /// Quadratic effort weights of the bicycle controls `(accel, steering)`.
    pub effort_bicycle: [f64; 2],
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            progress: 1.0,
            lateral: 0.02,
            wall: 50.0,
            obstacle: 50.0,
            slip: 0.5,
            reverse: 10.0,
            smoothness: 1e-3,
            effort_envelope: [1e-3, 1e-3, 1e-3],
            effort_bicycle: [1e-3, 0.1],
        }
    }
}

/// Horizon optimizer settings.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct PlanConfig {
    /// Planning horizon (s).
    pub horizon: f64,
    /// Step of the horizon discretization (s).
    pub dt: f64,
    /// Half of the vehicle width (m); shrinks the usable track and inflates
    /// obstacles.
    pub vehicle_half_width: f64,
    pub max_iterations: usize,
    /// Stop once an iteration moves the controls by less than this (RMS).
    pub tolerance: f64,
    pub initial_step: f64,
    /// How the envelope model's controls enter its dynamics.
    pub coupling: Coupling,
    pub weights: Weights,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            horizon: 3.0,
            dt: 0.2,
            vehicle_half_width: 0.9,
            max_iterations: 60,
            tolerance: 1e-4,
            initial_step: 1.0,
            coupling: Coupling::Inertial,
            weights: Weights::default(),
        }
    }
}

impl PlanConfig {
    /// Number of horizon steps, `horizon / dt`.
    pub fn steps(&self) -> Result<usize, PlanError> {
        if !(self.dt > 0.0 && self.horizon >= 0.0 && self.dt.is_finite() && self.horizon.is_finite()) {
            return Err(PlanError::Config("horizon must be non-negative and dt positive"));
        }
        let n = self.horizon / self.dt;
        let r = math::floor(n + 0.5);
        if math::abs(n - r) > 1e-9 * n.max(1.0) {
            return Err(PlanError::Config("horizon must be an integer number of steps"));
        }
        if !(self.vehicle_half_width >= 0.0) || !(self.initial_step > 0.0) || !(self.tolerance >= 0.0) {
            return Err(PlanError::Config("vehicle_half_width, initial_step and tolerance must be non-negative"));
        }
        Ok(r as usize)
    }
}

/// Largest predicted constraint violations of a plan (m); zero when the soft
/// constraints hold.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Violation {
    /// Beyond the usable half-width.
    pub wall: f64,
    /// Into an inflated obstacle disc.
    pub obstacle: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("invalid planner configuration: {0}")]
    Config(&'static str),
    #[error("initial state is not finite")]
    NonFiniteState,
    #[error("control projection failed: {0}")]
    Projection(#[from] crate::integrator_model::ProjectionError),
    #[error("no admissible plan found (cost {cost})")]
    Infeasible { controls: Vec<[f64; 3]>, cost: f64 },
}

struct EnvelopePlanner<'a> {
    env: &'a EnvelopeModel,
    coupling: Coupling,
    effort: [f64; 3],
}

impl HorizonModel for EnvelopePlanner<'_> {
    type State = PlanState;

    fn step(&self, x: &PlanState, u: &[f64; 3], dt: f64) -> PlanState {
        step_2di_with(self.coupling, x, &PlanControl::from_array(*u), dt)
    }

    fn project(&self, x: &PlanState, u: [f64; 3]) -> Result<[f64; 3], PlanError> {
        Ok(project_feasible(self.env, &PlanControl::from_array(u), x.v_x)?.to_array())
    }

    fn admissible(&self, x: &PlanState, u: &[f64; 3]) -> bool {
        is_feasible(self.env, &PlanControl::from_array(*u), x.v_x).feasible
    }

    fn position(&self, x: &PlanState) -> [f64; 2] {
        [x.x, x.y]
    }

    fn body_velocity(&self, x: &PlanState) -> (f64, f64) {
        (x.v_x, x.v_y)
    }

    fn effort_weights(&self) -> [f64; 3] {
        self.effort
    }

    fn course(&self, x: &PlanState) -> f64 {
        if x.v_x > GUIDE_COURSE_SPEED {
            x.psi + math::atan2(x.v_y, x.v_x)
        } else {
            x.psi
        }
    }

    fn cornering_limits(&self, x: &PlanState) -> (f64, f64) {
        let v = x.v_x.max(0.0);
        let lateral = self.env.steady_lateral_limit();
        let brake = -self.env.ax_min(v);
        (lateral, brake)
    }

    fn follow(&self, x: &PlanState, guide: &Guide) -> [f64; 3] {
        let v = math::hypot(x.v_x, x.v_y);
        let normal =
            v * v * guide.curvature + v * HEADING_GAIN * (guide.desired_heading_error(v) - guide.heading_error);
        let tangential = guide.speed_demand(v);
        let course_rate = normal / v.max(GUIDE_COURSE_SPEED);
        let slip = if x.v_x > GUIDE_COURSE_SPEED { math::atan2(x.v_y, x.v_x) } else { 0.0 };
        let (lateral, yaw_rate, along) = match self.coupling {
            // world-frame acceleration is the control rotated by the heading:
            // steer the velocity with the normal component and turn the body
            // to line up with it
            Coupling::Inertial => {
                let (sb, cb) = (math::sin(slip), math::cos(slip));
                (normal * cb, course_rate + SLIP_GAIN * slip, (-normal * sb, cb))
            }
            // body velocities turn with the heading: steer with yaw, damp v_y
            Coupling::Decoupled => (-SLIP_GAIN * x.v_y, course_rate, (0.0, 1.0)),
        };
        let u_psi = YAW_RATE_GAIN * (yaw_rate - x.v_psi);
        // the lateral demand takes priority; the longitudinal one gets what
        // the envelope leaves
        let base = match self.project(x, [along.0, lateral, u_psi]) {
            Ok(u) => u,
            Err(_) => return [0.0; 3],
        };
        let feasible = |t: f64| self.admissible(x, &[base[0] + t * tangential * along.1, base[1], base[2]]);
        if feasible(1.0) {
            return [base[0] + tangential * along.1, base[1], base[2]];
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..PRIORITY_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        [base[0] + lo * tangential * along.1, base[1], base[2]]
    }
}

struct BicyclePlanner<'a> {
    params: &'a BicycleParams,
    effort: [f64; 2],
}

impl HorizonModel for BicyclePlanner<'_> {
    type State = BicycleState;

    fn step(&self, x: &BicycleState, u: &[f64; 3], dt: f64) -> BicycleState {
        kinematic_bicycle_step(x, u[0], u[1], self.params, dt)
    }

    fn project(&self, x: &BicycleState, u: [f64; 3]) -> Result<[f64; 3], PlanError> {
        let (a, d) = self.params.clamp(x.v, u[0], u[1]);
        Ok([a, d, 0.0])
    }

    fn admissible(&self, x: &BicycleState, u: &[f64; 3]) -> bool {
        u[2] == 0.0 && self.params.admissible(x.v, u[0], u[1])
    }

    fn position(&self, x: &BicycleState) -> [f64; 2] {
        [x.x, x.y]
    }

    fn body_velocity(&self, x: &BicycleState) -> (f64, f64) {
        (x.v, 0.0)
    }

    fn effort_weights(&self) -> [f64; 3] {
        [self.effort[0], self.effort[1], 0.0]
    }

    fn course(&self, x: &BicycleState) -> f64 {
        x.psi
    }

    fn cornering_limits(&self, _x: &BicycleState) -> (f64, f64) {
        (self.params.lateral_max, -self.params.accel_min)
    }

    fn follow(&self, x: &BicycleState, guide: &Guide) -> [f64; 3] {
        let v = x.v.max(0.0);
        let curvature =
            guide.curvature + HEADING_GAIN * (guide.desired_heading_error(v) - guide.heading_error) / v.max(1.0);
        let beta = math::asin((self.params.l_r * curvature).clamp(-1.0, 1.0));
        let delta = math::atan(math::tan(beta) * self.params.wheelbase() / self.params.l_r);
        [guide.speed_demand(v), delta, 0.0]
    }
}

fn shifted_warm_start(previous: Option<&[[f64; 3]]>, n: usize) -> Vec<[f64; 3]> {
    match previous {
        Some(p) if !p.is_empty() => (0..n).map(|k| p[(k + 1).min(p.len() - 1)]).collect(),
        _ => alloc::vec![[0.0; 3]; n],
    }
}

/// Plans `horizon / dt` envelope-feasible controls from `xi`. `warm` is a
/// previous control sequence to start from (shifted by one step).
pub fn plan_step(
    xi: &PlanState,
    track: &Track,
    obstacles: &[Obstacle],
    env: &EnvelopeModel,
    cfg: &PlanConfig,
    warm: Option<&[[f64; 3]]>,
) -> Result<Plan<PlanState>, PlanError> {
    let n = cfg.steps()?;
    if !xi.is_finite() {
        return Err(PlanError::NonFiniteState);
    }
    let model = EnvelopePlanner { env, coupling: cfg.coupling, effort: cfg.weights.effort_envelope };
    let problem = Problem { model: &model, track, obstacles, cfg, x0: *xi };
    problem.solve(&shifted_warm_start(warm, n))
}

/// Plans `horizon / dt` `(accel, steering, 0)` controls for the kinematic
/// bicycle.
pub fn plan_step_bicycle(
    x: &BicycleState,
    track: &Track,
    obstacles: &[Obstacle],
    params: &BicycleParams,
    cfg: &PlanConfig,
    warm: Option<&[[f64; 3]]>,
) -> Result<Plan<BicycleState>, PlanError> {
    let n = cfg.steps()?;
    if !(x.x.is_finite() && x.y.is_finite() && x.psi.is_finite() && x.v.is_finite()) {
        return Err(PlanError::NonFiniteState);
    }
    let model = BicyclePlanner { params, effort: cfg.weights.effort_bicycle };
    let problem = Problem { model: &model, track, obstacles, cfg, x0: *x };
    problem.solve(&shifted_warm_start(warm, n))
}

/// Which model plans and drives in a closed-loop run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlannerModel<'a> {
    Envelope(&'a EnvelopeModel),
    Bicycle(&'a BicycleParams),
}

impl PlannerModel<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerModel::Envelope(_) => "envelope",
            PlannerModel::Bicycle(_) => "kinematic",
        }
    }
}

/// Wall-clock source used to time the planner.
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn now(&mut self) -> f64;
}

/// A clock that never advances; makes logs fully reproducible.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&mut self) -> f64 {
        0.0
    }
}

/// Closed-loop run settings.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct LoopConfig {
    /// Maximum number of replanning ticks.
    pub ticks: usize,
    /// Time between replans (s); the first planned control is held this long.
    pub replan_period: f64,
    /// Initial speed along the track direction (m/s).
    pub start_speed: f64,
    /// Arc length of the start position.
    pub start_s: f64,
    /// Stop as soon as one lap (or the whole length of an open track) is done.
    pub stop_after_lap: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self { ticks: 400, replan_period: 0.2, start_speed: 0.0, start_s: 0.0, stop_after_lap: true }
    }
}

/// One replanning tick.
#[derive(Clone, Debug, PartialEq)]
pub struct Tick {
    /// Time at the start of the tick (s).
    pub t: f64,
    /// State at the start of the tick. For the bicycle, `v_x, v_y` are the
    /// body components of the center-of-mass velocity under the applied
    /// steering and `v_psi` its yaw rate.
    pub state: PlanState,
    /// Applied control: `(u_x, u_y, u_ψ)` for the envelope model, `(accel,
    /// steering, 0)` for the bicycle.
    pub control: [f64; 3],
    /// Wall time spent planning (s).
    pub solve_time: f64,
    /// Signed distance from the centerline (m).
    pub lateral_error: f64,
    /// Unwrapped arc-length progress since the start (m).
    pub progress: f64,
    /// The planner failed and the previous control was held.
    pub failed: bool,
    /// Predicted `(X, Y)` positions over the horizon.
    pub predicted: Vec<[f64; 2]>,
}

/// Record of a closed-loop run.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanLog {
    pub model: &'static str,
    pub ticks: Vec<Tick>,
    /// Time at which a lap was completed, if it was.
    pub lap_time: Option<f64>,
}

impl PlanLog {
    pub fn failures(&self) -> usize {
        self.ticks.iter().filter(|t| t.failed).count()
    }
}

fn bicycle_as_plan_state(x: &BicycleState, p: &BicycleParams, delta: f64) -> PlanState {
    let beta = p.slip(delta);
    PlanState {
        x: x.x,
        y: x.y,
        psi: x.psi,
        v_x: x.v * math::cos(beta),
        v_y: x.v * math::sin(beta),
        v_psi: x.v * math::sin(beta) / p.l_r,
    }
}

/// Plans, applies the first control for one replan period, advances the
/// plant (the planning model itself) and repeats. A planner error holds the
/// previous control, made admissible at the current state.
pub fn run_closed_loop(
    model: PlannerModel<'_>,
    track: &Track,
    obstacles: &[Obstacle],
    cfg: &PlanConfig,
    loop_cfg: &LoopConfig,
    clock: &mut dyn Clock,
) -> Result<PlanLog, PlanError> {
    cfg.steps()?;
    if !(loop_cfg.replan_period > 0.0 && loop_cfg.replan_period.is_finite()) {
        return Err(PlanError::Config("replan_period must be positive"));
    }
    let (origin, heading) = track.pose_at(loop_cfg.start_s);
    let substeps = math::ceil(loop_cfg.replan_period / cfg.dt - 1e-9).max(1.0) as usize;
    let h = loop_cfg.replan_period / substeps as f64;
    let goal = track.length();

    let mut log = PlanLog { model: model.name(), ticks: Vec::new(), lap_time: None };
    let mut warm: Option<Vec<[f64; 3]>> = None;
    let mut held = [0.0; 3];
    let mut progress = 0.0;
    let mut last = track.project(origin, None);

    match model {
        PlannerModel::Envelope(env) => {
            let em = EnvelopePlanner { env, coupling: cfg.coupling, effort: cfg.weights.effort_envelope };
            let mut x =
                PlanState { x: origin[0], y: origin[1], psi: heading, v_x: loop_cfg.start_speed, ..Default::default() };
            for tick in 0..loop_cfg.ticks {
                let t0 = clock.now();
                let result = plan_step(&x, track, obstacles, env, cfg, warm.as_deref());
                let solve_time = clock.now() - t0;
                let (control, failed, predicted) = match result {
                    Ok(plan) => {
                        let pred = plan.states.iter().map(|s| [s.x, s.y]).collect();
                        let u = plan.controls.first().copied().unwrap_or([0.0; 3]);
                        warm = Some(plan.controls);
                        (u, false, pred)
                    }
                    Err(_) => (em.project(&x, held)?, true, Vec::new()),
                };
                held = control;
                let p = track.project([x.x, x.y], Some(last.segment));
                progress += track.progress_between(last.s, p.s);
                last = p;
                log.ticks.push(Tick {
                    t: tick as f64 * loop_cfg.replan_period,
                    state: x,
                    control,
                    solve_time,
                    lateral_error: p.lateral,
                    progress,
                    failed,
                    predicted,
                });
                if loop_cfg.stop_after_lap && progress >= goal {
                    log.lap_time = Some(tick as f64 * loop_cfg.replan_period);
                    break;
                }
                for _ in 0..substeps {
                    x = em.step(&x, &control, h);
                }
            }
        }
        PlannerModel::Bicycle(params) => {
            let bm = BicyclePlanner { params, effort: cfg.weights.effort_bicycle };
            let mut x = BicycleState { x: origin[0], y: origin[1], psi: heading, v: loop_cfg.start_speed };
            for tick in 0..loop_cfg.ticks {
                let t0 = clock.now();
                let result = plan_step_bicycle(&x, track, obstacles, params, cfg, warm.as_deref());
                let solve_time = clock.now() - t0;
                let (control, failed, predicted) = match result {
                    Ok(plan) => {
                        let pred = plan.states.iter().map(|s| [s.x, s.y]).collect();
                        let u = plan.controls.first().copied().unwrap_or([0.0; 3]);
                        warm = Some(plan.controls);
                        (u, false, pred)
                    }
                    Err(_) => (bm.project(&x, held)?, true, Vec::new()),
                };
                held = control;
                let p = track.project([x.x, x.y], Some(last.segment));
                progress += track.progress_between(last.s, p.s);
                last = p;
                log.ticks.push(Tick {
                    t: tick as f64 * loop_cfg.replan_period,
                    state: bicycle_as_plan_state(&x, params, control[1]),
                    control,
                    solve_time,
                    lateral_error: p.lateral,
                    progress,
                    failed,
                    predicted,
                });
                if loop_cfg.stop_after_lap && progress >= goal {
                    log.lap_time = Some(tick as f64 * loop_cfg.replan_period);
                    break;
                }
                for _ in 0..substeps {
                    x = bm.step(&x, &control, h);
                }
            }
        }
    }
    Ok(log)
}
