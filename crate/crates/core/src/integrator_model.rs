//! The constrained double integrator used for planning.
//!
//! State `ξ = (X, Y, ψ, v_x, v_y, v_ψ)` with body-frame velocities, control
//! `u = (u_x, u_y, u_ψ)` constrained to an [`EnvelopeModel`].

use crate::envelope::EnvelopeModel;
use crate::math;
use crate::ode::{rk4_step_pure, OdeState};

/// Slack below which a constraint still counts as satisfied. Absorbs the
/// rounding of evaluating boundary points such as `1.1 · (9.9/1.1)`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_psi: f64,
}

impl PlanState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.psi, self.v_x, self.v_y, self.v_psi]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { x: a[0], y: a[1], psi: a[2], v_x: a[3], v_y: a[4], v_psi: a[5] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Ground speed.
    pub fn speed(&self) -> f64 {
        math::hypot(self.v_x, self.v_y)
    }
}

impl OdeState for PlanState {
    fn add_scaled(&self, d: &Self, h: f64) -> Self {
        Self::from_array(self.to_array().add_scaled(&d.to_array(), h))
    }
}

/// Body-frame accelerations `(u_x, u_y)` (m/s²) and yaw acceleration `u_ψ` (rad/s²).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanControl {
    pub u_x: f64,
    pub u_y: f64,
    pub u_psi: f64,
}

impl PlanControl {
    pub const ZERO: Self = Self { u_x: 0.0, u_y: 0.0, u_psi: 0.0 };

    pub fn new(u_x: f64, u_y: f64, u_psi: f64) -> Self {
        Self { u_x, u_y, u_psi }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.u_x, self.u_y, self.u_psi]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { u_x: a[0], u_y: a[1], u_psi: a[2] }
    }
}

/// How the control enters the body-frame velocity equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Coupling {
    /// `v̇ = u`: the control is the rate of change of the body-frame
    /// velocity components.
    Decoupled,
    /// `v̇_x = u_x + v_ψ·v_y`, `v̇_y = u_y − v_ψ·v_x`: the control is the
    /// inertial acceleration expressed in the body frame, which is what the
    /// envelope was measured on. Cornering then needs lateral acceleration.
    #[default]
    Inertial,
}

/// State derivative of the double integrator with `v̇ = u`.
pub fn f_2di(xi: &PlanState, u: &PlanControl) -> PlanState {
    f_2di_with(Coupling::Decoupled, xi, u)
}

/// State derivative under the chosen [`Coupling`].
pub fn f_2di_with(coupling: Coupling, xi: &PlanState, u: &PlanControl) -> PlanState {
    let (s, c) = (math::sin(xi.psi), math::cos(xi.psi));
    let (cx, cy) = match coupling {
        Coupling::Decoupled => (0.0, 0.0),
        Coupling::Inertial => (xi.v_psi * xi.v_y, -xi.v_psi * xi.v_x),
    };
    PlanState {
        x: xi.v_x * c - xi.v_y * s,
        y: xi.v_x * s + xi.v_y * c,
        psi: xi.v_psi,
        v_x: u.u_x + cx,
        v_y: u.u_y + cy,
        v_psi: u.u_psi,
    }
}

/// One RK4 step of [`f_2di`] with `u` held constant. The velocity update is
/// exact because the velocity dynamics are linear with constant input.
pub fn step_2di(xi: &PlanState, u: &PlanControl, dt: f64) -> PlanState {
    step_2di_with(Coupling::Decoupled, xi, u, dt)
}

/// One RK4 step under the chosen [`Coupling`].
pub fn step_2di_with(coupling: Coupling, xi: &PlanState, u: &PlanControl, dt: f64) -> PlanState {
    let mut next = rk4_step_pure(xi, dt, |s: &PlanState| f_2di_with(coupling, s, u));
    if coupling == Coupling::Decoupled {
        next.v_x = xi.v_x + u.u_x * dt;
        next.v_y = xi.v_y + u.u_y * dt;
        next.v_psi = xi.v_psi + u.u_psi * dt;
    }
    next
}

/// Per-constraint slacks (bound minus value; negative means violated).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `1 − (a_X/α)² − (a_Y/β)²`.
    pub ellipse: f64,
    /// `a_X − a_X^min(v_x)`.
    pub ax_min: f64,
    /// `a_X^max(v_x) − a_X`.
    pub ax_max: f64,
    /// `b_i − A_i·a` for the six halfspaces.
    pub rows: [f64; 6],
}

impl Feasibility {
    /// Most negative slack (zero or positive when everything holds).
    pub fn worst(&self) -> f64 {
        self.rows.iter().fold(self.ellipse.min(self.ax_min).min(self.ax_max), |m, r| m.min(*r))
    }
}

/// Evaluates the envelope constraints on `a` at longitudinal speed `v_x`.
/// The set is closed: a slack of exactly zero is feasible.
pub fn is_feasible(env: &EnvelopeModel, a: &PlanControl, v_x: f64) -> Feasibility {
    let ellipse = 1.0 - (a.u_x / env.alpha) * (a.u_x / env.alpha) - (a.u_y / env.beta) * (a.u_y / env.beta);
    let ax_min = a.u_x - env.ax_min(v_x);
    let ax_max = env.ax_max(v_x) - a.u_x;
    let v = a.to_array();
    let mut rows = [0.0; 6];
    for (r, (row, b)) in rows.iter_mut().zip(env.a.iter().zip(env.b.iter())) {
        *r = b - (row[0] * v[0] + row[1] * v[1] + row[2] * v[2]);
    }
    let mut report = Feasibility { feasible: false, ellipse, ax_min, ax_max, rows };
    report.feasible = report.worst() >= -FEASIBILITY_TOL;
    report
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("projection did not converge after {iterations} sweeps (residual {residual:e})")]
pub struct ProjectionError {
    pub iterations: usize,
    pub residual: f64,
}

const PROJECTION_TOL: f64 = 1e-8;
const PROJECTION_MAX_SWEEPS: usize = 20_000;

/// Projection of `(x, y)` onto the ellipse `(x/α)² + (y/β)² ≤ 1`.
fn project_ellipse(x: f64, y: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let (a2, b2) = (alpha * alpha, beta * beta);
    if x * x / a2 + y * y / b2 <= 1.0 {
        return (x, y);
    }
    // The KKT point is (x·α²/(α²+t), y·β²/(β²+t)) for the multiplier t ≥ 0
    // zeroing g(t) = (αx/(α²+t))² + (βy/(β²+t))² − 1. g is convex and
    // decreasing, so Newton from t = 0 increases monotonically to the root.
    let mut t = 0.0;
    for _ in 0..100 {
        let (ex, ey) = (alpha * x / (a2 + t), beta * y / (b2 + t));
        let g = ex * ex + ey * ey - 1.0;
        let dg = -2.0 * (ex * ex / (a2 + t) + ey * ey / (b2 + t));
        if dg == 0.0 {
            break;
        }
        let step = g / dg;
        t -= step;
        if math::abs(step) <= 1e-15 * (1.0 + t) {
            break;
        }
    }
    let (px, py) = (x * a2 / (a2 + t), y * b2 / (b2 + t));
    // absorb the last rounding so the result is inside, not a hair outside
    let r = (px / alpha) * (px / alpha) + (py / beta) * (py / beta);
    if r > 1.0 {
        let s = (1.0 - 4.0 * f64::EPSILON) / math::sqrt(r);
        (px * s, py * s)
    } else {
        (px, py)
    }
}

fn project_set(env: &EnvelopeModel, v_x: f64, set: usize, p: [f64; 3]) -> [f64; 3] {
    match set {
        0 => {
            let (x, y) = project_ellipse(p[0], p[1], env.alpha, env.beta);
            [x, y, p[2]]
        }
        1 => [p[0].clamp(env.ax_min(v_x), env.ax_max(v_x)), p[1], p[2]],
        i => {
            let (row, b) = (env.a[i - 2], env.b[i - 2]);
            let excess = row[0] * p[0] + row[1] * p[1] + row[2] * p[2] - b;
            if excess <= 0.0 {
                return p;
            }
            let n2 = row[0] * row[0] + row[1] * row[1] + row[2] * row[2];
            let f = excess / n2;
            [p[0] - f * row[0], p[1] - f * row[1], p[2] - f * row[2]]
        }
    }
}

/// Scales a nearly feasible `x` toward the origin, which is interior, until
/// [`is_feasible`] accepts it. Moves it by about the size of the violation.
fn pull_inside(env: &EnvelopeModel, x: [f64; 3], v_x: f64) -> PlanControl {
    let at = |l: f64| PlanControl::from_array(x.map(|c| c * l));
    if is_feasible(env, &at(1.0), v_x).feasible {
        return at(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if is_feasible(env, &at(mid), v_x).feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// Euclidean projection of `a` onto the feasible set at speed `v_x`, by
/// Dykstra's alternating projections over the ellipse cylinder, the a_X slab
/// and the six halfspaces. Feasible inputs come back unchanged, and the
/// result always passes [`is_feasible`].
pub fn project_feasible(env: &EnvelopeModel, a: &PlanControl, v_x: f64) -> Result<PlanControl, ProjectionError> {
    if is_feasible(env, a, v_x).feasible {
        return Ok(*a);
    }
    let mut x = a.to_array();
    let mut incr = [[0.0; 3]; 8];
    let mut residual = f64::INFINITY;
    for sweep in 0..PROJECTION_MAX_SWEEPS {
        let start = x;
        for (set, p) in incr.iter_mut().enumerate() {
            let shifted = [x[0] + p[0], x[1] + p[1], x[2] + p[2]];
            let y = project_set(env, v_x, set, shifted);
            *p = [shifted[0] - y[0], shifted[1] - y[1], shifted[2] - y[2]];
            x = y;
        }
        let moved = math::sqrt((0..3).map(|k| (x[k] - start[k]) * (x[k] - start[k])).sum());
        let report = is_feasible(env, &PlanControl::from_array(x), v_x);
        residual = moved.max(-report.worst());
        if sweep > 0 && moved <= PROJECTION_TOL && report.worst() >= -PROJECTION_TOL {
            return Ok(pull_inside(env, x, v_x));
        }
    }
    Err(ProjectionError { iterations: PROJECTION_MAX_SWEEPS, residual })
}
