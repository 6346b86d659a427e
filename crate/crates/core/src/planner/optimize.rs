use alloc::vec::Vec;

use super::track::{Obstacle, Track};
use super::{PlanConfig, PlanError, Violation};
use core::f64::consts::FRAC_PI_4;

use crate::math;

/// What the horizon optimizer needs from a vehicle model.
/// Curvature floor relative to the largest diagonal curvature.
const CURVATURE_FLOOR: f64 = 1e-3;
/// Absolute curvature floor.
const MIN_CURVATURE: f64 = 1e-6;
/// Sufficient-decrease fraction of the line search.
const ARMIJO: f64 = 1e-4;

pub(crate) trait HorizonModel {
    type State: Copy;
    fn step(&self, x: &Self::State, u: &[f64; 3], dt: f64) -> Self::State;
    /// Nearest admissible control at state `x`.
    fn project(&self, x: &Self::State, u: [f64; 3]) -> Result<[f64; 3], PlanError>;
    fn admissible(&self, x: &Self::State, u: &[f64; 3]) -> bool;
    /// Direction of travel.
    fn course(&self, x: &Self::State) -> f64;
    /// `(X, Y)` position.
    fn position(&self, x: &Self::State) -> [f64; 2];
    /// Body-frame `(longitudinal, lateral)` velocity.
    fn body_velocity(&self, x: &Self::State) -> (f64, f64);
    /// Quadratic effort weight of each control component.
    fn effort_weights(&self) -> [f64; 3];
    /// Sustainable `(lateral, braking)` accelerations at `x`, both positive.
    fn cornering_limits(&self, x: &Self::State) -> (f64, f64);
    /// Path-following feedback control (before projection).
    fn follow(&self, x: &Self::State, guide: &Guide) -> [f64; 3];
}

/// Local path information handed to a model's feedback law.
pub(crate) struct Guide {
    /// Signed offset from the centerline, positive to the left.
    pub lateral: f64,
    /// Course (direction of travel) minus centerline heading, wrapped to
    /// `(−π, π]`.
    pub heading_error: f64,
    /// Centerline curvature at the foot point.
    pub curvature: f64,
    /// Speed to reach one step ahead: the highest from which every upcoming
    /// corner can still be taken.
    pub target_speed: f64,
    /// Horizon step (s).
    pub dt: f64,
}

impl Guide {
    /// Longitudinal acceleration reaching the target speed in one step.
    pub fn speed_demand(&self, v: f64) -> f64 {
        ((self.target_speed - v) / self.dt).min(GUIDE_MAX_DEMAND)
    }
}

impl Guide {
    /// Course error the feedback laws steer towards at speed `v`: closes the
    /// lateral offset at a fixed rate, saturating at 45°.
    pub fn desired_heading_error(&self, v: f64) -> f64 {
        -math::atan(GUIDE_LATERAL_RATE * self.lateral / v.max(GUIDE_MIN_SPEED)).clamp(-FRAC_PI_4, FRAC_PI_4)
    }
}

/// Rate at which the feedback laws close a lateral offset (1/s).
const GUIDE_LATERAL_RATE: f64 = 1.0;
/// Speed below which the lateral correction stops growing (m/s).
const GUIDE_MIN_SPEED: f64 = 2.0;
/// Fraction of the braking capability assumed when picking target speeds.
const GUIDE_BRAKING_MARGIN: f64 = 0.8;
/// Fraction of the lateral capability assumed when picking target speeds,
/// leaving room for path corrections.
const GUIDE_LATERAL_MARGIN: f64 = 0.8;
/// Cap on the speed demand, well beyond any admissible acceleration.
const GUIDE_MAX_DEMAND: f64 = 100.0;
/// Track sampling step when scanning ahead for corners (m).
const GUIDE_SCAN_STEP: f64 = 1.0;

/// Optimized horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan<S> {
    pub controls: Vec<[f64; 3]>,
    /// `N + 1` states, starting with the initial one.
    pub states: Vec<S>,
    pub cost: f64,
    pub iterations: usize,
    pub violation: Violation,
}

/// Per-step cost terms and the running progress of one rollout.
struct Rollout<S> {
    states: Vec<S>,
    /// Sum of the stage terms of steps `1..=k`.
    head: Vec<f64>,
    /// Unwrapped arc-length progress at each state.
    progress: Vec<f64>,
    /// Track segment of each state's projection.
    segment: Vec<usize>,
    s: Vec<f64>,
}

pub(crate) struct Problem<'a, M: HorizonModel> {
    pub model: &'a M,
    pub track: &'a Track,
    pub obstacles: &'a [Obstacle],
    pub cfg: &'a PlanConfig,
    pub x0: M::State,
}

impl<M: HorizonModel> Problem<'_, M> {
    fn wall_limit(&self) -> f64 {
        self.track.half_width - self.cfg.vehicle_half_width
    }

    fn stage(&self, x: &M::State, lateral: f64) -> f64 {
        let w = &self.cfg.weights;
        let pos = self.model.position(x);
        let (v_lon, v_lat) = self.model.body_velocity(x);
        let wall = (math::abs(lateral) - self.wall_limit()).max(0.0);
        let mut c = w.lateral * lateral * lateral + w.wall * wall * wall + w.slip * v_lat * v_lat;
        let reverse = v_lon.min(0.0);
        c += w.reverse * reverse * reverse;
        for o in self.obstacles {
            let d = math::hypot(pos[0] - o.x, pos[1] - o.y);
            let pen = (o.radius + self.cfg.vehicle_half_width - d).max(0.0);
            c += w.obstacle * pen * pen;
        }
        c
    }

    fn effort(&self, u: &[f64; 3]) -> f64 {
        let e = self.model.effort_weights();
        e[0] * u[0] * u[0] + e[1] * u[1] * u[1] + e[2] * u[2] * u[2]
    }

    /// Highest speed at arc length `s` from which braking at `brake` reaches
    /// every corner within `reach` metres at its steady-state speed
    /// `√(lateral / |κ|)`.
    fn target_speed(&self, s: f64, reach: f64, lateral: f64, brake: f64) -> f64 {
        let mut best = f64::INFINITY;
        let mut d = 0.0;
        while d <= reach {
            let k = math::abs(self.track.curvature_at(s + d));
            if k > 0.0 {
                best = best.min(math::sqrt(lateral / k + 2.0 * brake * d));
            }
            d += GUIDE_SCAN_STEP;
        }
        best
    }

    /// Controls of the model's path-following feedback law over the horizon.
    fn feedback_controls(&self, n: usize) -> Result<Vec<[f64; 3]>, PlanError> {
        let mut x = self.x0;
        let mut hint = None;
        let mut u = Vec::with_capacity(n);
        for _ in 0..n {
            let p = self.track.project(self.model.position(&x), hint);
            hint = Some(p.segment);
            let (lateral, brake) = self.model.cornering_limits(&x);
            let (lateral, brake) = (GUIDE_LATERAL_MARGIN * lateral, GUIDE_BRAKING_MARGIN * brake);
            let v = self.model.body_velocity(&x).0.max(0.0);
            let reach = v * self.cfg.horizon + v * v / (2.0 * brake.max(1e-3)) + 10.0;
            let guide = Guide {
                lateral: p.lateral,
                heading_error: math::wrap_angle(self.model.course(&x) - p.heading),
                curvature: self.track.curvature_at(p.s),
                target_speed: self.target_speed(p.s + v * self.cfg.dt, reach, lateral, brake),
                dt: self.cfg.dt,
            };
            let uk = self.model.project(&x, self.model.follow(&x, &guide))?;
            x = self.model.step(&x, &uk, self.cfg.dt);
            u.push(uk);
        }
        Ok(u)
    }

    /// Rolls out `controls` from state `k` of `base`, reusing `base` up to `k`.
    fn roll_from(&self, base: Option<&Rollout<M::State>>, k: usize, controls: &[[f64; 3]]) -> Rollout<M::State> {
        let n = controls.len();
        let mut r = match base {
            Some(b) => Rollout {
                states: b.states[..=k].to_vec(),
                head: b.head[..=k].to_vec(),
                progress: b.progress[..=k].to_vec(),
                segment: b.segment[..=k].to_vec(),
                s: b.s[..=k].to_vec(),
            },
            None => {
                let p = self.track.project(self.model.position(&self.x0), None);
                Rollout {
                    states: alloc::vec![self.x0],
                    head: alloc::vec![0.0],
                    progress: alloc::vec![0.0],
                    segment: alloc::vec![p.segment],
                    s: alloc::vec![p.s],
                }
            }
        };
        for j in k..n {
            let x = self.model.step(&r.states[j], &controls[j], self.cfg.dt);
            let p = self.track.project(self.model.position(&x), Some(r.segment[j]));
            let prog = r.progress[j] + self.track.progress_between(r.s[j], p.s);
            r.head.push(r.head[j] + self.stage(&x, p.lateral));
            r.states.push(x);
            r.progress.push(prog);
            r.segment.push(p.segment);
            r.s.push(p.s);
        }
        r
    }

    fn total(&self, r: &Rollout<M::State>, controls: &[[f64; 3]]) -> f64 {
        let n = controls.len();
        let effort: f64 = controls.iter().map(|u| self.effort(u)).sum();
        let smooth: f64 = (1..n)
            .map(|k| {
                (0..3)
                    .map(|c| {
                        let d = controls[k][c] - controls[k - 1][c];
                        d * d
                    })
                    .sum::<f64>()
            })
            .sum();
        -self.cfg.weights.progress * r.progress[n] + r.head[n] + effort + self.cfg.weights.smoothness * smooth
    }

    fn cost(&self, controls: &[[f64; 3]]) -> (f64, Rollout<M::State>) {
        let r = self.roll_from(None, 0, controls);
        (self.total(&r, controls), r)
    }

    /// Central-difference gradient and diagonal curvature; perturbing `u_k`
    /// only re-rolls the tail.
    fn derivatives(&self, controls: &[[f64; 3]], base: &Rollout<M::State>, f: f64) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
        let mut g = alloc::vec![[0.0; 3]; controls.len()];
        let mut curv = alloc::vec![[0.0; 3]; controls.len()];
        let mut work = controls.to_vec();
        for k in 0..controls.len() {
            for c in 0..3 {
                let h = 1e-4 * (1.0 + math::abs(controls[k][c]));
                work[k][c] = controls[k][c] + h;
                let fp = self.total(&self.roll_from(Some(base), k, &work), &work);
                work[k][c] = controls[k][c] - h;
                let fm = self.total(&self.roll_from(Some(base), k, &work), &work);
                work[k][c] = controls[k][c];
                g[k][c] = (fp - fm) / (2.0 * h);
                curv[k][c] = (fp - 2.0 * f + fm) / (h * h);
            }
        }
        (g, curv)
    }

    /// Diagonal scaling of the descent direction: inverse curvature, floored
    /// so flat directions (such as pure progress) still take bounded steps.
    fn scaling(curv: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let top = curv.iter().flatten().fold(0.0f64, |m, c| m.max(math::abs(*c)));
        let floor = (CURVATURE_FLOOR * top).max(MIN_CURVATURE);
        curv.iter().map(|ck| ck.map(|c| 1.0 / math::abs(c).max(floor))).collect()
    }

    fn project_all(&self, controls: &[[f64; 3]], states: &[M::State]) -> Result<Vec<[f64; 3]>, PlanError> {
        controls.iter().zip(states).map(|(u, x)| self.model.project(x, *u)).collect()
    }

    fn violation(&self, r: &Rollout<M::State>) -> Violation {
        let mut v = Violation::default();
        for (k, x) in r.states.iter().enumerate().skip(1) {
            let p = self.track.project(self.model.position(x), Some(r.segment[k]));
            v.wall = v.wall.max(math::abs(p.lateral) - self.wall_limit());
            let pos = self.model.position(x);
            for o in self.obstacles {
                let d = math::hypot(pos[0] - o.x, pos[1] - o.y);
                v.obstacle = v.obstacle.max(o.radius + self.cfg.vehicle_half_width - d);
            }
        }
        v.wall = v.wall.max(0.0);
        v.obstacle = v.obstacle.max(0.0);
        v
    }

    /// Projected gradient descent with backtracking from `warm`.
    pub fn solve(&self, warm: &[[f64; 3]]) -> Result<Plan<M::State>, PlanError> {
        let n = warm.len();
        if n == 0 {
            return Ok(Plan {
                controls: Vec::new(),
                states: alloc::vec![self.x0],
                cost: 0.0,
                iterations: 0,
                violation: Violation::default(),
            });
        }
        let mut u = warm.to_vec();
        // make the warm start admissible along its own rollout
        for _ in 0..4 {
            let (_, r) = self.cost(&u);
            u = self.project_all(&u, &r.states)?;
        }
        let (mut f, mut r) = self.cost(&u);
        // a path-following rollout often starts in a better basin
        let fb = self.feedback_controls(n)?;
        let (ffb, rfb) = self.cost(&fb);
        if ffb < f {
            u = fb;
            f = ffb;
            r = rfb;
        }
        let mut step = self.cfg.initial_step;
        let mut iterations = 0;
        for _ in 0..self.cfg.max_iterations {
            iterations += 1;
            let (g, curv) = self.derivatives(&u, &r, f);
            let scale = Self::scaling(&curv);
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<[f64; 3]> = u
                    .iter()
                    .zip(&g)
                    .zip(&scale)
                    .map(|((uk, gk), sk)| [0, 1, 2].map(|c| uk[c] - step * sk[c] * gk[c]))
                    .collect();
                let trial = self.project_all(&trial, &r.states)?;
                let (ft, rt) = self.cost(&trial);
                let mut lin = 0.0;
                let mut dist2 = 0.0;
                for k in 0..n {
                    for c in 0..3 {
                        let d = trial[k][c] - u[k][c];
                        lin += g[k][c] * d;
                        dist2 += d * d;
                    }
                }
                if dist2 == 0.0 {
                    break;
                }
                if ft.is_finite() && lin < 0.0 && ft <= f + ARMIJO * lin {
                    let moved = math::sqrt(dist2 / n as f64);
                    u = trial;
                    f = ft;
                    r = rt;
                    accepted = true;
                    step = (step * 2.0).min(self.cfg.initial_step);
                    if moved < self.cfg.tolerance {
                        accepted = false;
                    }
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        // the admissible set depends on the state; settle the final rollout
        for _ in 0..5 {
            if u.iter().zip(&r.states).all(|(uk, x)| self.model.admissible(x, uk)) {
                break;
            }
            u = self.project_all(&u, &r.states)?;
            let (ft, rt) = self.cost(&u);
            f = ft;
            r = rt;
        }
        if !f.is_finite() || !u.iter().zip(&r.states).all(|(uk, x)| self.model.admissible(x, uk)) {
            return Err(PlanError::Infeasible { controls: u, cost: f });
        }
        let violation = self.violation(&r);
        Ok(Plan { controls: u, states: r.states, cost: f, iterations, violation })
    }
}
