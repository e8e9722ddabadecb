//! Fixed-step time integration.

use super::problem::OdeProblem;
use super::schemes::Scheme;
use super::steps::{step_epi3, step_exprb42, step_exprb53, step_pexprb43, step_rb_euler, EngineContext};
use super::IntegratorError;
use crate::phipm::{EngineSettings, EngineStats};

/// Advances one scheme step by step, holding warm-start seeds and the
/// multistep history.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub scheme: Scheme,
    pub ctx: EngineContext,
    prev: Option<Vec<f64>>,
}

impl Stepper {
    pub fn new(scheme: Scheme, settings: EngineSettings) -> Self {
        Self { scheme, ctx: EngineContext::new(settings), prev: None }
    }

    /// Drops the multistep history; the next epi3 step starts with rb_euler.
    pub fn reset_history(&mut self) {
        self.prev = None;
    }

    pub fn step<P: OdeProblem + ?Sized>(&mut self, problem: &P, u: &[f64], dt: f64) -> Result<Vec<f64>, IntegratorError> {
        let ctx = &mut self.ctx;
        let next = match self.scheme {
            Scheme::RbEuler => step_rb_euler(problem, u, dt, ctx),
            Scheme::Epi3 => match &self.prev {
                None => step_rb_euler(problem, u, dt, ctx),
                Some(prev) => step_epi3(problem, u, prev, dt, ctx),
            },
            Scheme::Exprb42 => step_exprb42(problem, u, dt, ctx),
            Scheme::Pexprb43 => step_pexprb43(problem, u, dt, ctx),
            Scheme::Exprb53 => step_exprb53(problem, u, dt, ctx),
        };
        match next {
            Ok(v) => {
                if self.scheme == Scheme::Epi3 {
                    self.prev = Some(u.to_vec());
                }
                Ok(v)
            }
            Err(e) => {
                self.prev = None;
                Err(e)
            }
        }
    }
}

/// Which states a trajectory keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RecordPolicy {
    #[default]
    All,
    /// Initial and final states only.
    Endpoints,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub u: Vec<f64>,
    /// Step that produced this state (0 for the initial state).
    pub dt: f64,
    /// Engine work spent on this step.
    pub stats: EngineStats,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub steps: usize,
    pub stats: EngineStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.records.last().expect("trajectory holds the initial state").u
    }

    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }
}

/// Failure with the trajectory up to the failing step.
#[derive(Debug, thiserror::Error)]
#[error("integration failed at t = {t} after {} steps: {source}", partial.steps)]
pub struct IntegrationFailure {
    pub t: f64,
    pub partial: Trajectory,
    #[source]
    pub source: IntegratorError,
}

/// Number of steps of size `dt` covering `[0, t_end]`; a final shorter step
/// is used when `dt` does not divide `t_end` up to rounding.
pub fn step_count(dt: f64, t_end: f64) -> usize {
    if t_end <= 0.0 {
        return 0;
    }
    let r = t_end / dt;
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-9 * r.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        r.ceil() as usize
    }
}

/// Integrates `u' = F(u)` from `u0` at `t = 0` to `t_end` with fixed `dt`.
/// Observers see `(t, u)` for every state including the initial one.
pub fn integrate<P: OdeProblem + ?Sized>(
    problem: &P,
    scheme: Scheme,
    u0: &[f64],
    dt: f64,
    t_end: f64,
    settings: EngineSettings,
    policy: RecordPolicy,
    observer: &mut dyn FnMut(f64, &[f64]),
) -> Result<Trajectory, IntegrationFailure> {
    let mut traj = Trajectory::default();
    let fail = |traj: Trajectory, t: f64, source| IntegrationFailure { t, partial: traj, source };
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(fail(traj, 0.0, IntegratorError::InvalidStep(format!("dt = {dt}, t_end = {t_end}"))));
    }
    if u0.len() != problem.dim() {
        return Err(fail(traj, 0.0, IntegratorError::DimensionMismatch { expected: problem.dim(), found: u0.len() }));
    }
    traj.records.push(StepRecord { t: 0.0, u: u0.to_vec(), dt: 0.0, stats: EngineStats::default() });
    observer(0.0, u0);

    let n_steps = step_count(dt, t_end);
    let mut stepper = Stepper::new(scheme, settings);
    let mut u = u0.to_vec();
    let mut t = 0.0;
    for k in 0..n_steps {
        let t_next = if k + 1 == n_steps { t_end } else { (k + 1) as f64 * dt };
        let h = t_next - t;
        let before = stepper.ctx.stats;
        match stepper.step(problem, &u, h) {
            Ok(next) => u = next,
            Err(e) => return Err(fail(traj, t, e)),
        }
        t = t_next;
        let mut spent = stepper.ctx.stats;
        spent.accepted -= before.accepted;
        spent.rejected -= before.rejected;
        spent.matvecs -= before.matvecs;
        traj.steps += 1;
        observer(t, &u);
        let rec = StepRecord { t, u: u.clone(), dt: h, stats: spent };
        match policy {
            RecordPolicy::All => traj.records.push(rec),
            RecordPolicy::Endpoints if k + 1 == n_steps => traj.records.push(rec),
            RecordPolicy::Endpoints => {}
        }
    }
    traj.stats = stepper.ctx.stats;
    Ok(traj)
}
