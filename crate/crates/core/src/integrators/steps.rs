//! Single steps of each scheme, expressed as engine calls with `A = Δt J_n`
//! and `v = Δt F(u_n)`.

use super::problem::{Linearization, OdeProblem};
use super::IntegratorError;
use crate::krylov::ScaledOperator;
use crate::numkernel::{is_zero, SparseMatrix};
use crate::phipm::{phipm_simul_iom2, EngineSeed, EngineSettings, EngineStats, PhiTask};

/// Engine settings, warm-start seeds per call slot, and accumulated work.
#[derive(Clone, Debug, Default)]
pub struct EngineContext {
    pub settings: EngineSettings,
    pub seeds: Vec<Option<EngineSeed>>,
    pub stats: EngineStats,
    pub calls: usize,
}

impl EngineContext {
    pub fn new(settings: EngineSettings) -> Self {
        Self { settings, ..Default::default() }
    }

    /// Columns `Σ_l ρ_i^l φ_l(ρ_i Δt J) v_l`. All-zero inputs return zero
    /// columns without invoking the engine.
    pub fn evaluate(
        &mut self,
        slot: usize,
        jac: &SparseMatrix,
        dt: f64,
        vectors: Vec<Vec<f64>>,
        rho: &[f64],
    ) -> Result<Vec<Vec<f64>>, IntegratorError> {
        let n = jac.n_rows();
        if vectors.iter().all(|v| is_zero(v)) {
            return Ok(vec![vec![0.0; n]; rho.len()]);
        }
        if self.seeds.len() <= slot {
            self.seeds.resize(slot + 1, None);
        }
        let op = ScaledOperator::new(jac, dt);
        let task = PhiTask::new(&op, vectors, rho.to_vec()).with_settings(self.settings).with_seed(self.seeds[slot]);
        let out = phipm_simul_iom2(&task)?;
        self.seeds[slot] = Some(out.seed);
        self.stats.merge(&out.stats);
        self.calls += 1;
        Ok(out.columns)
    }
}

fn scaled(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

/// `a·x + b·y`.
fn combo(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
}

fn check_dt(dt: f64) -> Result<(), IntegratorError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(IntegratorError::InvalidStep(format!("step size must be positive, got {dt}")))
    }
}

/// `u_{n+1} = u_n + Δt φ₁(Δt J_n) F(u_n)`.
pub fn step_rb_euler<P: OdeProblem + ?Sized>(problem: &P, u: &[f64], dt: f64, ctx: &mut EngineContext) -> Result<Vec<f64>, IntegratorError> {
    check_dt(dt)?;
    let lin = Linearization::new(problem, u)?;
    let n = u.len();
    let v = scaled(dt, &lin.f);
    let cols = ctx.evaluate(0, &lin.jac, dt, vec![vec![0.0; n], v], &[1.0])?;
    Ok(add(u, &cols[0]))
}

/// `u_{n+1} = u_n + Δt φ₁(Δt J_n) F(u_n) + (2/3) Δt φ₂(Δt J_n) R_{n−1}` with
/// `R_{n−1} = F(u_{n−1}) − F(u_n) − J_n(u_{n−1} − u_n)`.
pub fn step_epi3<P: OdeProblem + ?Sized>(
    problem: &P,
    u: &[f64],
    u_prev: &[f64],
    dt: f64,
    ctx: &mut EngineContext,
) -> Result<Vec<f64>, IntegratorError> {
    check_dt(dt)?;
    if u_prev.len() != u.len() {
        return Err(IntegratorError::MissingHistory);
    }
    let lin = Linearization::new(problem, u)?;
    let n = u.len();
    let r = lin.remainder_difference(problem, u_prev);
    let vectors = vec![vec![0.0; n], scaled(dt, &lin.f), scaled(2.0 / 3.0 * dt, &r)];
    let cols = ctx.evaluate(0, &lin.jac, dt, vectors, &[1.0])?;
    Ok(add(u, &cols[0]))
}

/// Two engine calls: `U₂ = u_n + (3/4)φ₁((3/4)A)v`, then
/// `u_{n+1} = u_n + φ₁(A)v + φ₃(A)(32/9)Δt D₂`.
pub fn step_exprb42<P: OdeProblem + ?Sized>(problem: &P, u: &[f64], dt: f64, ctx: &mut EngineContext) -> Result<Vec<f64>, IntegratorError> {
    check_dt(dt)?;
    let lin = Linearization::new(problem, u)?;
    let n = u.len();
    let v = scaled(dt, &lin.f);
    let zero = vec![0.0; n];
    let c1 = ctx.evaluate(0, &lin.jac, dt, vec![zero.clone(), v.clone()], &[0.75])?;
    let u2 = add(u, &c1[0]);
    let d2 = lin.remainder_difference(problem, &u2);
    let vectors = vec![zero.clone(), v, zero, scaled(32.0 / 9.0 * dt, &d2)];
    let c2 = ctx.evaluate(1, &lin.jac, dt, vectors, &[1.0])?;
    Ok(add(u, &c2[0]))
}

/// Call 1 evaluates both stages at `ρ = [1/2, 1]`; call 2 adds
/// `φ₃(A)Δt(16D₂ − 2D₃) + φ₄(A)Δt(−48D₂ + 12D₃)` to `U₃`.
pub fn step_pexprb43<P: OdeProblem + ?Sized>(problem: &P, u: &[f64], dt: f64, ctx: &mut EngineContext) -> Result<Vec<f64>, IntegratorError> {
    check_dt(dt)?;
    let lin = Linearization::new(problem, u)?;
    let n = u.len();
    let v = scaled(dt, &lin.f);
    let zero = vec![0.0; n];
    let c1 = ctx.evaluate(0, &lin.jac, dt, vec![zero.clone(), v], &[0.5, 1.0])?;
    let u2 = add(u, &c1[0]);
    let u3 = add(u, &c1[1]);
    let d2 = lin.remainder_difference(problem, &u2);
    let d3 = lin.remainder_difference(problem, &u3);
    let vectors = vec![
        zero.clone(),
        zero.clone(),
        zero,
        combo(16.0 * dt, &d2, -2.0 * dt, &d3),
        combo(-48.0 * dt, &d2, 12.0 * dt, &d3),
    ];
    let c2 = ctx.evaluate(1, &lin.jac, dt, vectors, &[1.0])?;
    Ok(add(&u3, &c2[0]))
}

/// Three engine calls. Call 2 returns `ρ³φ₃(ρA)ΔtD₂` at `ρ = 1/2, 9/10`,
/// so the stage weights 27/25 and 729/125 become 216/25 and 8.
pub fn step_exprb53<P: OdeProblem + ?Sized>(problem: &P, u: &[f64], dt: f64, ctx: &mut EngineContext) -> Result<Vec<f64>, IntegratorError> {
    check_dt(dt)?;
    let lin = Linearization::new(problem, u)?;
    let n = u.len();
    let v = scaled(dt, &lin.f);
    let zero = vec![0.0; n];
    let c1 = ctx.evaluate(0, &lin.jac, dt, vec![zero.clone(), v.clone()], &[0.5, 0.9])?;
    let u2 = add(u, &c1[0]);
    let d2 = lin.remainder_difference(problem, &u2);
    let c2 = ctx.evaluate(1, &lin.jac, dt, vec![zero.clone(), zero.clone(), zero.clone(), scaled(dt, &d2)], &[0.5, 0.9])?;
    let u3: Vec<f64> = (0..n).map(|i| u[i] + c1[1][i] + 216.0 / 25.0 * c2[0][i] + 8.0 * c2[1][i]).collect();
    let d3 = lin.remainder_difference(problem, &u3);
    let vectors = vec![
        zero.clone(),
        v,
        zero,
        combo(18.0 * dt, &d2, -250.0 / 81.0 * dt, &d3),
        combo(-60.0 * dt, &d2, 500.0 / 27.0 * dt, &d3),
    ];
    let c3 = ctx.evaluate(2, &lin.jac, dt, vectors, &[1.0])?;
    Ok(add(u, &c3[0]))
}
