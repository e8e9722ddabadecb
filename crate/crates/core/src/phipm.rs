//! Adaptive substepping engine for linear combinations of φ-functions.
//!
//! [`phipm_simul_iom2`] evaluates, for every scaling point `ρ_i` of a task,
//!
//! ```text
//! y(ρ_i) = Σ_{l=0..p} ρ_i^l φ_l(ρ_i A) v_l
//! ```
//!
//! which is the solution at `t = ρ_i` of
//! `y' = A y + v_1 + t v_2 + … + t^{p−1}/(p−1)! v_p`, `y(0) = v_0`.
//! The interval `[0, ρ_N]` is covered by substeps `τ_k`; each substep needs a
//! single Krylov evaluation of `τ_k^p φ_p(τ_k A) w_p`, where the `w_j` follow a
//! short recurrence in `A`. Substeps are truncated so that every `ρ_i` is hit
//! exactly. Substep size and Krylov dimension adapt through a cost model.

use crate::krylov::{iom2_decompose, krylov_phi_apply_scaled, KrylovDecomposition, KrylovError, LinearOperator};
use crate::numkernel::{is_zero, PADE13_THETA};
use std::fmt::Write as _;

/// Tunable engine parameters. Defaults follow the reference configuration:
/// tolerance 1e−4, initial Krylov dimension 1, orthogonalization length 2,
/// maximum dimension 100, safety factor 1.4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineSettings {
    pub tol: f64,
    pub m_init: usize,
    pub iom: usize,
    pub m_max: usize,
    pub delta: f64,
    /// Skip `A w_{j−1}` when `w_{j−1}` is exactly zero.
    pub zero_skip: bool,
    /// Upper bound on substep attempts (accepted plus rejected).
    pub max_substeps: usize,
    pub record_trace: bool,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            m_init: 1,
            iom: 2,
            m_max: 100,
            delta: 1.4,
            zero_skip: true,
            max_substeps: 1_000_000,
            record_trace: false,
        }
    }
}

impl EngineSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Substep size and Krylov dimension carried from one engine call to the next.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineSeed {
    pub tau: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid engine task: {0}")]
    InvalidTask(String),
    #[error("substep budget of {budget} exhausted at t = {t_reached} (accepted {accepted}, rejected {rejected}, tau {tau:e}, m {m})")]
    BudgetExceeded {
        budget: usize,
        t_reached: f64,
        accepted: usize,
        rejected: usize,
        tau: f64,
        m: usize,
    },
    #[error("non-finite value produced at t = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
}

/// One engine request.
#[derive(Clone, Debug)]
pub struct PhiTask<'a, O: ?Sized> {
    pub op: &'a O,
    /// `v_0 .. v_p`; zero vectors are allowed.
    pub vectors: Vec<Vec<f64>>,
    /// Strictly ascending scaling points in `(0, 1]`.
    pub rho: Vec<f64>,
    pub settings: EngineSettings,
    pub seed: Option<EngineSeed>,
}

impl<'a, O: LinearOperator + ?Sized> PhiTask<'a, O> {
    pub fn new(op: &'a O, vectors: Vec<Vec<f64>>, rho: Vec<f64>) -> Self {
        Self { op, vectors, rho, settings: EngineSettings::default(), seed: None }
    }

    pub fn with_settings(mut self, settings: EngineSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_seed(mut self, seed: Option<EngineSeed>) -> Self {
        self.seed = seed;
        self
    }

    /// Highest φ-index `p`.
    pub fn p(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let n = self.op.dim();
        let bad = |msg: String| Err(EngineError::InvalidTask(msg));
        if self.vectors.is_empty() {
            return bad("at least one input vector is required".into());
        }
        if let Some((l, v)) = self.vectors.iter().enumerate().find(|(_, v)| v.len() != n) {
            return bad(format!("v_{l} has length {}, operator dimension is {n}", v.len()));
        }
        if self.vectors.iter().all(|v| is_zero(v)) {
            return bad("all input vectors are zero".into());
        }
        if self.vectors.iter().flatten().any(|x| !x.is_finite()) {
            return bad("input vectors contain non-finite entries".into());
        }
        if self.rho.is_empty() {
            return bad("at least one scaling point is required".into());
        }
        if !(self.rho[0] > 0.0) || self.rho.windows(2).any(|w| !(w[1] > w[0])) || self.rho[self.rho.len() - 1] > 1.0 {
            return bad(format!("scaling points must ascend strictly within (0, 1]: {:?}", self.rho));
        }
        let s = &self.settings;
        if !(s.tol > 0.0) || s.m_init == 0 || s.iom == 0 || s.m_max < s.m_init || !(s.delta >= 1.0) {
            return bad(format!("invalid engine settings: {s:?}"));
        }
        if let Some(seed) = self.seed {
            if !(seed.tau > 0.0) || seed.m == 0 {
                return bad(format!("invalid warm-start seed: {seed:?}"));
            }
        }
        Ok(())
    }
}

/// Mutable state of one engine invocation.
#[derive(Clone, Debug)]
pub struct SubstepState {
    pub t: f64,
    pub y: Vec<f64>,
    pub tau: f64,
    pub m: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub matvecs: usize,
}

impl SubstepState {
    /// Initial state: `t = 0`, `y = v_0`, `τ` and `m` from the seed or the
    /// defaults (`τ = ρ_1`, `m = m_init`).
    pub fn initial<O: LinearOperator + ?Sized>(task: &PhiTask<'_, O>) -> Self {
        let (tau, m) = match task.seed {
            Some(s) => (s.tau.min(1.0), s.m.clamp(1, task.settings.m_max)),
            None => (task.rho[0], task.settings.m_init),
        };
        Self { t: 0.0, y: task.vectors[0].clone(), tau, m, accepted: 0, rejected: 0, matvecs: 0 }
    }
}

/// `w_0 = y_k`, `w_j = A w_{j−1} + Σ_{ℓ=0}^{p−j} (t_k^ℓ/ℓ!) v_{j+ℓ}`.
///
/// With zero-skip enabled the product is not formed when `w_{j−1}` is
/// exactly zero; `state.matvecs` counts only products actually formed.
pub fn build_w_vectors<O: LinearOperator + ?Sized>(state: &mut SubstepState, task: &PhiTask<'_, O>) -> Vec<Vec<f64>> {
    let p = task.p();
    let n = task.op.dim();
    let t = state.t;
    let mut w = Vec::with_capacity(p + 1);
    w.push(state.y.clone());
    for j in 1..=p {
        let mut wj = vec![0.0; n];
        let prev = &w[j - 1];
        if !(task.settings.zero_skip && is_zero(prev)) {
            task.op.apply(prev, &mut wj);
            state.matvecs += 1;
        }
        let mut coeff = 1.0;
        for l in 0..=(p - j) {
            if l > 0 {
                coeff *= t / l as f64;
            }
            let v = &task.vectors[j + l];
            if coeff != 0.0 && !is_zero(v) {
                wj.iter_mut().zip(v).for_each(|(a, b)| *a += coeff * b);
            }
        }
        w.push(wj);
    }
    w
}

/// Krylov decomposition of the current `w_p`, kept across rejected attempts.
#[derive(Debug, Default)]
pub struct KrylovCache {
    decomp: Option<KrylovDecomposition>,
}

impl KrylovCache {
    pub fn clear(&mut self) {
        self.decomp = None;
    }
}

/// A candidate substep.
#[derive(Clone, Debug)]
pub struct SubstepCandidate {
    /// Candidate `y(t_k + τ)`.
    pub y: Vec<f64>,
    /// Error estimate of `τ^p φ_p(τA) w_p`.
    pub eps: f64,
    /// `‖τĤ_m‖₁`.
    pub augmented_norm1: f64,
    pub tau: f64,
    /// Krylov dimension of an invariant subspace when one was found, in
    /// which case the candidate is exact for any `τ`.
    pub invariant_dim: Option<usize>,
}

/// Evaluates `y(t_k+τ) = τ^p φ_p(τA) w_p + Σ_{j=0}^{p−1} (τ^j/j!) w_j` with the
/// Krylov dimension `state.m`, extending a cached decomposition if possible.
pub fn substep_advance<O: LinearOperator + ?Sized>(
    state: &mut SubstepState,
    task: &PhiTask<'_, O>,
    w: &[Vec<f64>],
    tau: f64,
    cache: &mut KrylovCache,
) -> Result<SubstepCandidate, EngineError> {
    let p = task.p();
    let wp = &w[p];
    let mut invariant_dim = None;
    let (mut y, eps, augmented_norm1) = if is_zero(wp) {
        (vec![0.0; wp.len()], 0.0, 0.0)
    } else {
        match &mut cache.decomp {
            Some(d) if d.dim() < state.m && !d.is_breakdown() => {
                let before = d.matvecs();
                d.extend_to(task.op, state.m);
                state.matvecs += d.matvecs() - before;
            }
            Some(d) if d.dim() == state.m || d.is_breakdown() => {}
            _ => {
                let d = iom2_decompose(task.op, wp, state.m, task.settings.iom)?;
                state.matvecs += d.matvecs();
                cache.decomp = Some(d);
            }
        }
        let d = cache.decomp.as_ref().expect("decomposition present");
        if d.is_breakdown() {
            invariant_dim = Some(d.dim());
        }
        let r = krylov_phi_apply_scaled(d, tau, p)?;
        (r.approx, r.eps, r.augmented_norm1)
    };
    let mut coeff = 1.0;
    for (j, wj) in w.iter().take(p).enumerate() {
        if j > 0 {
            coeff *= tau / j as f64;
        }
        y.iter_mut().zip(wj).for_each(|(a, b)| *a += coeff * b);
    }
    Ok(SubstepCandidate { y, eps, augmented_norm1, tau, invariant_dim })
}

/// Inputs of the cost model.
#[derive(Clone, Copy, Debug)]
pub struct CostInputs {
    pub tau: f64,
    pub m: usize,
    /// Problem dimension `N`.
    pub n: usize,
    /// Nonzeros of `A`.
    pub nnz: usize,
    pub p: usize,
    /// `‖τĤ_m‖₁` at this `τ`.
    pub norm_hhat: f64,
    pub t_out: f64,
    pub t_k: f64,
}

/// Estimated cost to advance from `t_k` to `t_out`:
///
/// ```text
/// C = ⌈(t_out−t_k)/τ⌉ m (N+n_A) + 2(p−1)(n_A+N) + M (m+p+1)³ + (2p+1) N
/// M = 44/3 + 2 ⌈log₂(‖τĤ_m‖/5.37)⌉
/// ```
///
/// The logarithmic term of `M` is floored at zero, matching the number of
/// squarings the dense exponential actually performs.
pub fn cost_estimate(c: CostInputs) -> Result<f64, EngineError> {
    if !(c.tau > 0.0) {
        return Err(EngineError::InvalidTask(format!("cost model needs tau > 0, got {}", c.tau)));
    }
    let n = c.n as f64;
    let na = c.nnz as f64;
    let m = c.m as f64;
    let p = c.p as f64;
    let steps = ceil_tolerant(((c.t_out - c.t_k) / c.tau).max(0.0));
    let squarings = if c.norm_hhat > PADE13_THETA { (c.norm_hhat / PADE13_THETA).log2().ceil() } else { 0.0 };
    let big_m = 44.0 / 3.0 + 2.0 * squarings;
    Ok(steps * m * (n + na) + 2.0 * (p - 1.0) * (na + n) + big_m * (m + p + 1.0).powi(3) + (2.0 * p + 1.0) * n)
}

/// Ceiling that ignores relative rounding noise just above an integer.
fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Which parameter the cost model chose to change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptChoice {
    Tau,
    Krylov,
    /// Larger subspace and larger substep together, after an acceptance.
    Grow,
}

/// Outcome of one adaptation decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adaptation {
    /// `ω = t_out ε / (τ tol)`.
    pub omega: f64,
    /// Whether the attempted substep passes `ω ≤ δ`.
    pub accept: bool,
    pub tau_new: f64,
    pub m_new: usize,
    pub choice: AdaptChoice,
    pub tau_candidate: f64,
    pub m_candidate: usize,
}

/// Inputs to [`adapt_parameters`] describing the attempted substep.
#[derive(Clone, Copy, Debug)]
pub struct AdaptInputs {
    pub t_k: f64,
    pub tau: f64,
    pub m: usize,
    pub eps: f64,
    pub norm_hhat: f64,
    pub t_out: f64,
    /// End of the span the cost model should consider once `t_out` is reached.
    pub horizon: f64,
    pub n: usize,
    pub nnz: usize,
    pub p: usize,
}

/// Acceptance test and the next `(τ, m)`.
///
/// `τ_cand = τ ω^{−1/(p+1)}` clamped to `[τ/5, 2τ]` and to the remaining
/// interval; `m_cand = m + ⌈log₂ ω⌉` when `ω > δ`, otherwise `m − 1`, clamped
/// to `[1, m_max]`. The cheaper of `(τ_cand, m)` and `(τ, m_cand)` wins, where
/// the substep option is costed at the unclamped prediction `τ ω^{−1/(p+1)}`.
pub fn adapt_parameters(a: AdaptInputs, settings: &EngineSettings) -> Adaptation {
    let omega = a.t_out * a.eps / (a.tau * settings.tol);
    let accept = omega <= settings.delta;
    let t_next = if accept { a.t_k + a.tau } else { a.t_k };
    let remaining = a.t_out - t_next;

    let mut tau_pred = if omega > 0.0 {
        a.tau * omega.powf(-1.0 / (a.p as f64 + 1.0))
    } else {
        f64::INFINITY
    };
    if remaining > 0.0 {
        tau_pred = tau_pred.min(remaining);
    }
    tau_pred = tau_pred.min(1.0);
    let mut tau_cand = tau_pred.clamp(a.tau / 5.0, 2.0 * a.tau);
    if remaining > 0.0 {
        tau_cand = tau_cand.min(remaining);
    }
    tau_cand = tau_cand.min(1.0);

    let m_cand = if omega > settings.delta {
        let grow = omega.max(1.0).log2().ceil().min(settings.m_max as f64);
        a.m.saturating_add(grow as usize)
    } else {
        a.m.saturating_sub(1)
    }
    .clamp(1, settings.m_max);

    let end = if remaining > 0.0 { a.t_out } else { a.horizon };
    let cost = |tau: f64, m: usize, norm: f64| {
        let span = (end - t_next).max(tau);
        cost_estimate(CostInputs { tau, m, n: a.n, nnz: a.nnz, p: a.p, norm_hhat: norm, t_out: t_next + span, t_k: t_next })
            .unwrap_or(f64::INFINITY)
    };
    let cost_tau = cost(tau_pred, a.m, a.norm_hhat * tau_pred / a.tau);
    let cost_m = cost(a.tau, m_cand, a.norm_hhat);

    let (mut tau_new, mut m_new, mut choice) = if cost_tau <= cost_m {
        (tau_cand, a.m, AdaptChoice::Tau)
    } else {
        (a.tau, m_cand, AdaptChoice::Krylov)
    };
    if accept {
        // Each extra Krylov vector is assumed to halve the error, which buys
        // a factor 2^{1/(p+1)} in the substep.
        let cap = |t: f64| {
            let t = if remaining > 0.0 { t.min(remaining) } else { t };
            t.min(1.0)
        };
        let mut best: Option<(f64, f64, usize)> = None;
        for k in 1..=settings.m_max.saturating_sub(a.m) {
            let raw = tau_pred * 2f64.powf(k as f64 / (a.p as f64 + 1.0));
            let t = cap(raw);
            let c = cost(t, a.m + k, a.norm_hhat * t / a.tau);
            if best.is_none_or(|b| c < b.0) {
                best = Some((c, t, a.m + k));
            }
            if t < raw {
                break;
            }
        }
        if let Some((c, t, m)) = best {
            if c < cost_tau.min(cost_m) {
                (tau_new, m_new, choice) = (cap(t.clamp(a.tau / 5.0, 2.0 * a.tau)), m, AdaptChoice::Grow);
            }
        }
    }
    if choice == AdaptChoice::Krylov && m_new == a.m {
        // Krylov dimension is pinned at a bound, so the substep must move.
        (tau_new, m_new, choice) = (tau_cand, a.m, AdaptChoice::Tau);
    }
    if !accept && choice == AdaptChoice::Tau && tau_new >= a.tau {
        tau_new = 0.5 * a.tau;
    }
    Adaptation { omega, accept, tau_new, m_new, choice, tau_candidate: tau_cand, m_candidate: m_cand }
}

/// Work counters of one engine call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub accepted: usize,
    pub rejected: usize,
    pub matvecs: usize,
    pub max_m: usize,
}

impl EngineStats {
    pub fn substeps(&self) -> usize {
        self.accepted + self.rejected
    }

    pub fn merge(&mut self, other: &EngineStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.matvecs += other.matvecs;
        self.max_m = self.max_m.max(other.max_m);
    }
}

/// One substep attempt, for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub tau: f64,
    pub m: usize,
    pub eps: f64,
    pub omega: f64,
    pub accepted: bool,
}

/// Per-call trace of substep sizes, Krylov dimensions and error estimates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub const CSV_HEADER: &'static str = "t,tau,m,eps,omega,accepted";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.t, r.tau, r.m, r.eps, r.omega, r.accepted as u8);
        }
        s
    }
}

/// Engine output: one column per scaling point.
#[derive(Clone, Debug)]
pub struct PhiOutput {
    pub columns: Vec<Vec<f64>>,
    /// Internal times at which the columns were stored.
    pub stop_times: Vec<f64>,
    pub stats: EngineStats,
    /// Final `(τ, m)`, for warm-starting the next call.
    pub seed: EngineSeed,
    pub trace: Option<Trace>,
}

/// Evaluates `y(ρ_i) = Σ_l ρ_i^l φ_l(ρ_i A) v_l` for every scaling point in one
/// adaptive sweep.
pub fn phipm_simul_iom2<O: LinearOperator + ?Sized>(task: &PhiTask<'_, O>) -> Result<PhiOutput, EngineError> {
    task.validate()?;
    let settings = &task.settings;
    let p = task.p();
    let n = task.op.dim();
    let nnz = task.op.nnz();
    let mut state = SubstepState::initial(task);
    let mut stats = EngineStats { max_m: state.m, ..Default::default() };
    let mut trace = settings.record_trace.then(Trace::default);
    let mut cache = KrylovCache::default();
    let mut w: Option<Vec<Vec<f64>>> = None;
    // ω of the previous attempt when it was rejected and only τ shrank.
    let mut tau_only_reject: Option<f64> = None;
    let mut columns = Vec::with_capacity(task.rho.len());
    let mut stop_times = Vec::with_capacity(task.rho.len());

    for (i, &t_out) in task.rho.iter().enumerate() {
        let horizon = task.rho.get(i + 1).copied().unwrap_or(t_out);
        while state.t < t_out {
            if state.accepted + state.rejected >= settings.max_substeps {
                return Err(EngineError::BudgetExceeded {
                    budget: settings.max_substeps,
                    t_reached: state.t,
                    accepted: state.accepted,
                    rejected: state.rejected,
                    tau: state.tau,
                    m: state.m,
                });
            }
            if w.is_none() {
                w = Some(build_w_vectors(&mut state, task));
                cache.clear();
            }
            let ws = w.as_ref().expect("w built");
            let remaining = t_out - state.t;
            // Absorb slivers left by rounding instead of taking a separate substep.
            let lands = state.tau >= remaining * (1.0 - 1e-10);
            let tau = if lands { remaining } else { state.tau };

            let cand = substep_advance(&mut state, task, ws, tau, &mut cache)?;
            let invariant_dim = cand.invariant_dim;
            stats.max_m = stats.max_m.max(state.m);
            let adapt = adapt_parameters(
                AdaptInputs {
                    t_k: state.t,
                    tau,
                    m: state.m,
                    eps: cand.eps,
                    norm_hhat: cand.augmented_norm1,
                    t_out,
                    horizon,
                    n,
                    nnz,
                    p,
                },
                settings,
            );
            if let Some(tr) = trace.as_mut() {
                tr.records.push(TraceRecord { t: state.t, tau, m: state.m, eps: cand.eps, omega: adapt.omega, accepted: adapt.accept });
            }
            if adapt.accept {
                if cand.y.iter().any(|v| !v.is_finite()) {
                    return Err(EngineError::NonFinite(state.t));
                }
                state.y = cand.y;
                state.t = if lands { t_out } else { state.t + tau };
                state.accepted += 1;
                w = None;
                tau_only_reject = None;
                // A substep truncated to land on t_out says little about the
                // natural size, so never let it shrink the proposal.
                state.tau = if lands { adapt.tau_new.max(state.tau) } else { adapt.tau_new };
                state.m = adapt.m_new;
                if let Some(k) = invariant_dim {
                    // Exact substep: keep the invariant dimension and try to
                    // finish the interval in one go.
                    state.m = k.max(1);
                    state.tau = 1.0;
                }
            } else {
                state.rejected += 1;
                let stalled = tau_only_reject.is_some_and(|prev| adapt.omega >= 0.5 * prev);
                if stalled && adapt.m_candidate > state.m {
                    // Shrinking τ did not reduce ω: the estimate is not in its
                    // asymptotic regime, so grow the subspace instead.
                    state.m = adapt.m_candidate;
                    tau_only_reject = None;
                } else {
                    tau_only_reject = (adapt.m_new == state.m).then_some(adapt.omega);
                    state.tau = adapt.tau_new;
                    state.m = adapt.m_new;
                }
            }
        }
        columns.push(state.y.clone());
        stop_times.push(state.t);
    }

    stats.accepted = state.accepted;
    stats.rejected = state.rejected;
    stats.matvecs = state.matvecs;
    Ok(PhiOutput { columns, stop_times, stats, seed: EngineSeed { tau: state.tau, m: state.m }, trace })
}
