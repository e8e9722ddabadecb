//! Reference solutions, convergence and efficiency studies, CSV output.

use super::config::{ReferencePolicy, StudyConfig};
use super::problems::Problem;
use super::HarnessError;
use crate::integrators::{integrate, RecordPolicy, Scheme};
use crate::phipm::EngineSettings;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CSV_HEADER: &str = "scheme,dt,error_linf,cpu_seconds,steps,matvecs,substeps";
pub const REFERENCE_SCHEME: Scheme = Scheme::Pexprb43;
pub const REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_REFINEMENT: f64 = 20.0;

/// One `(scheme, Δt)` run.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub dt: f64,
    /// Relative `l_∞` error against the study reference.
    pub error_linf: f64,
    pub cpu_seconds: f64,
    pub steps: usize,
    pub matvecs: usize,
    pub substeps: usize,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:e},{:e},{:.6},{},{},{}",
            self.scheme.name(),
            self.dt,
            self.error_linf,
            self.cpu_seconds,
            self.steps,
            self.matvecs,
            self.substeps
        )
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Final state of a run and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub state: Vec<f64>,
    pub exact: bool,
    pub cache_hit: bool,
    pub cache_path: Option<PathBuf>,
}

/// Cache key for a computed reference.
pub fn reference_key(cfg: &StudyConfig, dt_ref: f64) -> String {
    let text = format!(
        "{}\nreference_scheme={}\nreference_dt={:e}\nreference_tol={:e}\n",
        cfg.problem_fingerprint(),
        REFERENCE_SCHEME.name(),
        dt_ref,
        REFERENCE_TOL
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn read_state(path: &Path, len: usize) -> Option<Vec<f64>> {
    let bytes = std::fs::read(path).ok()?;
    if bytes.len() != 8 * len {
        return None;
    }
    Some(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

fn write_state(path: &Path, u: &[f64]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let bytes: Vec<u8> = u.iter().flat_map(|x| x.to_le_bytes()).collect();
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

/// Runs the reference scheme at `dt_ref` without touching the cache.
pub fn compute_reference(cfg: &StudyConfig, problem: &Problem, dt_ref: f64) -> Result<Vec<f64>, HarnessError> {
    let settings = EngineSettings::default().with_tol(REFERENCE_TOL);
    let traj = integrate(problem.ode(), REFERENCE_SCHEME, &problem.u0, dt_ref, cfg.t_end, settings, RecordPolicy::Endpoints, &mut |_, _| {})
        .map_err(|e| HarnessError::Reference(e.to_string()))?;
    Ok(traj.final_state().to_vec())
}

/// Reference state at `t_end`: the exact solution when allowed and known,
/// otherwise the reference scheme at `min Δt / 20`, cached on disk.
pub fn make_reference(cfg: &StudyConfig, problem: &Problem) -> Result<Reference, HarnessError> {
    let exact = problem.exact_solution(cfg.t_end);
    match (cfg.reference, exact) {
        (ReferencePolicy::Auto | ReferencePolicy::Exact, Some(state)) => {
            return Ok(Reference { state, exact: true, cache_hit: false, cache_path: None });
        }
        (ReferencePolicy::Exact, None) => {
            return Err(HarnessError::Reference(format!("problem '{}' has no exact solution", cfg.problem.name())));
        }
        _ => {}
    }
    let dt_ref = cfg.min_dt() / REFERENCE_REFINEMENT;
    let path = cfg.cache_dir.join(format!("{}.ref", reference_key(cfg, dt_ref)));
    if let Some(state) = read_state(&path, problem.u0.len()) {
        return Ok(Reference { state, exact: false, cache_hit: true, cache_path: Some(path) });
    }
    let state = compute_reference(cfg, problem, dt_ref)?;
    write_state(&path, &state)?;
    Ok(Reference { state, exact: false, cache_hit: false, cache_path: Some(path) })
}

/// Integrates one `(scheme, Δt)` pair and scores it against `reference`.
pub fn run_case(cfg: &StudyConfig, problem: &Problem, reference: &[f64], scheme: Scheme, dt: f64) -> Result<(ResultRow, Vec<f64>), HarnessError> {
    let start = Instant::now();
    let traj = integrate(problem.ode(), scheme, &problem.u0, dt, cfg.t_end, cfg.engine_settings(), RecordPolicy::Endpoints, &mut |_, _| {})
        .map_err(|e| HarnessError::Run { scheme: scheme.name(), dt, message: e.to_string() })?;
    let cpu_seconds = start.elapsed().as_secs_f64();
    let u = traj.final_state().to_vec();
    let row = ResultRow {
        scheme,
        dt,
        error_linf: problem.norm.relative(&u, reference),
        cpu_seconds,
        steps: traj.steps,
        matvecs: traj.stats.matvecs,
        substeps: traj.stats.substeps(),
    };
    Ok((row, u))
}

/// Fitted convergence order of one scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderFit {
    pub scheme: Scheme,
    /// Least-squares slope of `log error` against `log Δt`; absent with fewer
    /// than three rows above the floor.
    pub order: Option<f64>,
    pub used_rows: usize,
    /// Step sizes of rows at or below the error floor.
    pub floor_dts: Vec<f64>,
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub fn fit_order(scheme: Scheme, rows: &[ResultRow], floor: f64) -> OrderFit {
    let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
    let (above, below): (Vec<&ResultRow>, Vec<&ResultRow>) = mine.into_iter().partition(|r| r.error_linf > floor);
    let pts: Vec<(f64, f64)> = above.iter().map(|r| (r.dt.ln(), r.error_linf.ln())).collect();
    let distinct = {
        let mut d: Vec<f64> = pts.iter().map(|p| p.0).collect();
        d.dedup();
        d.len()
    };
    OrderFit {
        scheme,
        order: (pts.len() >= 3 && distinct >= 2).then(|| least_squares_slope(&pts)),
        used_rows: pts.len(),
        floor_dts: below.iter().map(|r| r.dt).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub rows: Vec<ResultRow>,
    pub fits: Vec<OrderFit>,
    pub reference: Reference,
}

impl ConvergenceReport {
    pub fn fit(&self, scheme: Scheme) -> Option<&OrderFit> {
        self.fits.iter().find(|f| f.scheme == scheme)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for f in &self.fits {
            let order = f.order.map_or("absent".to_string(), |o| format!("{o:.3}"));
            let _ = write!(s, "{}: order {order} from {} rows", f.scheme.name(), f.used_rows);
            if !f.floor_dts.is_empty() {
                let _ = write!(s, ", floor rows at dt = {:?}", f.floor_dts);
            }
            s.push('\n');
        }
        s
    }
}

fn run_all(cfg: &StudyConfig, problem: &Problem, reference: &[f64]) -> Result<Vec<ResultRow>, HarnessError> {
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        for &dt in cfg.dts_for(scheme) {
            rows.push(run_case(cfg, problem, reference, scheme, dt)?.0);
        }
    }
    Ok(rows)
}

pub fn run_convergence_study(cfg: &StudyConfig) -> Result<ConvergenceReport, HarnessError> {
    for &s in &cfg.schemes {
        if cfg.dts_for(s).len() < 4 {
            return Err(HarnessError::Invalid(format!("convergence study needs at least 4 step sizes for {}", s.name())));
        }
    }
    let problem = cfg.build_problem()?;
    let reference = make_reference(cfg, &problem)?;
    let rows = run_all(cfg, &problem, &reference.state)?;
    let fits = cfg.schemes.iter().map(|&s| fit_order(s, &rows, cfg.error_floor)).collect();
    Ok(ConvergenceReport { rows, fits, reference })
}

/// Largest step size of `scheme` whose error meets `threshold`, relative to
/// the baseline scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRatio {
    pub threshold: f64,
    pub scheme: Scheme,
    pub dt: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn largest_passing_dt(rows: &[ResultRow], scheme: Scheme, threshold: f64) -> Option<f64> {
    rows.iter().filter(|r| r.scheme == scheme && r.error_linf <= threshold).map(|r| r.dt).fold(None, |a, d| Some(a.map_or(d, |a: f64| a.max(d))))
}

pub fn step_ratios(rows: &[ResultRow], schemes: &[Scheme], baseline: Scheme, thresholds: &[f64]) -> Vec<StepRatio> {
    let mut out = Vec::new();
    for &threshold in thresholds {
        let base = largest_passing_dt(rows, baseline, threshold);
        for &scheme in schemes {
            let dt = largest_passing_dt(rows, scheme, threshold);
            let ratio = match (dt, base) {
                (Some(d), Some(b)) => Some(d / b),
                _ => None,
            };
            out.push(StepRatio { threshold, scheme, dt, ratio });
        }
    }
    out
}

pub fn ratios_to_csv(ratios: &[StepRatio], baseline: Scheme) -> String {
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
    let mut s = format!("threshold,scheme,dt,ratio_to_{}\n", baseline.name());
    for r in ratios {
        let _ = writeln!(s, "{:e},{},{},{}", r.threshold, r.scheme.name(), opt(r.dt), opt(r.ratio));
    }
    s
}

#[derive(Clone, Debug)]
pub struct EfficiencyReport {
    pub rows: Vec<ResultRow>,
    pub ratios: Vec<StepRatio>,
    pub reference: Reference,
}

impl EfficiencyReport {
    pub fn ratio(&self, scheme: Scheme, threshold: f64) -> Option<&StepRatio> {
        self.ratios.iter().find(|r| r.scheme == scheme && r.threshold == threshold)
    }
}

pub fn run_efficiency_study(cfg: &StudyConfig) -> Result<EfficiencyReport, HarnessError> {
    let problem = cfg.build_problem()?;
    let reference = make_reference(cfg, &problem)?;
    let rows = run_all(cfg, &problem, &reference.state)?;
    let ratios = step_ratios(&rows, &cfg.schemes, cfg.baseline, &cfg.thresholds);
    Ok(EfficiencyReport { rows, ratios, reference })
}

/// Effect of the zero-vector skip on one run.
#[derive(Clone, Debug, PartialEq)]
pub struct SkipComparison {
    pub matvecs_with_skip: usize,
    pub matvecs_without_skip: usize,
    /// `‖u_skip − u_noskip‖_∞`.
    pub max_difference: f64,
}

pub fn compare_zero_skip(cfg: &StudyConfig, scheme: Scheme, dt: f64) -> Result<SkipComparison, HarnessError> {
    let problem = cfg.build_problem()?;
    let mut on = cfg.clone();
    on.zero_skip = true;
    let mut off = cfg.clone();
    off.zero_skip = false;
    let dummy = problem.u0.clone();
    let (a, ua) = run_case(&on, &problem, &dummy, scheme, dt)?;
    let (b, ub) = run_case(&off, &problem, &dummy, scheme, dt)?;
    let max_difference = ua.iter().zip(&ub).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(SkipComparison { matvecs_with_skip: a.matvecs, matvecs_without_skip: b.matvecs, max_difference })
}
