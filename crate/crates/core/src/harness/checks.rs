//! Verification reports: Jacobian finite differences, order conditions and
//! single runs with diagnostics.

use super::config::StudyConfig;
use super::problems::ProblemModel;
use super::HarnessError;
use crate::integrators::{integrate, verify_order_conditions, RecordPolicy, Scheme};
use crate::numkernel::{norm1, DenseMatrix};
use crate::swe::{diagnostics, jacobian_fd_check, smooth_random_state, ConservationMonitor, Drift, JacobianReport, ShallowWater};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

pub const JACOBIAN_DIRECTIONS: usize = 20;
pub const JACOBIAN_FAIL_THRESHOLD: f64 = 1e-5;
pub const ORDER_CONDITION_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct JacobianCheck {
    pub rest: JacobianReport,
    pub smooth: JacobianReport,
}

impl JacobianCheck {
    pub fn max_rel_error(&self) -> f64 {
        self.rest.max_rel_error.max(self.smooth.max_rel_error)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() <= JACOBIAN_FAIL_THRESHOLD
    }
}

/// Directional-derivative check of the shallow-water Jacobian at the rest
/// state and at a smooth random state.
pub fn check_jacobian(cfg: &StudyConfig) -> Result<JacobianCheck, HarnessError> {
    let s = &cfg.scenario;
    let ops = s.operators()?;
    let model = ShallowWater::new(ops);
    check_jacobian_of(&model, s.mean_depth, cfg.seed)
}

pub fn check_jacobian_of(model: &ShallowWater, depth: f64, seed: u64) -> Result<JacobianCheck, HarnessError> {
    let c = model.ops.cells();
    let mut rest = vec![0.0; 4 * c];
    rest[3 * c..].iter_mut().for_each(|h| *h = depth);
    let smooth = smooth_random_state(&model.ops, depth, 10.0, seed);
    Ok(JacobianCheck {
        rest: jacobian_fd_check(model, &rest, JACOBIAN_DIRECTIONS, seed)?,
        smooth: jacobian_fd_check(model, &smooth, JACOBIAN_DIRECTIONS, seed.wrapping_add(1))?,
    })
}

/// Worst residual of each order condition over the sampled matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderConditionRow {
    pub scheme: Scheme,
    pub residuals: [f64; 4],
    /// Conditions this scheme is expected to satisfy.
    pub required: Vec<usize>,
}

impl OrderConditionRow {
    pub fn passed(&self) -> bool {
        self.required.iter().all(|&i| self.residuals[i] <= ORDER_CONDITION_TOL)
    }
}

fn random_dense(n: usize, norm: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let a = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s = norm1(&a);
    a * (norm / s)
}

pub fn required_conditions(scheme: Scheme) -> Vec<usize> {
    match scheme {
        Scheme::Exprb42 => vec![0],
        Scheme::Pexprb43 | Scheme::Exprb53 => vec![0, 1],
        _ => vec![],
    }
}

/// Evaluates the stiff order conditions on `samples` random 8×8 matrices
/// with 1-norms spread over `[1, 10]`.
pub fn check_order_conditions(samples: usize, seed: u64) -> Result<Vec<OrderConditionRow>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(DenseMatrix, DenseMatrix)> = (0..samples)
        .map(|i| {
            let z = random_dense(8, 1.0 + 9.0 * i as f64 / samples.max(2).saturating_sub(1) as f64, &mut rng);
            let k = random_dense(8, 1.0, &mut rng);
            (z, k)
        })
        .collect();
    let mut rows = Vec::new();
    for scheme in Scheme::ALL {
        let Some(def) = scheme.definition() else { continue };
        let mut worst = [0.0f64; 4];
        for (z, k) in &pairs {
            let r = verify_order_conditions(&def, z, k)?;
            for i in 0..4 {
                worst[i] = worst[i].max(r[i]);
            }
        }
        rows.push(OrderConditionRow { scheme, residuals: worst, required: required_conditions(scheme) });
    }
    Ok(rows)
}

pub fn order_conditions_table(rows: &[OrderConditionRow]) -> String {
    let mut s = String::from("scheme,cond1,cond2,cond3,cond4,required,passed\n");
    for r in rows {
        let req: Vec<String> = r.required.iter().map(|i| (i + 1).to_string()).collect();
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{},{}",
            r.scheme.name(),
            r.residuals[0],
            r.residuals[1],
            r.residuals[2],
            r.residuals[3],
            req.join(" "),
            r.passed()
        );
    }
    s
}

/// Summary of a single integration.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub matvecs: usize,
    /// Relative error against the exact solution when one exists.
    pub error_linf: Option<f64>,
    /// Shallow-water conservation drifts.
    pub max_drift: Option<Drift>,
    /// One CSV line per step.
    pub csv: String,
}

/// Integrates the configured problem with the first scheme and step size.
pub fn run_single(cfg: &StudyConfig) -> Result<RunReport, HarnessError> {
    let problem = cfg.build_problem()?;
    let scheme = cfg.schemes[0];
    let dt = cfg.dts_for(scheme)[0];
    let ode = problem.ode();
    let mut csv = String::new();
    let mut monitor = None;
    let mut failure = None;
    let traj = match &problem.model {
        ProblemModel::ShallowWater(model, _) => {
            let ops = &model.ops;
            let c = ops.cells();
            monitor = Some(ConservationMonitor::new(diagnostics(ops, &problem.u0)?));
            csv.push_str("t,mass_drift,energy_drift,enstrophy_drift,max_abs_uz\n");
            integrate(ode, scheme, &problem.u0, dt, cfg.t_end, cfg.engine_settings(), RecordPolicy::Endpoints, &mut |t, u| {
                let m = monitor.as_mut().expect("monitor set");
                match diagnostics(ops, u) {
                    Ok(d) => {
                        let dr = m.observe(&d);
                        let uz = u[2 * c..3 * c].iter().fold(0.0f64, |a, x| a.max(x.abs()));
                        let _ = writeln!(csv, "{t:e},{:e},{:e},{:e},{uz:e}", dr.mass, dr.energy, dr.enstrophy);
                    }
                    Err(e) if failure.is_none() => failure = Some(e),
                    Err(_) => {}
                }
            })
        }
        _ => {
            csv.push_str("t,norm_inf,error_linf\n");
            integrate(ode, scheme, &problem.u0, dt, cfg.t_end, cfg.engine_settings(), RecordPolicy::Endpoints, &mut |t, u| {
                let n = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                let e = problem.exact_solution(t).map_or(String::new(), |x| format!("{:e}", problem.norm.relative(u, &x)));
                let _ = writeln!(csv, "{t:e},{n:e},{e}");
            })
        }
    }
    .map_err(|e| HarnessError::Run { scheme: scheme.name(), dt, message: e.to_string() })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let error_linf = problem.exact_solution(cfg.t_end).map(|x| problem.norm.relative(traj.final_state(), &x));
    Ok(RunReport {
        scheme,
        dt,
        steps: traj.steps,
        matvecs: traj.stats.matvecs,
        error_linf,
        max_drift: monitor.map(|m| m.max_drift),
        csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_condition_rows() {
        let rows = check_order_conditions(4, 1).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.passed()), "{rows:?}");
        let t = order_conditions_table(&rows);
        assert_eq!(t.lines().count(), 4);
    }

    #[test]
    fn jacobian_check_small_grid() {
        let cfg = StudyConfig::parse("problem = swe_planar\nnx = 8\nny = 8").unwrap();
        let r = check_jacobian(&cfg).unwrap();
        assert!(r.passed());
        assert_eq!(r.smooth.errors.len(), JACOBIAN_DIRECTIONS);
    }

    #[test]
    fn run_single_reports_drift() {
        let cfg = StudyConfig::parse("problem = swe_planar\nnx = 8\nny = 8\nsteps = 3\nschemes = exprb42").unwrap();
        let r = run_single(&cfg).unwrap();
        assert_eq!(r.steps, 3);
        assert_eq!(r.csv.lines().count(), 5);
        assert!(r.max_drift.unwrap().mass.abs() < 1e-10);
    }
}
