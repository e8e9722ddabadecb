//! Semilinear ODE problems `u' = F(u)` and dynamic linearization.

use super::IntegratorError;
use crate::numkernel::{norm_inf, SparseMatrix};

/// Autonomous system `u' = F(u)` with an optional analytic Jacobian.
pub trait OdeProblem {
    fn dim(&self) -> usize;

    /// `out = F(u)`.
    fn rhs(&self, u: &[f64], out: &mut [f64]);

    /// `∂F/∂u` at `u`. `None` selects the finite-difference fallback.
    fn jacobian(&self, _u: &[f64]) -> Option<SparseMatrix> {
        None
    }

    /// Exact solution at time `t` when known.
    fn exact_solution(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }

    fn eval_rhs(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.rhs(u, &mut out);
        out
    }
}

/// Forward-difference Jacobian, one column per unit direction, with increment
/// `√ε_mach·(1 + ‖u‖_∞)`.
pub fn finite_difference_jacobian<P: OdeProblem + ?Sized>(problem: &P, u: &[f64]) -> SparseMatrix {
    let n = problem.dim();
    let f0 = problem.eval_rhs(u);
    let delta = f64::EPSILON.sqrt() * (1.0 + norm_inf(u));
    let mut up = u.to_vec();
    let mut fp = vec![0.0; n];
    let mut triplets = Vec::new();
    for j in 0..n {
        up[j] = u[j] + delta;
        let step = up[j] - u[j];
        problem.rhs(&up, &mut fp);
        up[j] = u[j];
        for i in 0..n {
            let d = (fp[i] - f0[i]) / step;
            if d != 0.0 {
                triplets.push((i, j, d));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("indices in range")
}

/// `J_n`, `F(u_n)` and the remainder difference `D(U) = F(U) − F(u_n) − J_n(U − u_n)`.
#[derive(Clone, Debug)]
pub struct Linearization {
    pub u: Vec<f64>,
    pub f: Vec<f64>,
    pub jac: SparseMatrix,
}

impl Linearization {
    pub fn new<P: OdeProblem + ?Sized>(problem: &P, u: &[f64]) -> Result<Self, IntegratorError> {
        let n = problem.dim();
        if u.len() != n {
            return Err(IntegratorError::DimensionMismatch { expected: n, found: u.len() });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(IntegratorError::NonFinite("state".into()));
        }
        let f = problem.eval_rhs(u);
        if f.iter().any(|v| !v.is_finite()) {
            return Err(IntegratorError::NonFinite("right-hand side".into()));
        }
        let jac = problem.jacobian(u).unwrap_or_else(|| finite_difference_jacobian(problem, u));
        if jac.n_rows() != n || jac.n_cols() != n {
            return Err(IntegratorError::DimensionMismatch { expected: n, found: jac.n_rows() });
        }
        if !jac.is_finite() {
            return Err(IntegratorError::NonFinite("Jacobian".into()));
        }
        Ok(Self { u: u.to_vec(), f, jac })
    }

    /// `N_n(U) = F(U) − J_n U`.
    pub fn remainder<P: OdeProblem + ?Sized>(&self, problem: &P, x: &[f64]) -> Vec<f64> {
        let mut r = problem.eval_rhs(x);
        let jx = self.jac.spmv(x).expect("dimension checked");
        r.iter_mut().zip(&jx).for_each(|(a, b)| *a -= b);
        r
    }

    /// `D(U) = F(U) − F(u_n) − J_n(U − u_n)`.
    pub fn remainder_difference<P: OdeProblem + ?Sized>(&self, problem: &P, x: &[f64]) -> Vec<f64> {
        let fx = problem.eval_rhs(x);
        let dx: Vec<f64> = x.iter().zip(&self.u).map(|(a, b)| a - b).collect();
        let jdx = self.jac.spmv(&dx).expect("dimension checked");
        fx.iter().zip(&self.f).zip(&jdx).map(|((a, b), c)| (a - b) - c).collect()
    }
}

/// Linear problem `u' = L u`.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub op: SparseMatrix,
}

impl OdeProblem for LinearProblem {
    fn dim(&self) -> usize {
        self.op.n_rows()
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        self.op.spmv_into(u, out);
    }

    fn jacobian(&self, _u: &[f64]) -> Option<SparseMatrix> {
        Some(self.op.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;

    impl OdeProblem for Quadratic {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, u: &[f64], out: &mut [f64]) {
            out[0] = -u[0] + u[0] * u[1];
            out[1] = 2.0 * u[1] - u[0] * u[0];
        }
    }

    #[test]
    fn fd_jacobian_matches_analytic() {
        let u = [0.7, -0.3];
        let j = finite_difference_jacobian(&Quadratic, &u).to_dense();
        let exact = [[-1.0 + u[1], u[0]], [-2.0 * u[0], 2.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - exact[i][k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn linear_problem_has_no_remainder() {
        let op = SparseMatrix::from_triplets(3, 3, &[(0, 0, -1.0), (0, 1, 2.0), (1, 2, 0.5), (2, 2, -3.0)]).unwrap();
        let p = LinearProblem { op };
        let lin = Linearization::new(&p, &[1.0, 2.0, 3.0]).unwrap();
        let x = [0.1, -0.4, 7.0];
        assert!(lin.remainder(&p, &x).iter().all(|v| *v == 0.0));
        assert!(lin.remainder_difference(&p, &x).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn remainder_difference_is_second_order() {
        let u = [0.7, -0.3];
        let lin = Linearization::new(&Quadratic, &u).unwrap();
        assert!(lin.remainder_difference(&Quadratic, &u).iter().all(|v| v.abs() < 1e-15));
        let dir = [0.6, 0.8];
        let size = |eps: f64| {
            let x: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + eps * d).collect();
            norm_inf(&lin.remainder_difference(&Quadratic, &x))
        };
        let ratio = size(1e-2) / size(5e-3);
        assert!(ratio.log2() >= 1.9, "observed order {}", ratio.log2());
    }

    #[test]
    fn rejects_non_finite_state() {
        assert!(matches!(Linearization::new(&Quadratic, &[f64::NAN, 0.0]), Err(IntegratorError::NonFinite(_))));
        assert!(Linearization::new(&Quadratic, &[1.0]).is_err());
    }
}
