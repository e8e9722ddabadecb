//! Scheme identifiers, coefficient tables and the stiff order-condition check.

use crate::numkernel::{phi_dense_all, DenseMatrix, KernelError};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    RbEuler,
    Epi3,
    Exprb42,
    Pexprb43,
    Exprb53,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::RbEuler, Scheme::Epi3, Scheme::Exprb42, Scheme::Pexprb43, Scheme::Exprb53];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::RbEuler => "rb_euler",
            Scheme::Epi3 => "epi3",
            Scheme::Exprb42 => "exprb42",
            Scheme::Pexprb43 => "pexprb43",
            Scheme::Exprb53 => "exprb53",
        }
    }

    /// Classical order of accuracy.
    pub fn order(self) -> usize {
        match self {
            Scheme::RbEuler => 2,
            Scheme::Epi3 => 3,
            Scheme::Exprb42 | Scheme::Pexprb43 => 4,
            Scheme::Exprb53 => 5,
        }
    }

    /// Number of engine calls per step.
    pub fn engine_calls(self) -> usize {
        match self {
            Scheme::RbEuler | Scheme::Epi3 => 1,
            Scheme::Exprb42 | Scheme::Pexprb43 => 2,
            Scheme::Exprb53 => 3,
        }
    }

    /// Coefficient table for the exponential Rosenbrock schemes.
    pub fn definition(self) -> Option<SchemeDefinition> {
        let t = |phi, coeff, scale| WeightTerm { phi, coeff, scale };
        match self {
            Scheme::Exprb42 => Some(SchemeDefinition {
                scheme: self,
                nodes: vec![0.0, 0.75],
                coupling: vec![],
                weights: vec![(1, vec![t(3, 32.0 / 9.0, 1.0)])],
            }),
            Scheme::Pexprb43 => Some(SchemeDefinition {
                scheme: self,
                nodes: vec![0.0, 0.5, 1.0],
                coupling: vec![],
                weights: vec![
                    (1, vec![t(3, 16.0, 1.0), t(4, -48.0, 1.0)]),
                    (2, vec![t(3, -2.0, 1.0), t(4, 12.0, 1.0)]),
                ],
            }),
            Scheme::Exprb53 => Some(SchemeDefinition {
                scheme: self,
                nodes: vec![0.0, 0.5, 0.9],
                coupling: vec![(2, 1, vec![t(3, 27.0 / 25.0, 0.5), t(3, 729.0 / 125.0, 0.9)])],
                weights: vec![
                    (1, vec![t(3, 18.0, 1.0), t(4, -60.0, 1.0)]),
                    (2, vec![t(3, -250.0 / 81.0, 1.0), t(4, 500.0 / 27.0, 1.0)]),
                ],
            }),
            Scheme::RbEuler | Scheme::Epi3 => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| format!("unknown scheme '{s}'"))
    }
}

/// `coeff · φ_phi(scale · Z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightTerm {
    pub phi: usize,
    pub coeff: f64,
    pub scale: f64,
}

/// Coefficients of a scheme written as
///
/// ```text
/// U_i     = u_n + c_i Δt φ₁(c_i Δt J) F(u_n) + Δt Σ_k a_ik(Δt J) D_k
/// u_{n+1} = u_n + Δt φ₁(Δt J) F(u_n)      + Δt Σ_i b_i(Δt J) D_i
/// ```
///
/// Stage indices are zero-based; stage 0 is `u_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeDefinition {
    pub scheme: Scheme,
    pub nodes: Vec<f64>,
    /// `(i, k, a_ik)`.
    pub coupling: Vec<(usize, usize, Vec<WeightTerm>)>,
    /// `(i, b_i)`.
    pub weights: Vec<(usize, Vec<WeightTerm>)>,
}

fn eval_terms(terms: &[WeightTerm], phis: &dyn Fn(usize, f64) -> Result<DenseMatrix, KernelError>, n: usize) -> Result<DenseMatrix, KernelError> {
    let mut acc = DenseMatrix::zeros(n, n);
    for t in terms {
        acc += phis(t.phi, t.scale)? * t.coeff;
    }
    Ok(acc)
}

/// Residual norms (Frobenius) of the four stiff order conditions:
///
/// 1. `Σ b_i(Z) c_i² − 2φ₃(Z)`
/// 2. `Σ b_i(Z) c_i³ − 6φ₄(Z)`
/// 3. `Σ b_i(Z) c_i⁴ − 24φ₅(Z)`
/// 4. `Σ b_i(Z) c_i K ψ_{3,i}(Z)`, `ψ_{3,i} = Σ_k a_ik(Z) c_k²/2 − c_i³ φ₃(c_i Z)`
pub fn verify_order_conditions(def: &SchemeDefinition, z: &DenseMatrix, k: &DenseMatrix) -> Result<[f64; 4], KernelError> {
    let n = z.nrows();
    if z.ncols() != n || k.nrows() != n || k.ncols() != n {
        return Err(KernelError::InvalidArgument("Z and K must be square and of equal size".into()));
    }
    let full = phi_dense_all(z, 5)?;
    let phis = |idx: usize, scale: f64| -> Result<DenseMatrix, KernelError> {
        if scale == 1.0 {
            Ok(full.get(idx).clone())
        } else {
            Ok(phi_dense_all(&(z * scale), idx)?.get(idx).clone())
        }
    };
    let c = &def.nodes;
    let mut sums = [DenseMatrix::zeros(n, n), DenseMatrix::zeros(n, n), DenseMatrix::zeros(n, n)];
    let mut cond4 = DenseMatrix::zeros(n, n);
    for (i, terms) in &def.weights {
        let b = eval_terms(terms, &phis, n)?;
        let ci = c[*i];
        for (e, s) in sums.iter_mut().enumerate() {
            *s += &b * ci.powi(e as i32 + 2);
        }
        let mut psi = phis(3, ci)? * -ci.powi(3);
        for (_, kk, a) in def.coupling.iter().filter(|(row, _, _)| row == i) {
            psi += eval_terms(a, &phis, n)? * (c[*kk] * c[*kk] / 2.0);
        }
        cond4 += &b * k * psi * ci;
    }
    Ok([
        (&sums[0] - full.get(3) * 2.0).norm(),
        (&sums[1] - full.get(4) * 6.0).norm(),
        (&sums[2] - full.get(5) * 24.0).norm(),
        cond4.norm(),
    ])
}
