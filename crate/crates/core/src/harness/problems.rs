//! Test problems for the studies.

use crate::integrators::OdeProblem;
use crate::numkernel::SparseMatrix;
use crate::swe::{Scenario, ShallowWater};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `u_i' = λ_i (u_i − g_i(t)) + g_i'(t)` with time carried as the last state
/// component, so the system is autonomous. Starting on `u = g(0)` the exact
/// solution is `u = g(t)`.
///
/// `g_i(t) = a_i (sin(ω_i t + φ_i) + c e^{−μ t})` with `a_i = 1/max(1, |λ_i|)`,
/// which keeps the linearization remainder bounded independently of `λ`.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub lambda: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub freq: Vec<f64>,
    pub phase: Vec<f64>,
    pub decay_amplitude: f64,
    pub decay_rate: f64,
}

impl Manufactured {
    /// `n` components with `λ` log-spaced between `lambda_min` and
    /// `lambda_max` (both negative) and phases drawn from `seed`.
    pub fn new(n: usize, lambda_min: f64, lambda_max: f64, seed: u64) -> Self {
        let (a, b) = (lambda_min.abs().ln(), lambda_max.abs().ln());
        let lambda: Vec<f64> = (0..n)
            .map(|i| {
                let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                -(a + (b - a) * s).exp()
            })
            .collect();
        let amplitude = lambda.iter().map(|l| 1.0 / l.abs().max(1.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phase = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let freq = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
        Self { lambda, amplitude, freq, phase, decay_amplitude: 0.5, decay_rate: 0.5 }
    }

    pub fn components(&self) -> usize {
        self.lambda.len()
    }

    /// `(g, g', g'')` of component `i` at `t`.
    fn forcing(&self, i: usize, t: f64) -> (f64, f64, f64) {
        let (w, ph) = (self.freq[i], self.phase[i]);
        let (s, c) = (w * t + ph).sin_cos();
        let e = self.decay_amplitude * (-self.decay_rate * t).exp();
        let mu = self.decay_rate;
        let a = self.amplitude[i];
        (a * (s + e), a * (w * c - mu * e), a * (-w * w * s + mu * mu * e))
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.exact(0.0)
    }

    fn exact(&self, t: f64) -> Vec<f64> {
        let mut u: Vec<f64> = (0..self.components()).map(|i| self.forcing(i, t).0).collect();
        u.push(t);
        u
    }
}

impl OdeProblem for Manufactured {
    fn dim(&self) -> usize {
        self.components() + 1
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        let n = self.components();
        let t = u[n];
        for i in 0..n {
            let (g, dg, _) = self.forcing(i, t);
            out[i] = self.lambda[i] * (u[i] - g) + dg;
        }
        out[n] = 1.0;
    }

    fn jacobian(&self, u: &[f64]) -> Option<SparseMatrix> {
        let n = self.components();
        let t = u[n];
        let mut trip = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (_, dg, d2g) = self.forcing(i, t);
            trip.push((i, i, self.lambda[i]));
            trip.push((i, n, -self.lambda[i] * dg + d2g));
        }
        Some(SparseMatrix::from_triplets(n + 1, n + 1, &trip).expect("indices in range"))
    }

    fn exact_solution(&self, t: f64) -> Option<Vec<f64>> {
        Some(self.exact(t))
    }
}

/// Periodic `u_t = ε u_xx + u²(1 − u)` on `[0, 1)` with a second-order
/// Laplacian.
#[derive(Clone, Debug)]
pub struct ReactionDiffusion1d {
    pub cells: usize,
    pub epsilon: f64,
    laplacian: SparseMatrix,
}

impl ReactionDiffusion1d {
    pub fn new(cells: usize, epsilon: f64) -> Self {
        let dx = 1.0 / cells as f64;
        let c = epsilon / (dx * dx);
        let mut trip = Vec::with_capacity(3 * cells);
        for i in 0..cells {
            trip.push((i, (i + cells - 1) % cells, c));
            trip.push((i, i, -2.0 * c));
            trip.push((i, (i + 1) % cells, c));
        }
        let laplacian = SparseMatrix::from_triplets(cells, cells, &trip).expect("indices in range");
        Self { cells, epsilon, laplacian }
    }

    /// Smooth front-free profile in `(0, 1)`.
    pub fn initial_state(&self) -> Vec<f64> {
        (0..self.cells)
            .map(|i| {
                let x = (i as f64 + 0.5) / self.cells as f64;
                let tau = std::f64::consts::TAU;
                0.5 + 0.3 * (tau * x).sin() + 0.1 * (3.0 * tau * x).cos()
            })
            .collect()
    }
}

impl OdeProblem for ReactionDiffusion1d {
    fn dim(&self) -> usize {
        self.cells
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        self.laplacian.spmv_into(u, out);
        for (o, &v) in out.iter_mut().zip(u) {
            *o += v * v * (1.0 - v);
        }
    }

    fn jacobian(&self, u: &[f64]) -> Option<SparseMatrix> {
        let d: Vec<f64> = u.iter().map(|&v| 2.0 * v - 3.0 * v * v).collect();
        Some(self.laplacian.add_scaled(1.0, &SparseMatrix::diagonal(&d), 1.0).expect("same shape"))
    }
}

/// Which part of the state the error norm sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorNorm {
    Full,
    /// Components `start..end`.
    Range(usize, usize),
}

impl ErrorNorm {
    /// `‖u − r‖_∞ / ‖r‖_∞` over the selected components.
    pub fn relative(self, u: &[f64], reference: &[f64]) -> f64 {
        let (a, b) = match self {
            ErrorNorm::Full => (0, u.len()),
            ErrorNorm::Range(a, b) => (a, b),
        };
        let num = u[a..b].iter().zip(&reference[a..b]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let den = reference[a..b].iter().map(|x| x.abs()).fold(0.0, f64::max);
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

pub enum ProblemModel {
    Manufactured(Manufactured),
    ReactionDiffusion(ReactionDiffusion1d),
    ShallowWater(Box<ShallowWater>, Scenario),
}

/// A configured problem: the model, its initial state and the norm used for
/// errors.
pub struct Problem {
    pub model: ProblemModel,
    pub u0: Vec<f64>,
    pub norm: ErrorNorm,
}

impl Problem {
    pub fn ode(&self) -> &dyn OdeProblem {
        match &self.model {
            ProblemModel::Manufactured(p) => p,
            ProblemModel::ReactionDiffusion(p) => p,
            ProblemModel::ShallowWater(p, _) => p.as_ref(),
        }
    }

    pub fn exact_solution(&self, t: f64) -> Option<Vec<f64>> {
        self.ode().exact_solution(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::finite_difference_jacobian;

    fn jac_err(p: &dyn OdeProblem, u: &[f64]) -> f64 {
        let a = p.jacobian(u).unwrap().to_dense();
        let f = finite_difference_jacobian(p, u).to_dense();
        (a - &f).abs().max() / f.abs().max()
    }

    #[test]
    fn manufactured_stays_on_forcing() {
        let p = Manufactured::new(6, -1e3, -1.0, 4);
        assert!((p.lambda[0] + 1e3).abs() < 1e-9 && (p.lambda[5] + 1.0).abs() < 1e-12);
        let u = p.exact(0.7);
        let f = p.eval_rhs(&u);
        for i in 0..6 {
            assert!((f[i] - p.forcing(i, 0.7).1).abs() < 1e-12);
        }
        assert!(jac_err(&p, &u) < 1e-6);
    }

    #[test]
    fn reaction_diffusion_jacobian() {
        let p = ReactionDiffusion1d::new(32, 1e-2);
        let u = p.initial_state();
        assert!(jac_err(&p, &u) < 1e-6);
    }

    #[test]
    fn relative_norm() {
        let r = [2.0, -4.0, 1.0];
        assert_eq!(ErrorNorm::Full.relative(&[2.0, -3.0, 1.0], &r), 0.25);
        assert_eq!(ErrorNorm::Range(2, 3).relative(&[0.0, 0.0, 1.5], &r), 0.5);
    }
}
