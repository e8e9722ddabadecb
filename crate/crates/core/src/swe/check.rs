//! Finite-difference verification of the analytic Jacobian.

use super::model::ShallowWater;
use super::operators::DiscreteOperators;
use super::SweError;
use crate::numkernel::{norm_inf, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianReport {
    /// `‖(F(u+εv) − F(u−εv))/(2ε) − Jv‖_∞ / ‖Jv‖_∞` per direction.
    pub errors: Vec<f64>,
    pub max_rel_error: f64,
}

/// Relative centered-difference error of `J v` with `ε = 1e-6 (1 + ‖u‖_∞)`.
pub fn directional_error(model: &ShallowWater, jac: &SparseMatrix, u: &[f64], v: &[f64]) -> Result<f64, SweError> {
    let eps = 1e-6 * (1.0 + norm_inf(u));
    let up: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + eps * b).collect();
    let um: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - eps * b).collect();
    let fp = model.tendency(&up)?;
    let fm = model.tendency(&um)?;
    let jv = jac.spmv(v).map_err(|_| SweError::DimensionMismatch { expected: jac.n_cols(), found: v.len() })?;
    let diff: Vec<f64> = (0..u.len()).map(|i| (fp[i] - fm[i]) / (2.0 * eps) - jv[i]).collect();
    Ok(norm_inf(&diff) / norm_inf(&jv))
}

/// Checks the assembled Jacobian at `u` along `directions` random directions
/// with entries uniform in `[−1, 1]`.
pub fn jacobian_fd_check(model: &ShallowWater, u: &[f64], directions: usize, seed: u64) -> Result<JacobianReport, SweError> {
    let jac = model.assemble_jacobian(u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(directions);
    for _ in 0..directions {
        let v: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        errors.push(directional_error(model, &jac, u, &v)?);
    }
    let max_rel_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(JacobianReport { errors, max_rel_error })
}

/// Smooth random state: a few low Fourier modes per variable, velocities of
/// order `velocity`, depth `depth` plus perturbations of order `depth/20`.
pub fn smooth_random_state(ops: &DiscreteOperators, depth: f64, velocity: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = ops.cells();
    let (lx, ly) = ops.extent();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut u = vec![0.0; 4 * c];
    for var in 0..4 {
        let (base, amp) = if var == 3 { (depth, depth / 20.0) } else { (0.0, velocity) };
        let modes: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(0..3) as f64,
                    rng.random_range(0..3) as f64,
                    rng.random_range(-1.0..1.0) * amp / 4.0,
                    rng.random_range(0.0..two_pi),
                )
            })
            .collect();
        for k in 0..c {
            let (x, y) = ops.cell_center(k);
            let mut s = base;
            for &(kx, ky, a, ph) in &modes {
                s += a * (two_pi * (kx * x / lx + ky * y / ly) + ph).cos();
            }
            u[var * c + k] = s;
        }
    }
    u
}
