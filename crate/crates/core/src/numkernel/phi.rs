//! φ-functions of small dense matrices.
//!
//! φ₀(z) = eᶻ and φₖ₊₁(z) = (φₖ(z) − 1/k!)/z. Two evaluation routes are
//! provided: a single exponential of an augmented matrix (used for Krylov
//! projections and as the accurate default) and the recursion above (cheap,
//! but loses accuracy when `Z` is nearly singular).

use super::expm::{expm_dense, norm1};
use super::{check_square_finite, KernelError};
use nalgebra::{DMatrix, DVector};

/// Largest augmented matrix the kernels will exponentiate.
pub const DENSE_SIZE_CAP: usize = 256;

/// Below this 1-norm the recursion is never used.
pub const SMALL_NORM_THRESHOLD: f64 = 1e-2;

/// Largest 1-norm condition number for which the recursion is trusted.
pub const RECURSION_MAX_CONDITION: f64 = 10.0;

/// `τʲ φⱼ(τH) e₁` for `j = 0..=p+1`, all read from one exponential.
#[derive(Clone, Debug)]
pub struct PhiColumns {
    /// `columns[j] = τʲ φⱼ(τH) e₁`; `columns[0] = e^{τH} e₁`.
    pub columns: Vec<DVector<f64>>,
    /// 1-norm of the scaled augmented matrix `τĤ`.
    pub augmented_norm1: f64,
}

impl PhiColumns {
    /// `φⱼ(τH) e₁` with the `τʲ` factor removed.
    pub fn unscaled(&self, j: usize, tau: f64) -> DVector<f64> {
        &self.columns[j] / tau.powi(j as i32)
    }
}

/// Builds `τĤ` for `H` of size `m`: `H` in the top-left block, `e₁` in the
/// first augmentation column and a nilpotent shift in the `(p+1)`-square
/// augmentation block.
pub fn augmented_matrix(h: &DMatrix<f64>, tau: f64, p: usize) -> DMatrix<f64> {
    let m = h.nrows();
    let dim = m + p + 1;
    let mut hat = DMatrix::zeros(dim, dim);
    hat.view_mut((0, 0), (m, m)).copy_from(&(h * tau));
    hat[(0, m)] = tau;
    for j in 0..p {
        hat[(m + j, m + j + 1)] = tau;
    }
    hat
}

/// Evaluates `τʲ φⱼ(τH)e₁` for `j = 0..=p+1` from a single exponential of the
/// augmented matrix.
pub fn phi_columns(h: &DMatrix<f64>, tau: f64, p: usize) -> Result<PhiColumns, KernelError> {
    check_square_finite(h)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(KernelError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let m = h.nrows();
    let dim = m + p + 1;
    if dim > DENSE_SIZE_CAP {
        return Err(KernelError::SizeCap { requested: dim, cap: DENSE_SIZE_CAP });
    }
    let hat = augmented_matrix(h, tau, p);
    let augmented_norm1 = norm1(&hat);
    let e = expm_dense(&hat)?;
    let mut columns = Vec::with_capacity(p + 2);
    columns.push(e.view((0, 0), (m, 1)).column(0).into_owned());
    for j in 0..=p {
        columns.push(e.view((0, m + j), (m, 1)).column(0).into_owned());
    }
    Ok(PhiColumns { columns, augmented_norm1 })
}

/// Which evaluation route produced a [`PhiSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiRoute {
    Recursion,
    Augmented,
}

/// `[φ₀(Z), …, φ_kmax(Z)]`.
#[derive(Clone, Debug)]
pub struct PhiSet {
    pub phis: Vec<DMatrix<f64>>,
    pub route: PhiRoute,
}

impl PhiSet {
    pub fn get(&self, k: usize) -> &DMatrix<f64> {
        &self.phis[k]
    }
}

/// Evaluates all `φ₀(Z)..φ_kmax(Z)`.
///
/// The recursion is used only when `‖Z‖₁ ≥ 10⁻²` and `κ₁(Z)` is at most
/// [`RECURSION_MAX_CONDITION`]; otherwise each column is obtained from the
/// augmented exponential. A singular recursion solve falls back to the
/// augmented route; if that would exceed the size cap the failure is reported.
pub fn phi_dense_all(z: &DMatrix<f64>, kmax: usize) -> Result<PhiSet, KernelError> {
    check_square_finite(z)?;
    let n = z.nrows();
    let augmented_fits = n + kmax <= DENSE_SIZE_CAP;
    let znorm = norm1(z);
    if znorm >= SMALL_NORM_THRESHOLD {
        if let Some(cond) = condition_number1(z) {
            if cond <= RECURSION_MAX_CONDITION || !augmented_fits {
                match phi_dense_recursive(z, kmax) {
                    Ok(phis) => return Ok(PhiSet { phis, route: PhiRoute::Recursion }),
                    Err(KernelError::Singular) if augmented_fits => {}
                    Err(KernelError::Singular) => return Err(KernelError::DegradedAccuracy),
                    Err(e) => return Err(e),
                }
            }
        } else if !augmented_fits {
            return Err(KernelError::DegradedAccuracy);
        }
    }
    if !augmented_fits {
        return Err(KernelError::SizeCap { requested: n + kmax, cap: DENSE_SIZE_CAP });
    }
    Ok(PhiSet { phis: phi_dense_augmented(z, kmax)?, route: PhiRoute::Augmented })
}

/// Recursion route: `φ₀ = e^Z`, `φₖ₊₁ = Z⁻¹(φₖ − I/k!)`.
pub fn phi_dense_recursive(z: &DMatrix<f64>, kmax: usize) -> Result<Vec<DMatrix<f64>>, KernelError> {
    check_square_finite(z)?;
    let n = z.nrows();
    let lu = z.clone().lu();
    if !lu.is_invertible() {
        return Err(KernelError::Singular);
    }
    let ident = DMatrix::<f64>::identity(n, n);
    let mut phis = Vec::with_capacity(kmax + 1);
    phis.push(expm_dense(z)?);
    let mut inv_fact = 1.0;
    for k in 0..kmax {
        let rhs = &phis[k] - &ident * inv_fact;
        let next = lu.solve(&rhs).ok_or(KernelError::Singular)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::Singular);
        }
        phis.push(next);
        inv_fact /= (k + 1) as f64;
    }
    Ok(phis)
}

/// Augmented route, one exponential of size `n + kmax` per column of `Z`.
pub fn phi_dense_augmented(z: &DMatrix<f64>, kmax: usize) -> Result<Vec<DMatrix<f64>>, KernelError> {
    check_square_finite(z)?;
    let n = z.nrows();
    let dim = n + kmax;
    if dim > DENSE_SIZE_CAP {
        return Err(KernelError::SizeCap { requested: dim, cap: DENSE_SIZE_CAP });
    }
    if kmax == 0 {
        return Ok(vec![expm_dense(z)?]);
    }
    let mut phis = vec![DMatrix::zeros(n, n); kmax + 1];
    if n == 0 {
        return Ok(phis);
    }
    // Column i: [[Z, e_i, 0], [0, N]] with N the kmax-square shift; the
    // exponential's top-left block is e^Z and the augmentation columns hold
    // φ_1(Z)e_i .. φ_kmax(Z)e_i.
    let mut hat = DMatrix::zeros(dim, dim);
    hat.view_mut((0, 0), (n, n)).copy_from(z);
    for j in 0..kmax - 1 {
        hat[(n + j, n + j + 1)] = 1.0;
    }
    for i in 0..n {
        if i > 0 {
            hat[(i - 1, n)] = 0.0;
        }
        hat[(i, n)] = 1.0;
        let e = expm_dense(&hat)?;
        if i == 0 {
            phis[0].copy_from(&e.view((0, 0), (n, n)));
        }
        for k in 1..=kmax {
            phis[k].set_column(i, &e.view((0, n + k - 1), (n, 1)).column(0));
        }
    }
    Ok(phis)
}

/// 1-norm condition number, `None` when `Z` is numerically singular.
fn condition_number1(z: &DMatrix<f64>) -> Option<f64> {
    let inv = z.clone().try_inverse()?;
    let c = norm1(z) * norm1(&inv);
    c.is_finite().then_some(c)
}
