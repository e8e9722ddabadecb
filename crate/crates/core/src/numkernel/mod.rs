//! Sparse matrix-vector kernels and small dense matrix functions.

mod expm;
mod phi;
mod sparse;

pub use expm::{expm_dense, norm1, scaling_count, PADE13_THETA};
pub use phi::{
    augmented_matrix, phi_columns, phi_dense_all, phi_dense_augmented, phi_dense_recursive,
    PhiColumns, PhiRoute, PhiSet, DENSE_SIZE_CAP, RECURSION_MAX_CONDITION, SMALL_NORM_THRESHOLD,
};
pub use sparse::SparseMatrix;

/// Small square dense matrix (Krylov projections, φ-function arguments).
pub type DenseMatrix = nalgebra::DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("singular linear system")]
    Singular,
    #[error("recursion solve singular and augmented route unavailable; result would be degraded")]
    DegradedAccuracy,
    #[error("augmented matrix of size {requested} exceeds dense cap {cap}")]
    SizeCap { requested: usize, cap: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn check_square_finite(a: &DenseMatrix) -> Result<(), KernelError> {
    if a.nrows() != a.ncols() {
        return Err(KernelError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(KernelError::NonFinite);
    }
    Ok(())
}

/// Dot product of equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// True when every entry is exactly `0.0`.
#[inline]
pub fn is_zero(a: &[f64]) -> bool {
    a.iter().all(|&v| v == 0.0)
}

#[cfg(test)]
pub(crate) mod testing {
    //! Oracles shared by unit tests. Deliberately independent of the Padé and
    //! augmented-matrix code paths.
    use super::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random square matrix rescaled to the given 1-norm.
    pub fn random_matrix(n: usize, norm1: f64, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = super::norm1(&a);
        a * (norm1 / s)
    }

    /// `exp(A)` from a truncated Taylor series of `A/2^s` followed by `s`
    /// squarings, with `s` chosen so that `‖A/2^s‖₁ ≤ 1/2`.
    pub fn taylor_expm(a: &DenseMatrix, terms: usize) -> DenseMatrix {
        let n = a.nrows();
        let norm = super::norm1(a);
        let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let b = a / 2f64.powi(s);
        let mut sum = DenseMatrix::identity(n, n);
        let mut term = DenseMatrix::identity(n, n);
        for k in 1..terms {
            term = &term * &b / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    /// `φ_k(Z)` from a Taylor series at `Z/2^s` and the doubling relation
    /// `φ_k(2Z) = 2^{-k} [φ_0(Z)φ_k(Z) + Σ_{j=1..k} φ_j(Z)/(k−j)!]`.
    pub fn taylor_phi(z: &DenseMatrix, k: usize) -> DenseMatrix {
        let n = z.nrows();
        let norm = super::norm1(z);
        let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let b = z / 2f64.powi(s);
        let mut phis: Vec<DenseMatrix> = (0..=k)
            .map(|j| {
                let mut sum = DenseMatrix::zeros(n, n);
                let mut pow = DenseMatrix::identity(n, n);
                let mut fact: f64 = (1..=j).map(|i| i as f64).product();
                for i in 0..150 {
                    sum += &pow / fact;
                    pow = &pow * &b;
                    fact *= (i + j + 1) as f64;
                }
                sum
            })
            .collect();
        for _ in 0..s {
            let old = phis.clone();
            for kk in 0..=k {
                let mut acc = &old[0] * &old[kk];
                let mut inv_fact = 1.0;
                for j in (1..=kk).rev() {
                    acc += &old[j] * inv_fact;
                    inv_fact /= (kk - j + 1) as f64;
                }
                phis[kk] = acc / 2f64.powi(kk as i32);
            }
        }
        phis.pop().unwrap()
    }

    /// `Σ_{j≥0} Z^j e₁ / (j+k)!`, truncated at 150 terms.
    pub fn series_phi_e1(z: &DenseMatrix, k: usize) -> nalgebra::DVector<f64> {
        let n = z.nrows();
        let mut v = nalgebra::DVector::zeros(n);
        v[0] = 1.0;
        let mut sum = nalgebra::DVector::zeros(n);
        let mut fact: f64 = (1..=k).map(|i| i as f64).product();
        for j in 0..150 {
            sum += &v / fact;
            v = z * v;
            fact *= (j + k + 1) as f64;
        }
        sum
    }
}
