//! Incomplete-orthogonalization Arnoldi (IOM) and projected φ-function
//! application.
//!
//! Each new Krylov vector is orthogonalized only against the previous `iom`
//! basis vectors, so the projection `H_m` is banded: lower bandwidth one and
//! upper bandwidth `iom − 1`. For symmetric operators with `iom = 2` this is
//! the Lanczos recurrence and coincides with full Arnoldi.

use crate::numkernel::{dot, norm2, phi_columns, DenseMatrix, KernelError, SparseMatrix};

/// Relative size of the residual, measured against `‖A v_j‖`, below which the
/// iteration reports a happy breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// A linear operator applied by matrix-vector products only.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Number of nonzero entries, used by the engine cost model.
    fn nnz(&self) -> usize;
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y);
    }

    fn nnz(&self) -> usize {
        SparseMatrix::nnz(self)
    }
}

/// `scale · A` without copying `A`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledOperator<'a, O: ?Sized> {
    pub inner: &'a O,
    pub scale: f64,
}

impl<'a, O: LinearOperator + ?Sized> ScaledOperator<'a, O> {
    pub fn new(inner: &'a O, scale: f64) -> Self {
        Self { inner, scale }
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for ScaledOperator<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        if self.scale != 1.0 {
            y.iter_mut().for_each(|v| *v *= self.scale);
        }
    }

    fn nnz(&self) -> usize {
        self.inner.nnz()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KrylovError {
    #[error("seed vector is zero")]
    ZeroSeed,
    #[error("seed has length {found}, operator dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid Krylov parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `A V_m ≈ V_m H_m + h_next v_next e_mᵀ` for a seed `w = β v_1`.
#[derive(Clone, Debug)]
pub struct KrylovDecomposition {
    basis: Vec<Vec<f64>>,
    hess: DenseMatrix,
    h_next: f64,
    v_next: Option<Vec<f64>>,
    beta: f64,
    iom: usize,
    breakdown: bool,
    matvecs: usize,
    min_residual_ratio: f64,
}

impl KrylovDecomposition {
    /// Current dimension `m` (smaller than requested after a breakdown).
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// The `m × m` projection `H_m`.
    pub fn hessenberg(&self) -> &DenseMatrix {
        &self.hess
    }

    /// The coupling `h_{m+1,m}`; zero on breakdown.
    pub fn h_next(&self) -> f64 {
        self.h_next
    }

    pub fn v_next(&self) -> Option<&[f64]> {
        self.v_next.as_deref()
    }

    /// 2-norm of the seed vector.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn iom(&self) -> usize {
        self.iom
    }

    pub fn is_breakdown(&self) -> bool {
        self.breakdown
    }

    /// Operator applications performed so far.
    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Smallest ratio `‖residual‖ / ‖A v_j‖` seen during orthogonalization;
    /// values near [`BREAKDOWN_TOL`] flag near-linear dependence.
    pub fn min_residual_ratio(&self) -> f64 {
        self.min_residual_ratio
    }

    /// Grows the decomposition to dimension `m`, reusing every basis vector
    /// already computed. No-op after a breakdown or when `m ≤ dim()`.
    pub fn extend_to<O: LinearOperator + ?Sized>(&mut self, op: &O, m: usize) {
        if self.breakdown || m <= self.dim() {
            return;
        }
        let old = self.dim();
        let mut hess = DenseMatrix::zeros(m, m);
        hess.view_mut((0, 0), (old, old)).copy_from(&self.hess);
        hess[(old, old - 1)] = self.h_next;
        self.hess = hess;
        let v = self.v_next.take().expect("non-breakdown decomposition carries v_next");
        self.basis.push(v);
        self.h_next = 0.0;
        self.iterate(op, old, m);
    }

    /// Runs Arnoldi steps `j = start..m`, where `basis[j]` already exists.
    fn iterate<O: LinearOperator + ?Sized>(&mut self, op: &O, start: usize, m: usize) {
        let n = op.dim();
        let mut z = vec![0.0; n];
        for j in start..m {
            op.apply(&self.basis[j], &mut z);
            self.matvecs += 1;
            let az_norm = norm2(&z);
            let lo = (j + 1).saturating_sub(self.iom);
            for i in lo..=j {
                let hij = dot(&z, &self.basis[i]);
                self.hess[(i, j)] = hij;
                z.iter_mut().zip(&self.basis[i]).for_each(|(zk, vk)| *zk -= hij * vk);
            }
            let hn = norm2(&z);
            let ratio = if az_norm > 0.0 { hn / az_norm } else { 0.0 };
            self.min_residual_ratio = self.min_residual_ratio.min(ratio);
            if hn == 0.0 || ratio <= BREAKDOWN_TOL {
                let k = j + 1;
                self.hess = self.hess.view((0, 0), (k, k)).into_owned();
                self.h_next = 0.0;
                self.v_next = None;
                self.breakdown = true;
                return;
            }
            let inv = 1.0 / hn;
            let v: Vec<f64> = z.iter().map(|x| x * inv).collect();
            if j + 1 < m {
                self.hess[(j + 1, j)] = hn;
                self.basis.push(v);
            } else {
                self.h_next = hn;
                self.v_next = Some(v);
            }
        }
    }
}

/// Builds an IOM decomposition of `op` against the seed `w` with dimension
/// `m` and orthogonalization length `iom`.
pub fn iom2_decompose<O: LinearOperator + ?Sized>(
    op: &O,
    w: &[f64],
    m: usize,
    iom: usize,
) -> Result<KrylovDecomposition, KrylovError> {
    if w.len() != op.dim() {
        return Err(KrylovError::DimensionMismatch { expected: op.dim(), found: w.len() });
    }
    if m == 0 {
        return Err(KrylovError::InvalidParameter("Krylov dimension must be at least 1".into()));
    }
    if iom == 0 {
        return Err(KrylovError::InvalidParameter("orthogonalization length must be at least 1".into()));
    }
    let beta = norm2(w);
    if beta == 0.0 {
        return Err(KrylovError::ZeroSeed);
    }
    let v1: Vec<f64> = w.iter().map(|x| x / beta).collect();
    let mut d = KrylovDecomposition {
        basis: vec![v1],
        hess: DenseMatrix::zeros(m, m),
        h_next: 0.0,
        v_next: None,
        beta,
        iom,
        breakdown: false,
        matvecs: 0,
        min_residual_ratio: f64::INFINITY,
    };
    d.iterate(op, 0, m);
    Ok(d)
}

/// Result of a projected φ-function evaluation.
#[derive(Clone, Debug)]
pub struct PhiApproximation {
    pub approx: Vec<f64>,
    /// Error estimate, non-negative, exactly zero on breakdown.
    pub eps: f64,
    /// `‖τĤ_m‖₁` of the augmented matrix that was exponentiated.
    pub augmented_norm1: f64,
}

/// Approximates `φ_p(τA) w` from the decomposition, including the
/// `h_{m+1,m}` correction term, together with the error estimate
/// `β τ |h_{m+1,m}| |[φ_{p+1}(τH_m)]_{m,1}|`.
pub fn krylov_phi_apply(
    decomp: &KrylovDecomposition,
    tau: f64,
    p: usize,
) -> Result<PhiApproximation, KrylovError> {
    let mut r = krylov_phi_apply_scaled(decomp, tau, p)?;
    let s = tau.powi(p as i32);
    r.approx.iter_mut().for_each(|v| *v /= s);
    r.eps /= s;
    Ok(r)
}

/// Same as [`krylov_phi_apply`] for `τ^p φ_p(τA) w`, the quantity the
/// substepping engine consumes; the estimate carries the same `τ^p` factor.
pub fn krylov_phi_apply_scaled(
    decomp: &KrylovDecomposition,
    tau: f64,
    p: usize,
) -> Result<PhiApproximation, KrylovError> {
    let cols = phi_columns(&decomp.hess, tau, p)?;
    let m = decomp.dim();
    let n = decomp.basis[0].len();
    let beta = decomp.beta;
    let phi_p = &cols.columns[p];
    let mut approx = vec![0.0; n];
    for (vj, &c) in decomp.basis.iter().zip(phi_p.iter()) {
        let a = beta * c;
        approx.iter_mut().zip(vj).for_each(|(y, v)| *y += a * v);
    }
    let mut eps = 0.0;
    if let Some(vn) = &decomp.v_next {
        // τ h e_mᵀ φ_{p+1}(τH)e₁ scaled by τ^p equals h times the last entry of
        // the (p+1)-th augmentation column.
        let corr = beta * decomp.h_next * cols.columns[p + 1][m - 1];
        approx.iter_mut().zip(vn).for_each(|(y, v)| *y += corr * v);
        eps = corr.abs();
    }
    Ok(PhiApproximation { approx, eps, augmented_norm1: cols.augmented_norm1 })
}
