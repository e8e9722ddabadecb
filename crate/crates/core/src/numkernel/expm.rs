//! Dense matrix exponential by degree-13 Padé approximation with scaling and
//! squaring.

use super::{check_square_finite, KernelError};
use nalgebra::DMatrix;

/// Scaling threshold for the degree-13 Padé approximant. The same constant
/// appears in the engine cost model.
pub const PADE13_THETA: f64 = 5.37;

const PADE13_COEFFS: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Number of squarings used for a matrix of the given 1-norm:
/// `max(0, ceil(log2(norm / 5.37)))`.
pub fn scaling_count(norm1: f64) -> u32 {
    if norm1 <= PADE13_THETA {
        0
    } else {
        (norm1 / PADE13_THETA).log2().ceil().max(0.0) as u32
    }
}

/// Maximum absolute column sum of a dense matrix.
pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^H` for a square, finite `H`.
pub fn expm_dense(h: &DMatrix<f64>) -> Result<DMatrix<f64>, KernelError> {
    check_square_finite(h)?;
    let n = h.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let s = scaling_count(norm1(h));
    let a = if s > 0 { h * (0.5f64).powi(s as i32) } else { h.clone() };

    let b = &PADE13_COEFFS;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let lu = denom.lu();
    let mut r = lu.solve(&numer).ok_or(KernelError::Singular)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(KernelError::NonFinite);
    }
    Ok(r)
}
