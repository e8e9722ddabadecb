//! Independent oracles for integration tests: truncated Taylor series,
//! the doubling relation, and direct dense transcriptions of each scheme.
#![allow(dead_code)]

use expint::integrators::OdeProblem;
use expint::numkernel::{norm1, DenseMatrix, SparseMatrix};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

/// Random matrix rescaled to the given 1-norm.
pub fn random_matrix(n: usize, target_norm1: f64, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    let a = DenseMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let s = norm1(&a);
    a * (target_norm1 / s)
}

/// Random matrix with all eigenvalues in the left half-plane: a random
/// part of 2-norm below `shift`, minus `shift·I`.
pub fn random_stable(n: usize, shift: f64, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    let b = DenseMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let s = b.norm();
    b * (0.9 * shift / s) - DenseMatrix::identity(n, n) * shift
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    max_abs(&d) / max_abs(b)
}

/// `φ_0..φ_k` of `Z` by 150-term Taylor series at `Z/2^s` and the doubling
/// relation `φ_k(2Z) = 2^{-k} [φ_0(Z)φ_k(Z) + Σ_{j=1..k} φ_j(Z)/(k−j)!]`.
pub fn taylor_phi_all(z: &DenseMatrix, k: usize) -> Vec<DenseMatrix> {
    let n = z.nrows();
    let norm = norm1(z);
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
    phis
}

pub fn taylor_phi(z: &DenseMatrix, k: usize) -> DenseMatrix {
    taylor_phi_all(z, k).pop().unwrap()
}

pub fn apply(m: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

/// `Σ_l ρ^l φ_l(ρA) v_l` from the Taylor oracle.
pub fn phi_combination(a: &DenseMatrix, vs: &[Vec<f64>], rho: f64) -> Vec<f64> {
    let phis = taylor_phi_all(&(a * rho), vs.len() - 1);
    let mut out = vec![0.0; a.nrows()];
    for (l, v) in vs.iter().enumerate() {
        let y = apply(&phis[l], v);
        let s = rho.powi(l as i32);
        out.iter_mut().zip(&y).for_each(|(o, x)| *o += s * x);
    }
    out
}

/// `u' = L u + c ⊙ u ⊙ (1 − u)` with a dense `L`.
pub struct DenseSemilinear {
    pub l: DenseMatrix,
    pub c: Vec<f64>,
}

impl DenseSemilinear {
    pub fn new(n: usize, seed: u64) -> Self {
        let l = random_stable(n, 4.0, seed);
        let c = random_vec(n, seed + 1).iter().map(|x| 1.0 + 0.5 * x).collect();
        Self { l, c }
    }

    pub fn jacobian_dense(&self, u: &[f64]) -> DenseMatrix {
        let mut j = self.l.clone();
        for i in 0..u.len() {
            j[(i, i)] += self.c[i] * (1.0 - 2.0 * u[i]);
        }
        j
    }
}

impl OdeProblem for DenseSemilinear {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        let lu = apply(&self.l, u);
        for i in 0..u.len() {
            out[i] = lu[i] + self.c[i] * u[i] * (1.0 - u[i]);
        }
    }

    fn jacobian(&self, u: &[f64]) -> Option<SparseMatrix> {
        Some(SparseMatrix::from_dense(&self.jacobian_dense(u)))
    }
}

fn lin_comb(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let n = terms[0].1.len();
    let mut out = vec![0.0; n];
    for (c, v) in terms {
        out.iter_mut().zip(*v).for_each(|(o, x)| *o += c * x);
    }
    out
}

/// Literal dense transcriptions of each scheme's defining formulas.
pub mod dense_steps {
    use super::*;

    fn phi(j: &DenseMatrix, scale: f64, k: usize) -> DenseMatrix {
        taylor_phi(&(j * scale), k)
    }

    fn d_of(p: &DenseSemilinear, j: &DenseMatrix, u: &[f64], f: &[f64], x: &[f64]) -> Vec<f64> {
        let fx = p.eval_rhs(x);
        let dx: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - b).collect();
        let jdx = apply(j, &dx);
        (0..u.len()).map(|i| fx[i] - f[i] - jdx[i]).collect()
    }

    pub fn rb_euler(p: &DenseSemilinear, u: &[f64], dt: f64) -> Vec<f64> {
        let j = p.jacobian_dense(u);
        let f = p.eval_rhs(u);
        let y = apply(&phi(&j, dt, 1), &f);
        lin_comb(&[(1.0, u), (dt, &y)])
    }

    pub fn epi3(p: &DenseSemilinear, u: &[f64], u_prev: &[f64], dt: f64) -> Vec<f64> {
        let j = p.jacobian_dense(u);
        let f = p.eval_rhs(u);
        let r = d_of(p, &j, u, &f, u_prev);
        let y1 = apply(&phi(&j, dt, 1), &f);
        let y2 = apply(&phi(&j, dt, 2), &r);
        lin_comb(&[(1.0, u), (dt, &y1), (2.0 / 3.0 * dt, &y2)])
    }

    pub fn exprb42(p: &DenseSemilinear, u: &[f64], dt: f64) -> Vec<f64> {
        let j = p.jacobian_dense(u);
        let f = p.eval_rhs(u);
        let u2 = lin_comb(&[(1.0, u), (0.75 * dt, &apply(&phi(&j, 0.75 * dt, 1), &f))]);
        let d2 = d_of(p, &j, u, &f, &u2);
        let y1 = apply(&phi(&j, dt, 1), &f);
        let y3 = apply(&phi(&j, dt, 3), &d2);
        lin_comb(&[(1.0, u), (dt, &y1), (dt * 32.0 / 9.0, &y3)])
    }

    pub fn pexprb43(p: &DenseSemilinear, u: &[f64], dt: f64) -> Vec<f64> {
        let j = p.jacobian_dense(u);
        let f = p.eval_rhs(u);
        let u2 = lin_comb(&[(1.0, u), (0.5 * dt, &apply(&phi(&j, 0.5 * dt, 1), &f))]);
        let y1 = apply(&phi(&j, dt, 1), &f);
        let u3 = lin_comb(&[(1.0, u), (dt, &y1)]);
        let d2 = d_of(p, &j, u, &f, &u2);
        let d3 = d_of(p, &j, u, &f, &u3);
        let p3 = phi(&j, dt, 3);
        let p4 = phi(&j, dt, 4);
        let a = apply(&p3, &lin_comb(&[(16.0, &d2), (-2.0, &d3)]));
        let b = apply(&p4, &lin_comb(&[(-48.0, &d2), (12.0, &d3)]));
        lin_comb(&[(1.0, u), (dt, &y1), (dt, &a), (dt, &b)])
    }

    pub fn exprb53(p: &DenseSemilinear, u: &[f64], dt: f64) -> Vec<f64> {
        let j = p.jacobian_dense(u);
        let f = p.eval_rhs(u);
        let u2 = lin_comb(&[(1.0, u), (0.5 * dt, &apply(&phi(&j, 0.5 * dt, 1), &f))]);
        let d2 = d_of(p, &j, u, &f, &u2);
        let u3 = lin_comb(&[
            (1.0, u),
            (0.9 * dt, &apply(&phi(&j, 0.9 * dt, 1), &f)),
            (dt * 27.0 / 25.0, &apply(&phi(&j, 0.5 * dt, 3), &d2)),
            (dt * 729.0 / 125.0, &apply(&phi(&j, 0.9 * dt, 3), &d2)),
        ]);
        let d3 = d_of(p, &j, u, &f, &u3);
        let y1 = apply(&phi(&j, dt, 1), &f);
        let a = apply(&phi(&j, dt, 3), &lin_comb(&[(18.0, &d2), (-250.0 / 81.0, &d3)]));
        let b = apply(&phi(&j, dt, 4), &lin_comb(&[(-60.0, &d2), (500.0 / 27.0, &d3)]));
        lin_comb(&[(1.0, u), (dt, &y1), (dt, &a), (dt, &b)])
    }
}
