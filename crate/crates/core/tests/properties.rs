mod common;

use common::{random_matrix, taylor_phi};
use expint::config::KeyValues;
use expint::harness::{fit_order, least_squares_slope, ErrorNorm, Manufactured, ResultRow, StudyConfig};
use expint::integrators::{OdeProblem, Scheme};
use expint::numkernel::{phi_dense_all, DenseMatrix, SparseMatrix};
use proptest::prelude::*;

fn key_values() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec(("[a-z_]{1,8}", "[a-zA-Z0-9.,_ -]{0,12}"), 0..8)
}

fn sparse_dense(n: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(prop_oneof![3 => Just(0.0), 2 => -5.0..5.0f64], n * n).prop_map(move |v| DenseMatrix::from_vec(n, n, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn key_values_canonical_round_trip(pairs in key_values()) {
        let mut kv = KeyValues::default();
        for (k, v) in &pairs {
            kv.set(k, v.trim());
        }
        prop_assert_eq!(KeyValues::parse(&kv.canonical()).unwrap(), kv);
    }

    #[test]
    fn study_config_set_is_read_back(tol in 1e-14..1e-2f64, seed in any::<u64>()) {
        let mut cfg = StudyConfig::parse("problem = manufactured\ndts = 0.1, 0.05").unwrap();
        cfg.set("tol", tol).unwrap();
        cfg.set("seed", seed).unwrap();
        prop_assert_eq!(cfg.tol, tol);
        prop_assert_eq!(cfg.seed, seed);
    }

    #[test]
    fn sparse_dense_round_trip(a in sparse_dense(6)) {
        let s = SparseMatrix::from_dense(&a);
        prop_assert_eq!(s.to_dense(), a.clone());
        prop_assert_eq!(s.nnz(), a.iter().filter(|v| **v != 0.0).count());
        prop_assert_eq!(s.transpose().transpose(), s);
    }

    #[test]
    fn spmv_matches_dense(a in sparse_dense(7), x in prop::collection::vec(-3.0..3.0f64, 7)) {
        let y = SparseMatrix::from_dense(&a).spmv(&x).unwrap();
        let z = common::apply(&a, &x);
        for (p, q) in y.iter().zip(&z) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn add_scaled_is_linear(a in sparse_dense(5), b in sparse_dense(5), alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let c = SparseMatrix::from_dense(&a).add_scaled(alpha, &SparseMatrix::from_dense(&b), beta).unwrap();
        let want = &a * alpha + &b * beta;
        prop_assert!((c.to_dense() - want).abs().max() <= 1e-12);
    }

    #[test]
    fn relative_norm_properties(u in prop::collection::vec(-10.0..10.0f64, 1..20), scale in 0.1..100.0f64) {
        let r: Vec<f64> = u.iter().map(|x| x + 1.0).collect();
        prop_assert_eq!(ErrorNorm::Full.relative(&u, &u), 0.0);
        let e = ErrorNorm::Full.relative(&u, &r);
        prop_assert!(e >= 0.0);
        let us: Vec<f64> = u.iter().map(|x| x * scale).collect();
        let rs: Vec<f64> = r.iter().map(|x| x * scale).collect();
        prop_assert!((ErrorNorm::Full.relative(&us, &rs) - e).abs() <= 1e-12 * e.max(1.0));
        prop_assert!(ErrorNorm::Range(0, u.len()).relative(&u, &r) == e);
    }

    #[test]
    fn power_law_slope_is_recovered(order in 0.5..6.0f64, c in 1e-3..1e3f64, n in 3usize..8) {
        let rows: Vec<ResultRow> = (0..n).map(|i| {
            let dt = 0.2 / 2f64.powi(i as i32);
            ResultRow { scheme: Scheme::Epi3, dt, error_linf: c * dt.powf(order), cpu_seconds: 0.0, steps: 0, matvecs: 0, substeps: 0 }
        }).collect();
        let fit = fit_order(Scheme::Epi3, &rows, 0.0);
        prop_assert!((fit.order.unwrap() - order).abs() <= 1e-9);
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.dt.ln(), r.error_linf.ln())).collect();
        prop_assert!((least_squares_slope(&pts) - order).abs() <= 1e-9);
    }

    #[test]
    fn csv_line_round_trips_numbers(dt in 1e-6..1.0f64, err in 1e-16..1.0f64, steps in 0usize..10_000) {
        let row = ResultRow { scheme: Scheme::Exprb53, dt, error_linf: err, cpu_seconds: 0.5, steps, matvecs: 3 * steps, substeps: steps };
        let line = row.csv_line();
        let f: Vec<&str> = line.trim_end().split(',').collect();
        prop_assert_eq!(f.len(), 7);
        prop_assert_eq!(f[0], "exprb53");
        prop_assert_eq!(f[1].parse::<f64>().unwrap(), dt);
        prop_assert_eq!(f[2].parse::<f64>().unwrap(), err);
        prop_assert_eq!(f[4].parse::<usize>().unwrap(), steps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_recursion_and_oracle(norm in 1e-3..20.0f64, seed in 0u64..10_000) {
        let z = random_matrix(6, norm, seed);
        let set = phi_dense_all(&z, 4).unwrap();
        let mut inv_fact = 1.0;
        for k in 0..4 {
            let resid = &z * set.get(k + 1) + DenseMatrix::identity(6, 6) * inv_fact - set.get(k);
            prop_assert!(resid.norm() <= 1e-12 * set.get(k).norm());
            inv_fact /= (k + 1) as f64;
        }
        let oracle = taylor_phi(&z, 2);
        prop_assert!((set.get(2) - &oracle).norm() <= 1e-12 * oracle.norm());
    }

    #[test]
    fn manufactured_solution_solves_the_system(seed in 0u64..1000, t in 0.0..2.0f64) {
        let p = Manufactured::new(5, -1e3, -1.0, seed);
        let h = 1e-5;
        let a = p.exact_solution(t - h).unwrap();
        let b = p.exact_solution(t + h).unwrap();
        let f = p.eval_rhs(&p.exact_solution(t).unwrap());
        for i in 0..p.dim() {
            let fd = (b[i] - a[i]) / (2.0 * h);
            prop_assert!((fd - f[i]).abs() <= 1e-7 * (1.0 + f[i].abs()));
        }
    }

    #[test]
    fn sparse_matmul_matches_dense(a in sparse_dense(5), b in sparse_dense(5)) {
        let c = SparseMatrix::from_dense(&a).matmul(&SparseMatrix::from_dense(&b)).unwrap();
        prop_assert!((c.to_dense() - &a * &b).abs().max() <= 1e-12 * (1.0 + (&a * &b).abs().max()));
    }
}
