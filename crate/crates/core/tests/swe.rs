use expint::integrators::{integrate, RecordPolicy, Scheme};
use expint::numkernel::{norm_inf, SparseMatrix};
use expint::phipm::EngineSettings;
use expint::swe::*;

fn ops32() -> DiscreteOperators {
    planar_periodic_operators(32, 32, 1.0e5).unwrap().with_dissipation(default_dissipation_coefficient(0.04e-2, 1.0e5))
}

/// Term-by-term tendency written directly from the stencils, independent of
/// the sparse operator set.
fn naive_tendency(nx: usize, ny: usize, dx: f64, f0: f64, g: f64, nu: f64, u: &[f64]) -> Vec<f64> {
    let c = nx * ny;
    let at = |v: &[f64], i: isize, j: isize| -> f64 {
        let ii = i.rem_euclid(nx as isize) as usize;
        let jj = j.rem_euclid(ny as isize) as usize;
        v[jj * nx + ii]
    };
    let ddx = |v: &[f64], i: isize, j: isize| (at(v, i + 1, j) - at(v, i - 1, j)) / (2.0 * dx);
    let ddy = |v: &[f64], i: isize, j: isize| (at(v, i, j + 1) - at(v, i, j - 1)) / (2.0 * dx);
    let lap = |v: &[f64], i: isize, j: isize| {
        (at(v, i + 1, j) + at(v, i - 1, j) + at(v, i, j + 1) + at(v, i, j - 1) - 4.0 * at(v, i, j)) / (dx * dx)
    };
    let (ux, rest) = u.split_at(c);
    let (uy, rest) = rest.split_at(c);
    let (uz, h) = rest.split_at(c);
    let e: Vec<f64> = (0..c).map(|k| 0.5 * (ux[k] * ux[k] + uy[k] * uy[k] + uz[k] * uz[k]) + g * h[k]).collect();
    let fx: Vec<f64> = (0..c).map(|k| ux[k] * h[k]).collect();
    let fy: Vec<f64> = (0..c).map(|k| uy[k] * h[k]).collect();
    let mut out = vec![0.0; 4 * c];
    let vars = [ux, uy, uz, h];
    let laps: Vec<Vec<f64>> = vars
        .iter()
        .map(|v| {
            (0..c).map(|k| lap(v, (k % nx) as isize, (k / nx) as isize)).collect()
        })
        .collect();
    for j in 0..ny as isize {
        for i in 0..nx as isize {
            let k = j as usize * nx + i as usize;
            let eta = ddx(uy, i, j) - ddy(ux, i, j) + f0;
            // u × ẑ = (u_y, −u_x, 0)
            out[k] = -eta * (-uy[k]) - ddx(&e, i, j);
            out[c + k] = -eta * ux[k] - ddy(&e, i, j);
            out[2 * c + k] = 0.0;
            out[3 * c + k] = -ddx(&fx, i, j) - ddy(&fy, i, j);
            for (v, l) in laps.iter().enumerate() {
                out[v * c + k] -= nu * lap(l, i, j);
            }
        }
    }
    out
}

#[test]
fn rest_state_is_steady() {
    let ops = ops32().with_coriolis(1e-4);
    let mut u = vec![0.0; ops.state_len()];
    u[3 * ops.cells()..].iter_mut().for_each(|h| *h = 1000.0);
    let model = ShallowWater::new(ops);
    assert!(model.tendency(&u).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn constant_flow_without_rotation_is_steady() {
    let ops = planar_periodic_operators(8, 8, 1.0).unwrap().with_coriolis(0.0);
    let c = ops.cells();
    let mut u = vec![0.0; 4 * c];
    u[..c].iter_mut().for_each(|v| *v = 3.0);
    u[c..2 * c].iter_mut().for_each(|v| *v = -1.5);
    u[3 * c..].iter_mut().for_each(|v| *v = 10.0);
    let f = ShallowWater::new(ops).tendency(&u).unwrap();
    assert!(norm_inf(&f) < 1e-14);
}

#[test]
fn pressure_gradient_isolated() {
    let ops = planar_periodic_operators(16, 16, 1.0e5).unwrap().with_coriolis(0.0);
    let s = Scenario { nx: 16, ny: 16, gamma_h: 0.0, ..Default::default() };
    let u = s.initial_state(&ops);
    let c = ops.cells();
    let gh = [ops.grad[0].spmv(&u[3 * c..]).unwrap(), ops.grad[1].spmv(&u[3 * c..]).unwrap()];
    let g = ops.gravity;
    let f = ShallowWater::new(ops).tendency(&u).unwrap();
    for k in 0..c {
        assert!((f[k] + g * gh[0][k]).abs() < 1e-15);
        assert!((f[c + k] + g * gh[1][k]).abs() < 1e-15);
        assert_eq!(f[3 * c + k], 0.0);
    }
}

#[test]
fn tendency_matches_naive_evaluation() {
    let nu = 2.0e13;
    let ops = planar_periodic_operators(12, 10, 5.0e4).unwrap().with_coriolis(1.2e-4).with_dissipation(nu);
    let u = smooth_random_state(&ops, 800.0, 8.0, 3);
    let f = ShallowWater::new(ops.clone()).tendency(&u).unwrap();
    let want = naive_tendency(12, 10, 5.0e4, 1.2e-4, ops.gravity, nu, &u);
    let c = ops.cells();
    for v in 0..4 {
        let scale = norm_inf(&want[v * c..(v + 1) * c]).max(1e-300);
        let err = (0..c).map(|k| (f[v * c + k] - want[v * c + k]).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-13 * scale.max(norm_inf(&want)), "variable {v}: {err:e}");
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let model = ShallowWater::new(ops32());
    let u = smooth_random_state(&model.ops, 1000.0, 10.0, 11);
    let rep = jacobian_fd_check(&model, &u, 20, 5).unwrap();
    assert!(rep.max_rel_error <= 1e-6, "{:e}", rep.max_rel_error);
}

#[test]
fn jacobian_at_rest_is_nearly_exact() {
    let model = ShallowWater::new(ops32());
    let mut u = vec![0.0; model.ops.state_len()];
    let c = model.ops.cells();
    u[3 * c..].iter_mut().for_each(|h| *h = 1000.0);
    let rep = jacobian_fd_check(&model, &u, 5, 1).unwrap();
    assert!(rep.max_rel_error <= 1e-8, "{:e}", rep.max_rel_error);
}

#[test]
fn corrupted_mass_block_is_detected() {
    let mut model = ShallowWater::new(ops32());
    model.mass_block_corruption = Some(1.01);
    let u = smooth_random_state(&model.ops, 1000.0, 10.0, 11);
    let rep = jacobian_fd_check(&model, &u, 3, 5).unwrap();
    assert!(rep.max_rel_error > 1e-5);
}

fn block(m: &SparseMatrix, c: usize, bi: usize, bj: usize) -> SparseMatrix {
    let mut t = Vec::new();
    for r in 0..c {
        for (col, v) in m.row(bi * c + r) {
            if col >= bj * c && col < (bj + 1) * c {
                t.push((r, col - bj * c, v));
            }
        }
    }
    SparseMatrix::from_triplets(c, c, &t).unwrap()
}

#[test]
fn block_attribution() {
    let ops = planar_periodic_operators(8, 8, 1.0e5).unwrap().with_coriolis(0.0);
    let c = ops.cells();
    let model = ShallowWater::new(ops.clone());
    let mut rest = vec![0.0; 4 * c];
    rest[3 * c..].iter_mut().for_each(|h| *h = 500.0);
    let b = model.jacobian_blocks(&rest).unwrap();
    assert_eq!(b.vorticity.nnz(), 0);
    // Without rotation, dissipation or flow the rotation part is empty.
    assert_eq!(b.rotation.nnz(), 0);

    let u = smooth_random_state(&ops, 500.0, 5.0, 2);
    let b = model.jacobian_blocks(&u).unwrap();
    for a in 0..3 {
        let hb = block(&b.mass, c, a, 3);
        let want = ops.grad[a].scaled(-ops.gravity);
        assert_eq!(hb.to_dense(), want.to_dense());
    }
    let with_nu = ShallowWater::new(ops.clone().with_dissipation(1e12)).jacobian_blocks(&u).unwrap();
    assert!(block(&with_nu.rotation, c, 0, 0).nnz() > 0);
    assert_eq!(block(&b.rotation, c, 0, 0).nnz(), 0);
}

#[test]
fn diagnostics_at_rest() {
    let ops = ops32();
    let c = ops.cells();
    let mut u = vec![0.0; 4 * c];
    u[3 * c..].iter_mut().for_each(|h| *h = 1000.0);
    let d = diagnostics(&ops, &u).unwrap();
    let area = ops.cell_area();
    assert!((d.energy - ops.gravity * 1000.0 * c as f64 * area).abs() < 1e-9 * d.energy);
    assert!((d.enstrophy - 1e-8 / 2000.0 * c as f64 * area).abs() < 1e-12 * d.enstrophy);
    assert_eq!(d.drift_from(&d), Drift::default());
    u[3 * c + 5] = 0.0;
    assert!(matches!(diagnostics(&ops, &u), Err(SweError::NonPositiveDepth { cell: 5, .. })));
}

#[test]
fn hill_run_conserves_and_keeps_flow_planar() {
    let s = Scenario::default();
    let ops = s.operators().unwrap();
    let u0 = s.initial_state(&ops);
    let model = ShallowWater::new(ops.clone());
    let mut mon = ConservationMonitor::new(diagnostics(&ops, &u0).unwrap());
    let c = ops.cells();
    let mut max_uz: f64 = 0.0;
    integrate(&model, Scheme::Exprb42, &u0, s.dt, 100.0 * s.dt, EngineSettings::default(), RecordPolicy::Endpoints, &mut |_, u| {
        mon.observe(&diagnostics(&ops, u).unwrap());
        max_uz = max_uz.max(norm_inf(&u[2 * c..3 * c]));
    })
    .unwrap();
    let m = mon.max_drift;
    assert!(m.mass <= 1e-8, "mass drift {:e}", m.mass);
    assert!(m.energy <= 1e-3, "energy drift {:e}", m.energy);
    assert!(m.enstrophy <= 1e-3, "enstrophy drift {:e}", m.enstrophy);
    assert!(max_uz <= 1e-12);
}
