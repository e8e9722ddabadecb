//! Right-hand side and analytic Jacobian of the shallow-water system.

use super::operators::DiscreteOperators;
use super::SweError;
use crate::integrators::OdeProblem;
use crate::numkernel::SparseMatrix;

/// Views of the stacked state `[u_x; u_y; u_z; h]`.
pub fn split_state(u: &[f64], cells: usize) -> ([&[f64]; 3], &[f64]) {
    let (ux, rest) = u.split_at(cells);
    let (uy, rest) = rest.split_at(cells);
    let (uz, h) = rest.split_at(cells);
    ([ux, uy, uz], h)
}

/// `P = u × n` componentwise: `P_x = n_y u_z − n_z u_y`, and cyclic.
fn cross_normal(ops: &DiscreteOperators, vel: &[&[f64]; 3]) -> [Vec<f64>; 3] {
    let n = &ops.normal;
    let c = ops.cells();
    let comp = |a: usize| -> Vec<f64> {
        let (b, d) = ((a + 1) % 3, (a + 2) % 3);
        (0..c).map(|i| n[b][i] * vel[d][i] - n[d][i] * vel[b][i]).collect()
    };
    [comp(0), comp(1), comp(2)]
}

/// Absolute vorticity `η = V_x u_x + V_y u_y + V_z u_z + f`.
pub fn absolute_vorticity(ops: &DiscreteOperators, vel: &[&[f64]; 3]) -> Vec<f64> {
    let mut eta = ops.coriolis.clone();
    for a in 0..3 {
        let z = ops.vort[a].spmv(vel[a]).expect("state length checked");
        eta.iter_mut().zip(&z).for_each(|(e, v)| *e += v);
    }
    eta
}

/// The three Jacobian parts: relative vorticity, rotation plus
/// dissipation, and mass-velocity coupling.
#[derive(Clone, Debug)]
pub struct JacobianBlocks {
    pub vorticity: SparseMatrix,
    pub rotation: SparseMatrix,
    pub mass: SparseMatrix,
}

impl JacobianBlocks {
    pub fn total(&self) -> SparseMatrix {
        self.vorticity
            .add_scaled(1.0, &self.rotation, 1.0)
            .and_then(|s| s.add_scaled(1.0, &self.mass, 1.0))
            .expect("equal block sizes")
    }
}

/// Shallow-water right-hand side on a fixed operator set.
#[derive(Clone, Debug)]
pub struct ShallowWater {
    pub ops: DiscreteOperators,
    /// Test hook: scales the mass-coupling Jacobian block when set.
    pub mass_block_corruption: Option<f64>,
}

impl ShallowWater {
    pub fn new(ops: DiscreteOperators) -> Self {
        Self { ops, mass_block_corruption: None }
    }

    fn check_len(&self, u: &[f64]) -> Result<(), SweError> {
        if u.len() != self.ops.state_len() {
            return Err(SweError::DimensionMismatch { expected: self.ops.state_len(), found: u.len() });
        }
        Ok(())
    }

    /// Time derivative, failing on non-finite values with the first offending
    /// variable and cell.
    pub fn tendency(&self, u: &[f64]) -> Result<Vec<f64>, SweError> {
        self.check_len(u)?;
        let out = self.tendency_unchecked(u);
        if let Some(pos) = out.iter().position(|v| !v.is_finite()) {
            let c = self.ops.cells();
            return Err(SweError::NonFinite { variable: ["u_x", "u_y", "u_z", "h"][pos / c], cell: pos % c });
        }
        Ok(out)
    }

    fn tendency_unchecked(&self, u: &[f64]) -> Vec<f64> {
        let ops = &self.ops;
        let c = ops.cells();
        let (vel, h) = split_state(u, c);
        let eta = absolute_vorticity(ops, &vel);
        let p = cross_normal(ops, &vel);
        let energy: Vec<f64> = (0..c)
            .map(|i| 0.5 * (vel[0][i] * vel[0][i] + vel[1][i] * vel[1][i] + vel[2][i] * vel[2][i]) + ops.gravity * (h[i] + ops.surface[i]))
            .collect();
        let mut out = vec![0.0; 4 * c];
        for a in 0..3 {
            let ge = ops.grad[a].spmv(&energy).expect("lengths match");
            let block = &mut out[a * c..(a + 1) * c];
            for i in 0..c {
                block[i] = -eta[i] * p[a][i] - ge[i];
            }
        }
        {
            let block = &mut out[3 * c..];
            for a in 0..3 {
                let flux: Vec<f64> = (0..c).map(|i| vel[a][i] * h[i]).collect();
                let d = ops.div[a].spmv(&flux).expect("lengths match");
                block.iter_mut().zip(&d).for_each(|(o, v)| *o -= v);
            }
        }
        if ops.nu != 0.0 {
            for v in 0..4 {
                let d = ops.apply_dissipation(&u[v * c..(v + 1) * c]);
                out[v * c..(v + 1) * c].iter_mut().zip(&d).for_each(|(o, x)| *o += x);
            }
        }
        out
    }

    /// `J_v`, `J_r`, `J_m` at state `u`.
    pub fn jacobian_blocks(&self, u: &[f64]) -> Result<JacobianBlocks, SweError> {
        self.check_len(u)?;
        let ops = &self.ops;
        let c = ops.cells();
        let (vel, h) = split_state(u, c);
        let eta = absolute_vorticity(ops, &vel);
        let p = cross_normal(ops, &vel);

        // J_v: −diag(P_a) V_b in velocity rows/columns.
        let mut vort_blocks: Vec<Vec<Option<SparseMatrix>>> = vec![vec![None; 4]; 4];
        for a in 0..3 {
            let neg_p: Vec<f64> = p[a].iter().map(|v| -v).collect();
            for b in 0..3 {
                vort_blocks[a][b] = Some(ops.vort[b].scale_rows(&neg_p));
            }
        }

        // J_r: D_f on the diagonal; −η ∂P_a/∂u_b off the diagonal, with
        // ∂P_a/∂u_{a+2} = n_{a+1} and ∂P_a/∂u_{a+1} = −n_{a+2} (cyclic).
        let mut rot_blocks: Vec<Vec<Option<SparseMatrix>>> = vec![vec![None; 4]; 4];
        for (a, row) in rot_blocks.iter_mut().enumerate() {
            row[a] = Some(ops.dissipation.clone());
            if a == 3 {
                break;
            }
            let (b1, b2) = ((a + 1) % 3, (a + 2) % 3);
            let d1: Vec<f64> = (0..c).map(|i| eta[i] * ops.normal[b2][i]).collect();
            let d2: Vec<f64> = (0..c).map(|i| -eta[i] * ops.normal[b1][i]).collect();
            row[b1] = Some(SparseMatrix::diagonal(&d1));
            row[b2] = Some(SparseMatrix::diagonal(&d2));
        }

        // J_m: −G_a diag(u_b), −g G_a, −D_b diag(h), −Σ_a D_a diag(u_a).
        let mut mass_blocks: Vec<Vec<Option<SparseMatrix>>> = vec![vec![None; 4]; 4];
        let k = self.mass_block_corruption.unwrap_or(1.0);
        for a in 0..3 {
            for b in 0..3 {
                mass_blocks[a][b] = Some(ops.grad[a].scale_cols(vel[b]).scaled(-k));
            }
            mass_blocks[a][3] = Some(ops.grad[a].scaled(-k * ops.gravity));
            mass_blocks[3][a] = Some(ops.div[a].scale_cols(h).scaled(-k));
        }
        let mut hh = SparseMatrix::zeros(c, c);
        for a in 0..3 {
            hh = hh.add_scaled(1.0, &ops.div[a].scale_cols(vel[a]), -k).expect("square");
        }
        mass_blocks[3][3] = Some(hh);

        let assemble = |blocks: &Vec<Vec<Option<SparseMatrix>>>| {
            let refs: Vec<Vec<Option<&SparseMatrix>>> = blocks.iter().map(|r| r.iter().map(Option::as_ref).collect()).collect();
            SparseMatrix::from_blocks(c, &refs)
        };
        Ok(JacobianBlocks { vorticity: assemble(&vort_blocks), rotation: assemble(&rot_blocks), mass: assemble(&mass_blocks) })
    }

    /// `J = J_v + J_r + J_m`.
    pub fn assemble_jacobian(&self, u: &[f64]) -> Result<SparseMatrix, SweError> {
        Ok(self.jacobian_blocks(u)?.total())
    }
}

impl OdeProblem for ShallowWater {
    fn dim(&self) -> usize {
        self.ops.state_len()
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.tendency_unchecked(u));
    }

    fn jacobian(&self, u: &[f64]) -> Option<SparseMatrix> {
        self.assemble_jacobian(u).ok()
    }
}
