//! Discrete operators on a doubly periodic planar grid.

use super::SweError;
use crate::numkernel::SparseMatrix;

pub const DEFAULT_GRAVITY: f64 = 9.80616;
pub const DEFAULT_CORIOLIS: f64 = 1e-4;

/// Sparse operator set and physical parameters.
///
/// Velocities are full Cartesian three-vectors. On the f-plane the surface
/// normal is `ẑ`, the `z` gradient and divergence operators vanish, and the
/// vorticity operators give `∂u_y/∂x − ∂u_x/∂y`.
#[derive(Clone, Debug)]
pub struct DiscreteOperators {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// `G_x, G_y, G_z`.
    pub grad: [SparseMatrix; 3],
    /// `D_x, D_y, D_z`.
    pub div: [SparseMatrix; 3],
    /// `V_x, V_y, V_z`.
    pub vort: [SparseMatrix; 3],
    pub laplacian: SparseMatrix,
    /// `D_f = −ν L²`.
    pub dissipation: SparseMatrix,
    /// Surface normal components per cell.
    pub normal: [Vec<f64>; 3],
    pub coriolis: Vec<f64>,
    pub surface: Vec<f64>,
    pub gravity: f64,
    pub nu: f64,
}

/// Periodic centered-difference first derivative along one axis.
fn centered(nx: usize, ny: usize, dx: f64, along_x: bool) -> SparseMatrix {
    let n = nx * ny;
    let mut t = Vec::with_capacity(2 * n);
    let c = 0.5 / dx;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let (plus, minus) = if along_x {
                (j * nx + (i + 1) % nx, j * nx + (i + nx - 1) % nx)
            } else {
                (((j + 1) % ny) * nx + i, ((j + ny - 1) % ny) * nx + i)
            };
            t.push((k, plus, c));
            t.push((k, minus, -c));
        }
    }
    SparseMatrix::from_triplets(n, n, &t).expect("indices in range")
}

fn five_point(nx: usize, ny: usize, dx: f64) -> SparseMatrix {
    let n = nx * ny;
    let c = 1.0 / (dx * dx);
    let mut t = Vec::with_capacity(5 * n);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            t.push((k, k, -4.0 * c));
            t.push((k, j * nx + (i + 1) % nx, c));
            t.push((k, j * nx + (i + nx - 1) % nx, c));
            t.push((k, ((j + 1) % ny) * nx + i, c));
            t.push((k, ((j + ny - 1) % ny) * nx + i, c));
        }
    }
    SparseMatrix::from_triplets(n, n, &t).expect("indices in range")
}

/// f-plane operator set with `n = ẑ`, constant Coriolis parameter, default
/// gravity, flat bottom and no dissipation.
pub fn planar_periodic_operators(nx: usize, ny: usize, dx: f64) -> Result<DiscreteOperators, SweError> {
    if nx < 4 || ny < 4 {
        return Err(SweError::InvalidGrid(format!("grid {nx}x{ny} is smaller than 4x4")));
    }
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(SweError::InvalidGrid(format!("spacing must be positive, got {dx}")));
    }
    let n = nx * ny;
    let ddx = centered(nx, ny, dx, true);
    let ddy = centered(nx, ny, dx, false);
    let zero = SparseMatrix::zeros(n, n);
    let laplacian = five_point(nx, ny, dx);
    Ok(DiscreteOperators {
        nx,
        ny,
        dx,
        grad: [ddx.clone(), ddy.clone(), zero.clone()],
        div: [ddx.clone(), ddy.clone(), zero.clone()],
        vort: [ddy.scaled(-1.0), ddx, zero.clone()],
        dissipation: zero,
        laplacian,
        normal: [vec![0.0; n], vec![0.0; n], vec![1.0; n]],
        coriolis: vec![DEFAULT_CORIOLIS; n],
        surface: vec![0.0; n],
        gravity: DEFAULT_GRAVITY,
        nu: 0.0,
    })
}

impl DiscreteOperators {
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Length of the stacked state `[u_x; u_y; u_z; h]`.
    pub fn state_len(&self) -> usize {
        4 * self.cells()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    pub fn with_coriolis(mut self, f0: f64) -> Self {
        self.coriolis = vec![f0; self.cells()];
        self
    }

    pub fn with_gravity(mut self, g: f64) -> Self {
        self.gravity = g;
        self
    }

    pub fn with_surface(mut self, h_s: Vec<f64>) -> Result<Self, SweError> {
        if h_s.len() != self.cells() {
            return Err(SweError::DimensionMismatch { expected: self.cells(), found: h_s.len() });
        }
        self.surface = h_s;
        Ok(self)
    }

    /// Sets `ν` and assembles `D_f = −ν L²`.
    pub fn with_dissipation(mut self, nu: f64) -> Self {
        self.nu = nu;
        self.dissipation = if nu == 0.0 {
            SparseMatrix::zeros(self.cells(), self.cells())
        } else {
            let l2 = self.laplacian.matmul(&self.laplacian).expect("square operators");
            l2.scaled(-nu)
        };
        self
    }

    /// Five-point Laplacian in difference form, so constants map to exact zeros.
    pub fn apply_laplacian(&self, x: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let inv = 1.0 / (self.dx * self.dx);
        (0..nx * ny)
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                let xc = x[k];
                let e = x[j * nx + (i + 1) % nx] - xc;
                let w = x[j * nx + (i + nx - 1) % nx] - xc;
                let n = x[((j + 1) % ny) * nx + i] - xc;
                let s = x[((j + ny - 1) % ny) * nx + i] - xc;
                ((e + w) + (n + s)) * inv
            })
            .collect()
    }

    /// `−ν L² x`, matching `dissipation` up to roundoff.
    pub fn apply_dissipation(&self, x: &[f64]) -> Vec<f64> {
        let l2 = self.apply_laplacian(&self.apply_laplacian(x));
        l2.into_iter().map(|v| -self.nu * v).collect()
    }

    /// Cell-center coordinates `(x, y)` of cell `k`.
    pub fn cell_center(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % self.nx, k / self.nx);
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dx)
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.dx, self.ny as f64 * self.dx)
    }
}

/// `ν = γ_h Δx̄^{n_γ} / Δt_e`.
///
/// On the sphere `Δx̄ = √(4πa²/N_g)` (see [`sphere_mean_spacing`]); on the
/// planar grid it is the uniform spacing.
pub fn dissipation_coefficient(gamma_h: f64, mean_spacing: f64, dt_e: f64, n_gamma: i32) -> f64 {
    gamma_h * mean_spacing.powi(n_gamma) / dt_e
}

/// Standard values `Δt_e = 240 s`, `n_γ = 4`.
pub fn default_dissipation_coefficient(gamma_h: f64, mean_spacing: f64) -> f64 {
    dissipation_coefficient(gamma_h, mean_spacing, 240.0, 4)
}

/// Average node separation `√(4πa²/N_g)` of a sphere of radius `a` with
/// `N_g` nodes.
pub fn sphere_mean_spacing(radius: f64, nodes: usize) -> f64 {
    (4.0 * std::f64::consts::PI * radius * radius / nodes as f64).sqrt()
}
