//! Gaussian-hill scenarios described by `key = value` files.

use super::operators::{default_dissipation_coefficient, planar_periodic_operators, DiscreteOperators, DEFAULT_CORIOLIS, DEFAULT_GRAVITY};
use super::SweError;
use crate::config::KeyValues;

/// Grid, physics and initial-condition parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing (m).
    pub dx: f64,
    /// Coriolis parameter (1/s).
    pub f0: f64,
    pub gravity: f64,
    pub gamma_h: f64,
    /// Overrides the `γ_h`-derived coefficient when set.
    pub nu: Option<f64>,
    pub mean_depth: f64,
    pub hill_amplitude: f64,
    /// e-folding radius (m).
    pub hill_radius: f64,
    /// Hill center as fractions of the domain.
    pub hill_x: f64,
    pub hill_y: f64,
    /// Start in discrete geostrophic balance instead of at rest.
    pub balanced: bool,
    /// Time step (s) and step count for `run`.
    pub dt: f64,
    pub steps: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            dx: 1.0e5,
            f0: DEFAULT_CORIOLIS,
            gravity: DEFAULT_GRAVITY,
            gamma_h: 0.04e-2,
            nu: None,
            mean_depth: 1000.0,
            hill_amplitude: 50.0,
            hill_radius: 4.0e5,
            hill_x: 0.5,
            hill_y: 0.5,
            balanced: false,
            dt: 600.0,
            steps: 100,
        }
    }
}

pub const SCENARIO_KEYS: [&str; 15] = [
    "nx",
    "ny",
    "dx",
    "f0",
    "g",
    "gamma_h",
    "nu",
    "mean_depth",
    "hill_amplitude",
    "hill_radius",
    "hill_x",
    "hill_y",
    "balanced",
    "dt",
    "steps",
];

impl Scenario {
    /// Reads scenario keys, ignoring any others.
    pub fn from_config(kv: &KeyValues) -> Result<Self, SweError> {
        let d = Self::default();
        let s = Self {
            nx: kv.get_or("nx", d.nx)?,
            ny: kv.get_or("ny", d.ny)?,
            dx: kv.get_or("dx", d.dx)?,
            f0: kv.get_or("f0", d.f0)?,
            gravity: kv.get_or("g", d.gravity)?,
            gamma_h: kv.get_or("gamma_h", d.gamma_h)?,
            nu: kv.get("nu")?,
            mean_depth: kv.get_or("mean_depth", d.mean_depth)?,
            hill_amplitude: kv.get_or("hill_amplitude", d.hill_amplitude)?,
            hill_radius: kv.get_or("hill_radius", d.hill_radius)?,
            hill_x: kv.get_or("hill_x", d.hill_x)?,
            hill_y: kv.get_or("hill_y", d.hill_y)?,
            balanced: kv.get_or("balanced", d.balanced)?,
            dt: kv.get_or("dt", d.dt)?,
            steps: kv.get_or("steps", d.steps)?,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, SweError> {
        let kv = KeyValues::parse(text)?;
        kv.check_known(&SCENARIO_KEYS)?;
        Self::from_config(&kv)
    }

    pub fn validate(&self) -> Result<(), SweError> {
        let bad = |m: &str| Err(SweError::InvalidScenario(m.to_string()));
        if !(self.mean_depth > 0.0) || !(self.mean_depth - self.hill_amplitude.abs() > 0.0) {
            return bad("depth must stay positive");
        }
        if !(self.hill_radius > 0.0) || !(self.dt > 0.0) || !(self.gamma_h >= 0.0) {
            return bad("hill_radius and dt must be positive, gamma_h non-negative");
        }
        if self.balanced && self.f0 == 0.0 {
            return bad("balanced start needs f0 != 0");
        }
        Ok(())
    }

    pub fn viscosity(&self) -> f64 {
        self.nu.unwrap_or_else(|| default_dissipation_coefficient(self.gamma_h, self.dx))
    }

    pub fn operators(&self) -> Result<DiscreteOperators, SweError> {
        Ok(planar_periodic_operators(self.nx, self.ny, self.dx)?
            .with_coriolis(self.f0)
            .with_gravity(self.gravity)
            .with_dissipation(self.viscosity()))
    }

    /// Height `H + A exp(−r²/R²)` with periodic distance; velocity at rest or
    /// in geostrophic balance `u = (g/f) ẑ × ∇h`.
    pub fn initial_state(&self, ops: &DiscreteOperators) -> Vec<f64> {
        let c = ops.cells();
        let (lx, ly) = ops.extent();
        let (cx, cy) = (self.hill_x * lx, self.hill_y * ly);
        let wrap = |d: f64, l: f64| d - l * (d / l).round();
        let mut u = vec![0.0; 4 * c];
        for k in 0..c {
            let (x, y) = ops.cell_center(k);
            let r2 = wrap(x - cx, lx).powi(2) + wrap(y - cy, ly).powi(2);
            u[3 * c + k] = self.mean_depth + self.hill_amplitude * (-r2 / (self.hill_radius * self.hill_radius)).exp();
        }
        if self.balanced {
            let h = u[3 * c..].to_vec();
            let hx = ops.grad[0].spmv(&h).expect("lengths match");
            let hy = ops.grad[1].spmv(&h).expect("lengths match");
            let s = ops.gravity / self.f0;
            for k in 0..c {
                u[k] = -s * hy[k];
                u[c + k] = s * hx[k];
            }
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text() {
        let s = Scenario::parse("nx = 16\nny = 12\nbalanced = true\ngamma_h = 0\n").unwrap();
        assert_eq!((s.nx, s.ny), (16, 12));
        assert!(s.balanced);
        assert_eq!(s.viscosity(), 0.0);
        assert!(Scenario::parse("bogus = 1").is_err());
        assert!(Scenario::parse("hill_amplitude = 2000").is_err());
    }

    #[test]
    fn hill_peaks_at_center() {
        let s = Scenario { nx: 8, ny: 8, hill_x: 0.5 - 1.0 / 16.0, hill_y: 0.5 - 1.0 / 16.0, ..Default::default() };
        let ops = s.operators().unwrap();
        let u = s.initial_state(&ops);
        let h = &u[3 * 64..];
        let k = h.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(k, 3 * 8 + 3);
        assert!((h[k] - s.mean_depth - s.hill_amplitude).abs() < 1e-9);
    }
}
