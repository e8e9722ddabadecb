//! Conserved-quantity totals.

use super::model::{absolute_vorticity, split_state};
use super::operators::DiscreteOperators;
use super::SweError;

/// Area-weighted totals of `h`, `g h + |u|²/2` and `(ζ + f)²/(2h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub mass: f64,
    pub energy: f64,
    pub enstrophy: f64,
}

/// `(q(t) − q(0)) / q(0)` for each total.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Drift {
    pub mass: f64,
    pub energy: f64,
    pub enstrophy: f64,
}

impl Diagnostics {
    pub fn drift_from(&self, initial: &Diagnostics) -> Drift {
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b) / b };
        Drift {
            mass: rel(self.mass, initial.mass),
            energy: rel(self.energy, initial.energy),
            enstrophy: rel(self.enstrophy, initial.enstrophy),
        }
    }
}

pub fn diagnostics(ops: &DiscreteOperators, u: &[f64]) -> Result<Diagnostics, SweError> {
    if u.len() != ops.state_len() {
        return Err(SweError::DimensionMismatch { expected: ops.state_len(), found: u.len() });
    }
    let c = ops.cells();
    let (vel, h) = split_state(u, c);
    if let Some(cell) = h.iter().position(|&v| !(v > 0.0)) {
        return Err(SweError::NonPositiveDepth { cell, value: h[cell] });
    }
    let eta = absolute_vorticity(ops, &vel);
    let area = ops.cell_area();
    let (mut mass, mut energy, mut enstrophy) = (0.0, 0.0, 0.0);
    for i in 0..c {
        let ke = 0.5 * (vel[0][i] * vel[0][i] + vel[1][i] * vel[1][i] + vel[2][i] * vel[2][i]);
        mass += h[i];
        energy += ops.gravity * h[i] + ke;
        enstrophy += eta[i] * eta[i] / (2.0 * h[i]);
    }
    Ok(Diagnostics { mass: mass * area, energy: energy * area, enstrophy: enstrophy * area })
}

/// Running record of totals against the initial state.
#[derive(Clone, Debug)]
pub struct ConservationMonitor {
    pub initial: Diagnostics,
    pub max_drift: Drift,
    pub last: Drift,
}

impl ConservationMonitor {
    pub fn new(initial: Diagnostics) -> Self {
        Self { initial, max_drift: Drift::default(), last: Drift::default() }
    }

    pub fn observe(&mut self, d: &Diagnostics) -> Drift {
        let drift = d.drift_from(&self.initial);
        let m = &mut self.max_drift;
        m.mass = m.mass.max(drift.mass.abs());
        m.energy = m.energy.max(drift.energy.abs());
        m.enstrophy = m.enstrophy.max(drift.enstrophy.abs());
        self.last = drift;
        drift
    }
}
