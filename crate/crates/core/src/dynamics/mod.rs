//! Finite-dimensional open-quantum-system engine.
//!
//! A [`QuantumSystem`] is a Hamiltonian plus an ordered list of collapse
//! channels. The master-equation side ([`lindblad`]) and the regression
//! side ([`correlation`]) both consume it, as does the trajectory engine.
//!
//! The Lindblad structure used here (decay channels, pure-dephasing
//! projectors, sensor losses) is reconstructed from the physical model of
//! the cascade rather than transcribed from a published master equation.

pub mod correlation;
pub mod lindblad;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result, C64};

pub use correlation::{two_time_correlation, two_time_correlation_forward};
pub use lindblad::{evolve, lindblad_rhs, liouvillian, Propagator};

/// Relative Hermiticity tolerance for Hamiltonians.
pub const HAMILTONIAN_HERMITICITY_TOL: f64 = 1e-12;
/// Absolute Hermiticity tolerance for density matrices.
pub const STATE_HERMITICITY_TOL: f64 = 1e-10;

/// Uniform time grid `t0, t0 + dt, ..., t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_max: f64, dt: f64) -> Result<Self> {
        if !(t0.is_finite() && t_max.is_finite() && dt.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if t0 >= t_max {
            return Err(Error::InvalidGrid(format!("t0 = {t0} must be < t_max = {t_max}")));
        }
        if dt <= 0.0 {
            return Err(Error::InvalidGrid(format!("dt = {dt} must be > 0")));
        }
        let ratio = (t_max - t0) / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!(
                "(t_max - t0)/dt = {ratio} is not an integer"
            )));
        }
        Ok(Self {
            t0,
            dt,
            steps: steps as usize,
        })
    }

    /// Grid with `steps` intervals of width `dt` starting at `t0`.
    pub fn with_steps(t0: f64, dt: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("at least one step required".into()));
        }
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt = {dt} must be finite and > 0")));
        }
        Ok(Self { t0, dt, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.steps)
    }

    /// Number of intervals.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points (`steps + 1`).
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelLabel {
    BiexcitonDecay,
    ExcitonDecay,
    BiexcitonDephasing,
    ExcitonDephasing,
    Sensor1Decay,
    Sensor2Decay,
}

impl ChannelLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelLabel::BiexcitonDecay => "biexciton-decay",
            ChannelLabel::ExcitonDecay => "exciton-decay",
            ChannelLabel::BiexcitonDephasing => "biexciton-dephasing",
            ChannelLabel::ExcitonDephasing => "exciton-dephasing",
            ChannelLabel::Sensor1Decay => "sensor-1-decay",
            ChannelLabel::Sensor2Decay => "sensor-2-decay",
        }
    }
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Collapse operator with its rate folded in: `operator = sqrt(rate) * J`.
#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub label: ChannelLabel,
    pub operator: CMatrix,
}

impl CollapseChannel {
    /// Builds `sqrt(rate) * jump`, or `None` when the rate is exactly zero.
    pub fn scaled(label: ChannelLabel, rate: f64, jump: &CMatrix) -> Result<Option<Self>> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", format!("{label} rate {rate} must be >= 0")));
        }
        if rate == 0.0 {
            return Ok(None);
        }
        Ok(Some(Self {
            label,
            operator: jump * C64::from(rate.sqrt()),
        }))
    }
}

/// Hamiltonian plus collapse channels on a `dim`-dimensional Hilbert space.
#[derive(Debug, Clone)]
pub struct QuantumSystem {
    hamiltonian: CMatrix,
    channels: Vec<CollapseChannel>,
}

impl QuantumSystem {
    pub fn new(hamiltonian: CMatrix, channels: Vec<CollapseChannel>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if dim == 0 || hamiltonian.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: hamiltonian.ncols(),
            });
        }
        let scale = max_abs(&hamiltonian);
        let deviation = hermiticity_deviation(&hamiltonian);
        if deviation > HAMILTONIAN_HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian {
                what: "Hamiltonian",
                deviation,
            });
        }
        for ch in &channels {
            check_square(&ch.operator, dim)?;
            if max_abs(&ch.operator) == 0.0 {
                return Err(Error::param(
                    "channel",
                    format!("{} operator is identically zero", ch.label),
                ));
            }
        }
        Ok(Self {
            hamiltonian,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[CollapseChannel] {
        &self.channels
    }

    pub fn channel(&self, label: ChannelLabel) -> Option<&CollapseChannel> {
        self.channels.iter().find(|c| c.label == label)
    }
}

/// `|i><j|` on a `dim`-dimensional space.
pub fn ket_bra(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |M - M†|` over entries.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Smallest eigenvalue of a Hermitian matrix.
///
/// Entries below `1e-30` of the largest one are flushed to zero first:
/// the QR iteration returns `NaN` on blocks that sit deep in the
/// subnormal range, and such entries cannot move the result anyway.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let mut herm = (m + m.adjoint()) * C64::from(0.5);
    let floor = 1e-30 * max_abs(&herm);
    herm.iter_mut()
        .filter(|z| z.norm() < floor)
        .for_each(|z| *z = C64::new(0.0, 0.0));
    herm.symmetric_eigenvalues().min()
}

pub(crate) fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: if m.nrows() != dim { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_integer_step_count() {
        assert!(TimeGrid::new(0.0, 10.0, 0.5).is_ok());
        assert!(matches!(
            TimeGrid::new(0.0, 10.0, 0.3),
            Err(Error::InvalidGrid(_))
        ));
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1).is_err());
        let g = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.t_max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            QuantumSystem::new(h, vec![]),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn zero_rate_channel_is_omitted() {
        let j = ket_bra(2, 0, 1);
        assert!(CollapseChannel::scaled(ChannelLabel::ExcitonDecay, 0.0, &j)
            .unwrap()
            .is_none());
        let ch = CollapseChannel::scaled(ChannelLabel::ExcitonDecay, 4.0, &j)
            .unwrap()
            .unwrap();
        assert_eq!(ch.operator[(0, 1)], C64::new(2.0, 0.0));
    }
}
