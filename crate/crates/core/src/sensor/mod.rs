//! Sensor-method pipeline for frequency-filtered photon correlations.
//!
//! Two weakly coupled two-level sensors, one tuned to each emission line,
//! are attached to the three-level emitter. Sensor populations give the
//! filtered intensity `n(t)`, and regression on the sensor lowering
//! operator gives the field correlation `G¹(t, τ)`. Both feed the
//! time-resolved HOM coincidence function in [`hom`].
//!
//! Composite basis ordering is emitter ⊗ sensor 1 ⊗ sensor 2 with index
//! `4·e + 2·s₁ + s₂`.

pub mod emission;
pub mod hom;
pub mod pipeline;

use serde::{Deserialize, Serialize};

use crate::cascade::{
    self, derive_rates, emitter_channels, emitter_hamiltonian, CascadeParams, EMITTER_DIM,
};
use crate::dynamics::{ket_bra, ChannelLabel, CollapseChannel, QuantumSystem};
use crate::{CMatrix, Error, Result, C64};

pub use emission::{compute_emission, compute_emission_pair, EmissionFunctions, SimulationGrid};
pub use hom::{convolve_detector, hom_g2, HomResult};
pub use pipeline::{
    calibrate_sensor_linewidth, simulate_hom, visibility_sweep, CalibrationReport, HomPair,
    SweepRow,
};

/// Sensor–emitter coupling (ps⁻¹).
pub const DEFAULT_COUPLING: f64 = 1e-3;

/// Sensor linewidth selected by [`calibrate_sensor_linewidth`] so that the
/// Fourier-limited emitter with the measured lifetimes gives `P₀ = 0.15`.
/// The scan that produced it is committed in `configs/sensor_calibration.csv`.
pub const CALIBRATED_GAMMA_S: f64 = 0.025;

pub const SENSED_DIM: usize = EMITTER_DIM * 4;

/// Which emission line a sensor watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    Biexciton,
    Exciton,
}

impl Transition {
    pub const BOTH: [Transition; 2] = [Transition::Biexciton, Transition::Exciton];

    pub fn as_str(&self) -> &'static str {
        match self {
            Transition::Biexciton => "biexciton",
            Transition::Exciton => "exciton",
        }
    }

    fn index(&self) -> usize {
        match self {
            Transition::Biexciton => 0,
            Transition::Exciton => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// Coupling `g` (ps⁻¹).
    pub g: f64,
    /// Sensor linewidth `Γ_s` (ps⁻¹).
    pub gamma_s: f64,
    /// Sensor 1 frequency in the rotating frame (biexciton line, rad/ps).
    pub omega_1: f64,
    /// Sensor 2 frequency (exciton line, rad/ps).
    pub omega_2: f64,
}

impl SensorParams {
    /// Sensors centred on the two lines of `cascade` (`∓Δ_x`).
    pub fn for_cascade(cascade: &CascadeParams, gamma_s: f64) -> Self {
        Self {
            g: DEFAULT_COUPLING,
            gamma_s,
            omega_1: -cascade.delta_x,
            omega_2: cascade.delta_x,
        }
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    /// Checks perturbative coupling and line resolution against `cascade`.
    ///
    /// "Weak" is taken as `g ≤ Γ_s/2` and `g ≤ min(γ_b, γ_x)/2`.
    pub fn validate(&self, cascade: &CascadeParams) -> Result<()> {
        let rates = derive_rates(cascade)?;
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::param("g", format!("{} must be >= 0", self.g)));
        }
        if !(self.gamma_s > 0.0 && self.gamma_s.is_finite()) {
            return Err(Error::param("gamma_s", format!("{} must be > 0", self.gamma_s)));
        }
        if self.g > 0.5 * self.gamma_s {
            return Err(Error::param(
                "g",
                format!("{} not perturbative against gamma_s = {}", self.g, self.gamma_s),
            ));
        }
        let slowest = rates.gamma_b.min(rates.gamma_x);
        if self.g > 0.5 * slowest {
            return Err(Error::param(
                "g",
                format!("{} not perturbative against emitter rate {slowest}", self.g),
            ));
        }
        let separation = (self.omega_2 - self.omega_1).abs();
        if self.gamma_s >= separation {
            return Err(Error::param(
                "gamma_s",
                format!("{} does not resolve lines separated by {separation}", self.gamma_s),
            ));
        }
        Ok(())
    }
}

/// Emitter plus two sensors.
#[derive(Debug, Clone)]
pub struct SensedSystem {
    system: QuantumSystem,
    annihilators: [CMatrix; 2],
    cascade: CascadeParams,
    sensors: SensorParams,
}

impl SensedSystem {
    pub fn system(&self) -> &QuantumSystem {
        &self.system
    }

    pub fn cascade(&self) -> &CascadeParams {
        &self.cascade
    }

    pub fn sensors(&self) -> &SensorParams {
        &self.sensors
    }

    /// Sensor lowering operator `ξ_j` for the given line.
    pub fn annihilator(&self, line: Transition) -> &CMatrix {
        &self.annihilators[line.index()]
    }

    /// `|b, 0, 0⟩⟨b, 0, 0|`.
    pub fn initial_state(&self) -> CMatrix {
        let empty_sensors = ket_bra(4, 0, 0);
        cascade::initial_emitter_state().kronecker(&empty_sensors)
    }

    /// Emitter operator embedded in the composite space.
    pub fn emitter_operator(&self, op: &CMatrix) -> CMatrix {
        lift_emitter(op)
    }
}

fn lowering() -> CMatrix {
    let mut a = CMatrix::zeros(2, 2);
    a[(0, 1)] = C64::from(1.0);
    a
}

fn lift_emitter(op: &CMatrix) -> CMatrix {
    op.kronecker(&CMatrix::identity(4, 4))
}

pub fn build_sensed_system(cascade: &CascadeParams, sensors: &SensorParams) -> Result<SensedSystem> {
    sensors.validate(cascade)?;
    let rates = derive_rates(cascade)?;
    let id2 = CMatrix::identity(2, 2);
    let id3 = CMatrix::identity(EMITTER_DIM, EMITTER_DIM);
    let a = lowering();
    let xi1 = id3.kronecker(&a).kronecker(&id2);
    let xi2 = id3.kronecker(&id2).kronecker(&a);

    let emitter_lowering = lift_emitter(&(cascade::sigma_xb() + cascade::sigma_gx()));
    let mut h = lift_emitter(&emitter_hamiltonian(cascade));
    for (xi, omega) in [(&xi1, sensors.omega_1), (&xi2, sensors.omega_2)] {
        let xd = xi.adjoint();
        h += &xd * xi * C64::from(omega);
        let coupling = &emitter_lowering * &xd * C64::from(sensors.g);
        h += &coupling + coupling.adjoint();
    }

    let mut channels: Vec<CollapseChannel> = emitter_channels(&rates)?
        .into_iter()
        .map(|ch| CollapseChannel {
            label: ch.label,
            operator: lift_emitter(&ch.operator),
        })
        .collect();
    channels.extend(CollapseChannel::scaled(
        ChannelLabel::Sensor1Decay,
        sensors.gamma_s,
        &xi1,
    )?);
    channels.extend(CollapseChannel::scaled(
        ChannelLabel::Sensor2Decay,
        sensors.gamma_s,
        &xi2,
    )?);

    Ok(SensedSystem {
        system: QuantumSystem::new(h, channels)?,
        annihilators: [xi1, xi2],
        cascade: *cascade,
        sensors: *sensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{TAU_CB_PS, TAU_CX_PS};

    #[test]
    fn composite_dimension_and_channels() {
        let c = CascadeParams::measured().with_coherence(Some(TAU_CB_PS), Some(TAU_CX_PS));
        let s = build_sensed_system(&c, &SensorParams::for_cascade(&c, CALIBRATED_GAMMA_S)).unwrap();
        assert_eq!(s.system().dim(), SENSED_DIM);
        assert_eq!(s.system().channels().len(), 6);
    }

    #[test]
    fn sensor_invariants_are_enforced() {
        let c = CascadeParams::measured();
        let base = SensorParams::for_cascade(&c, CALIBRATED_GAMMA_S);
        assert!(base.validate(&c).is_ok());
        assert!(base.with_coupling(0.01).validate(&c).is_err());
        let unresolved = SensorParams {
            gamma_s: 25.0,
            ..base
        };
        assert!(unresolved.validate(&c).is_err());
        assert!(SensorParams { gamma_s: 0.0, ..base }.validate(&c).is_err());
    }

    #[test]
    fn annihilators_lower_sensor_occupation() {
        let c = CascadeParams::measured();
        let s = build_sensed_system(&c, &SensorParams::for_cascade(&c, 0.02)).unwrap();
        // |b,1,0> (index 10) -> |b,0,0> (index 8)
        assert_eq!(s.annihilator(Transition::Biexciton)[(8, 10)], C64::from(1.0));
        // |b,0,1> (index 9) -> |b,0,0>
        assert_eq!(s.annihilator(Transition::Exciton)[(8, 9)], C64::from(1.0));
        assert_eq!(s.initial_state()[(8, 8)], C64::from(1.0));
    }
}
