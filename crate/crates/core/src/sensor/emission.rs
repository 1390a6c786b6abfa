use serde::{Deserialize, Serialize};

use super::{SensedSystem, Transition};
use crate::dynamics::correlation::correlate_adjoint;
use crate::dynamics::lindblad::evolve_with;
use crate::dynamics::{trace, Propagator, TimeGrid};
use crate::{CMatrix, Error, Result};

/// Largest tolerated `n(t_max) / max n`.
const TRUNCATION_TOL: f64 = 1e-3;
/// Target number of regression slices for the default stride.
const DEFAULT_T_SLICES: usize = 400;

/// Shared step, span and regression stride for one sensor-method run.
///
/// The `t` and `τ` grids use the same step so that `n(t + τ)` falls on
/// the evolution grid; regression slices are taken every `t_stride`
/// points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    pub dt: f64,
    pub t_steps: usize,
    pub tau_steps: usize,
    pub t_stride: usize,
}

impl SimulationGrid {
    /// `dt = min(τ_b, τ_x, 1/Γ_s)/50`, `t ∈ [0, 12 τ_max]`,
    /// `τ ∈ [0, 8 τ_max]`, about 400 regression slices.
    pub fn default_for(tau_b: f64, tau_x: f64, gamma_s: f64) -> Self {
        let dt = tau_b.min(tau_x).min(1.0 / gamma_s) / 50.0;
        let longest = tau_b.max(tau_x);
        Self::with_spans(dt, 12.0 * longest, 8.0 * longest, DEFAULT_T_SLICES)
    }

    /// Rounds the spans up to whole steps and derives the stride from the
    /// requested slice count.
    pub fn with_spans(dt: f64, t_max: f64, tau_max: f64, t_slices: usize) -> Self {
        let t_steps = (t_max / dt).ceil() as usize;
        let tau_steps = ((tau_max / dt).ceil() as usize).min(t_steps);
        let t_stride = ((t_steps as f64 / t_slices.max(1) as f64).round() as usize).max(1);
        Self {
            dt,
            t_steps,
            tau_steps,
            t_stride,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt = {} must be > 0", self.dt)));
        }
        if self.t_steps == 0 || self.tau_steps == 0 || self.t_stride == 0 {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if self.tau_steps > self.t_steps {
            return Err(Error::InvalidGrid(format!(
                "delay span ({} steps) exceeds time span ({} steps)",
                self.tau_steps, self.t_steps
            )));
        }
        Ok(())
    }

    pub fn t_grid(&self) -> TimeGrid {
        TimeGrid::with_steps(0.0, self.dt, self.t_steps).expect("validated grid")
    }

    pub fn tau_grid(&self) -> TimeGrid {
        TimeGrid::with_steps(0.0, self.dt, self.tau_steps).expect("validated grid")
    }
}

/// Photon number and field correlation seen by one sensor.
#[derive(Debug, Clone)]
pub struct EmissionFunctions {
    pub transition: Transition,
    pub dt: f64,
    pub t_stride: usize,
    /// `n(t_k)` at every evolution point `t_k = k·dt`.
    pub n: Vec<f64>,
    /// `G¹(t_i, τ_k)` with `t_i = i·t_stride·dt`, `τ_k = k·dt`.
    pub g1: CMatrix,
}

impl EmissionFunctions {
    pub fn n_slices(&self) -> usize {
        self.g1.nrows()
    }

    pub fn n_tau(&self) -> usize {
        self.g1.ncols()
    }

    pub fn slice_time(&self, i: usize) -> f64 {
        (i * self.t_stride) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Intensity scaled to unit area.
    pub fn normalized_intensity(&self) -> Vec<f64> {
        let area = trapezoid(&self.n, self.dt);
        self.n.iter().map(|v| v / area).collect()
    }

    /// Largest relative violation of `|G¹(t,τ)|² ≤ n(t) n(t+τ)`.
    pub fn cauchy_schwarz_excess(&self) -> f64 {
        let n_max = self.n.iter().cloned().fold(0.0, f64::max);
        let floor = 1e-14 * n_max * n_max;
        let mut worst: f64 = 0.0;
        for i in 0..self.n_slices() {
            let ti = i * self.t_stride;
            for k in 0..self.n_tau() {
                let Some(&late) = self.n.get(ti + k) else {
                    break;
                };
                let bound = self.n[ti] * late;
                let lhs = self.g1[(i, k)].norm_sqr();
                worst = worst.max((lhs - bound) / (bound + floor));
            }
        }
        worst
    }
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

fn emission_from_states(
    sensed: &SensedSystem,
    propagator: &Propagator,
    states: &[CMatrix],
    grid: &SimulationGrid,
    line: Transition,
) -> Result<EmissionFunctions> {
    let xi = sensed.annihilator(line);
    let xd = xi.adjoint();
    let number = &xd * xi;
    let n: Vec<f64> = states.iter().map(|r| trace(&(&number * r)).re).collect();
    let peak = n.iter().cloned().fold(0.0, f64::max);
    let last = *n.last().unwrap_or(&0.0);
    if peak > 0.0 && last > TRUNCATION_TOL * peak {
        return Err(Error::GridTruncatesEmission { ratio: last / peak });
    }
    let slices: Vec<CMatrix> = states.iter().step_by(grid.t_stride).cloned().collect();
    let id = CMatrix::identity(xi.nrows(), xi.ncols());
    let g1 = correlate_adjoint(propagator, &slices, xi, &id, &xd, grid.tau_steps + 1);
    Ok(EmissionFunctions {
        transition: line,
        dt: grid.dt,
        t_stride: grid.t_stride,
        n,
        g1,
    })
}

fn evolve_sensed(sensed: &SensedSystem, grid: &SimulationGrid) -> Result<(Propagator, Vec<CMatrix>)> {
    grid.validate()?;
    let propagator = Propagator::new(sensed.system(), grid.dt)?;
    let states = evolve_with(&propagator, &sensed.initial_state(), grid.t_steps)?;
    Ok((propagator, states))
}

/// `n(t) = ⟨ξ†ξ⟩(t)` and `G¹(t, τ) = ⟨ξ†(t) ξ(t+τ)⟩` for one line, starting
/// from `|b, 0, 0⟩`.
pub fn compute_emission(
    sensed: &SensedSystem,
    grid: &SimulationGrid,
    line: Transition,
) -> Result<EmissionFunctions> {
    let (propagator, states) = evolve_sensed(sensed, grid)?;
    emission_from_states(sensed, &propagator, &states, grid, line)
}

/// Both lines from a single master-equation run.
pub fn compute_emission_pair(
    sensed: &SensedSystem,
    grid: &SimulationGrid,
) -> Result<[EmissionFunctions; 2]> {
    let (propagator, states) = evolve_sensed(sensed, grid)?;
    let b = emission_from_states(sensed, &propagator, &states, grid, Transition::Biexciton)?;
    let x = emission_from_states(sensed, &propagator, &states, grid, Transition::Exciton)?;
    Ok([b, x])
}

/// Sensor populations alone (no regression), for bookkeeping checks.
pub fn sensor_populations(sensed: &SensedSystem, grid: &SimulationGrid) -> Result<[Vec<f64>; 2]> {
    let (_, states) = evolve_sensed(sensed, grid)?;
    let pops = |line: Transition| -> Vec<f64> {
        let xi = sensed.annihilator(line);
        let number = xi.adjoint() * xi;
        states.iter().map(|r| trace(&(&number * r)).re).collect()
    };
    Ok([pops(Transition::Biexciton), pops(Transition::Exciton)])
}
