use rayon::prelude::*;
use serde::Serialize;

use super::emission::{compute_emission_pair, EmissionFunctions, SimulationGrid};
use super::hom::{hom_g2, HomResult};
use super::{build_sensed_system, SensorParams};
use crate::cascade::CascadeParams;
use crate::Result;

/// Target coincidence probability for the sensor-linewidth calibration.
pub const CALIBRATION_TARGET_P0: f64 = 0.15;

/// HOM results and emission functions for both lines of one run.
#[derive(Debug, Clone)]
pub struct HomPair {
    pub biexciton: HomResult,
    pub exciton: HomResult,
    pub emission: [EmissionFunctions; 2],
}

/// Full pipeline for both photons: sensed system, emission, HOM.
///
/// `grid = None` uses [`SimulationGrid::default_for`].
pub fn simulate_hom(
    cascade: &CascadeParams,
    sensors: &SensorParams,
    grid: Option<&SimulationGrid>,
) -> Result<HomPair> {
    let grid = grid
        .copied()
        .unwrap_or_else(|| SimulationGrid::default_for(cascade.tau_b, cascade.tau_x, sensors.gamma_s));
    let sensed = build_sensed_system(cascade, sensors)?;
    let emission = compute_emission_pair(&sensed, &grid)?;
    let biexciton = hom_g2(&emission[0])?;
    let exciton = hom_g2(&emission[1])?;
    Ok(HomPair {
        biexciton,
        exciton,
        emission,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau_cb: f64,
    pub tau_cx: f64,
    pub p0_b: f64,
    pub visibility_b: f64,
    pub p0_x: f64,
    pub visibility_x: f64,
}

/// Row-major over `tau_cb` (outer) and `tau_cx` (inner).
pub fn visibility_sweep(
    base: &CascadeParams,
    sensors: &SensorParams,
    grid: Option<&SimulationGrid>,
    tau_cb: &[f64],
    tau_cx: &[f64],
) -> Result<Vec<SweepRow>> {
    let points: Vec<(f64, f64)> = tau_cb
        .iter()
        .flat_map(|&b| tau_cx.iter().map(move |&x| (b, x)))
        .collect();
    for &(b, x) in &points {
        base.with_coherence(Some(b), Some(x)).validate()?;
    }
    points
        .par_iter()
        .map(|&(b, x)| {
            let params = base.with_coherence(Some(b), Some(x));
            let pair = simulate_hom(&params, sensors, grid)?;
            Ok(SweepRow {
                tau_cb: b,
                tau_cx: x,
                p0_b: pair.biexciton.p0,
                visibility_b: pair.biexciton.visibility,
                p0_x: pair.exciton.p0,
                visibility_x: pair.exciton.visibility,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationPoint {
    pub gamma_s: f64,
    pub p0_b: f64,
    pub p0_x: f64,
    pub visibility_b: f64,
    pub visibility_x: f64,
}

impl CalibrationPoint {
    pub fn mean_p0(&self) -> f64 {
        0.5 * (self.p0_b + self.p0_x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub points: Vec<CalibrationPoint>,
    /// Index into `points` of the candidate closest to the target.
    pub selected: usize,
}

impl CalibrationReport {
    pub fn selected_point(&self) -> &CalibrationPoint {
        &self.points[self.selected]
    }
}

/// Runs the no-dephasing pipeline for each candidate linewidth and picks
/// the one whose mean `P₀` over both lines is closest to 0.15.
///
/// Coherence times in `cascade` are ignored. The grid is rebuilt per
/// candidate since the default step depends on `Γ_s`.
pub fn calibrate_sensor_linewidth(
    cascade: &CascadeParams,
    coupling: f64,
    candidates: &[f64],
) -> Result<CalibrationReport> {
    if candidates.is_empty() {
        return Err(crate::Error::param("gamma_s candidates", "list is empty"));
    }
    let plain = cascade.with_coherence(None, None);
    for &gs in candidates {
        SensorParams::for_cascade(&plain, gs)
            .with_coupling(coupling)
            .validate(&plain)?;
    }
    let points: Vec<CalibrationPoint> = candidates
        .par_iter()
        .map(|&gs| {
            let sensors = SensorParams::for_cascade(&plain, gs).with_coupling(coupling);
            let pair = simulate_hom(&plain, &sensors, None)?;
            Ok(CalibrationPoint {
                gamma_s: gs,
                p0_b: pair.biexciton.p0,
                p0_x: pair.exciton.p0,
                visibility_b: pair.biexciton.visibility,
                visibility_x: pair.exciton.visibility,
            })
        })
        .collect::<Result<_>>()?;
    let selected = points
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1.mean_p0() - CALIBRATION_TARGET_P0).abs();
            let db = (b.1.mean_p0() - CALIBRATION_TARGET_P0).abs();
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
        .expect("non-empty candidates");
    Ok(CalibrationReport { points, selected })
}
