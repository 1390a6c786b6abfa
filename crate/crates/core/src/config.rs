//! JSON run configuration.
//!
//! All times are in ps and carry a `_ps` suffix; rates are in ps⁻¹.
//! Unknown keys are rejected at every level. Only `cascade.tau_b_ps` and
//! `cascade.tau_x_ps` are required.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::histogram::DEFAULT_DELAY_PS;
use crate::cascade::{CascadeParams, DEFAULT_DELTA_X};
use crate::sensor::{SensorParams, SimulationGrid, CALIBRATED_GAMMA_S, DEFAULT_COUPLING};
use crate::trajectory::CoherencePreset;
use crate::{Error, Result};

const DEFAULT_T_SLICES: usize = 400;
const DEFAULT_N_TRAJ: usize = 10_000;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_CUTS_PS: [f64; 8] = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0];
/// Coherence times of the default sweep as fractions of `2τ`.
const SWEEP_FRACTIONS: [f64; 4] = [0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCascade {
    tau_b_ps: f64,
    tau_x_ps: f64,
    #[serde(default)]
    tau_cb_ps: Option<f64>,
    #[serde(default)]
    tau_cx_ps: Option<f64>,
    #[serde(default)]
    delta_x: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensors {
    gamma_s: Option<f64>,
    g: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dt_ps: f64,
    t_max_ps: f64,
    tau_max_ps: f64,
    #[serde(default)]
    t_slices: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectories {
    n_traj: Option<usize>,
    seed: Option<u64>,
    t_max_ps: Option<f64>,
    bin_width_ps: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPostselection {
    cuts_ps: Option<Vec<f64>>,
    preset: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    tau_cb_ps: Option<Vec<f64>>,
    tau_cx_ps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    half_window_ps: Option<f64>,
    background: Option<bool>,
    windows_ps: Option<Vec<f64>>,
    event_bin_width_ps: Option<f64>,
    delay_ps: Option<f64>,
    n_side: Option<usize>,
    fit_t_lo_ps: Option<f64>,
    fit_t_hi_ps: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    fwhm_ps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    cascade: RawCascade,
    #[serde(default)]
    sensors: RawSensors,
    #[serde(default)]
    grid: Option<RawGrid>,
    #[serde(default)]
    trajectories: RawTrajectories,
    #[serde(default)]
    postselection: RawPostselection,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySettings {
    pub n_traj: usize,
    pub seed: u64,
    pub t_max: f64,
    /// Bin width of conditional intensity histograms.
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostselectionSettings {
    pub cuts: Vec<f64>,
    /// `None` uses the coherence times of `cascade` as given.
    pub preset: Option<CoherencePreset>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSettings {
    pub tau_cb: Vec<f64>,
    pub tau_cx: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSettings {
    /// `None` uses `delay/2 − 2·bin_width` of each histogram.
    pub half_window: Option<f64>,
    pub background: bool,
    /// Biexciton-time windows for conditioned HOM.
    pub windows: Vec<f64>,
    pub event_bin_width: f64,
    pub delay: f64,
    pub n_side: usize,
    pub fit_t_lo: f64,
    /// `None` fits up to the last bin.
    pub fit_t_hi: Option<f64>,
}

/// Validated configuration with every default applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub cascade: CascadeParams,
    pub sensors: SensorParams,
    pub grid: SimulationGrid,
    pub trajectories: TrajectorySettings,
    pub postselection: PostselectionSettings,
    pub sweep: SweepSettings,
    pub analysis: AnalysisSettings,
    pub fwhm: Option<f64>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub threads: usize,
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} = {v} must be a positive number")))
    }
}

fn positive_list(key: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{key} must not be empty")));
    }
    for &x in v {
        positive(key, x)?;
    }
    Ok(())
}

/// `no-dephasing`, `experimental`, `experimental-low`, `experimental-high`
/// or `fourier-NN` with `NN` in percent of the Fourier limit.
pub fn parse_preset(name: &str) -> Result<CoherencePreset> {
    match name {
        "no-dephasing" => Ok(CoherencePreset::NoDephasing),
        "experimental" => Ok(CoherencePreset::Experimental),
        "experimental-low" => Ok(CoherencePreset::ExperimentalLow),
        "experimental-high" => Ok(CoherencePreset::ExperimentalHigh),
        _ => {
            let pct = name
                .strip_prefix("fourier-")
                .and_then(|p| p.parse::<f64>().ok())
                .filter(|p| *p > 0.0 && *p <= 100.0)
                .ok_or_else(|| Error::Config(format!("postselection.preset: unknown preset '{name}'")))?;
            Ok(CoherencePreset::FourierFraction(pct / 100.0))
        }
    }
}

fn cascade_error(e: Error) -> Error {
    match e {
        Error::AboveFourierLimit { .. } => Error::Config(format!("cascade: {e}")),
        Error::InvalidParameter { .. } => Error::Config(format!("cascade: {e}")),
        other => other,
    }
}

impl RunConfig {
    /// Defaults for the given lifetimes.
    pub fn from_lifetimes(tau_b: f64, tau_x: f64) -> Result<Self> {
        Self::from_json(&format!(
            r#"{{"cascade": {{"tau_b_ps": {tau_b}, "tau_x_ps": {tau_x}}}}}"#
        ))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let c = &raw.cascade;
        positive("cascade.tau_b_ps", c.tau_b_ps)?;
        positive("cascade.tau_x_ps", c.tau_x_ps)?;
        if let Some(v) = c.tau_cb_ps {
            positive("cascade.tau_cb_ps", v)?;
        }
        if let Some(v) = c.tau_cx_ps {
            positive("cascade.tau_cx_ps", v)?;
        }
        let cascade = CascadeParams::new(c.tau_b_ps, c.tau_x_ps)
            .with_coherence(c.tau_cb_ps, c.tau_cx_ps)
            .with_delta_x(positive("cascade.delta_x", c.delta_x.unwrap_or(DEFAULT_DELTA_X))?);
        cascade.validate().map_err(cascade_error)?;

        let gamma_s = positive("sensors.gamma_s", raw.sensors.gamma_s.unwrap_or(CALIBRATED_GAMMA_S))?;
        let sensors = SensorParams::for_cascade(&cascade, gamma_s)
            .with_coupling(raw.sensors.g.unwrap_or(DEFAULT_COUPLING));
        sensors
            .validate(&cascade)
            .map_err(|e| Error::Config(format!("sensors: {e}")))?;

        let grid = match &raw.grid {
            None => SimulationGrid::default_for(cascade.tau_b, cascade.tau_x, gamma_s),
            Some(g) => SimulationGrid::with_spans(
                positive("grid.dt_ps", g.dt_ps)?,
                positive("grid.t_max_ps", g.t_max_ps)?,
                positive("grid.tau_max_ps", g.tau_max_ps)?,
                g.t_slices.unwrap_or(DEFAULT_T_SLICES),
            ),
        };
        grid.validate().map_err(|e| Error::Config(format!("grid: {e}")))?;

        let t = &raw.trajectories;
        let n_traj = t.n_traj.unwrap_or(DEFAULT_N_TRAJ);
        if n_traj == 0 {
            return Err(Error::Config("trajectories.n_traj must be >= 1".into()));
        }
        let trajectories = TrajectorySettings {
            n_traj,
            seed: t.seed.unwrap_or(DEFAULT_SEED),
            t_max: positive(
                "trajectories.t_max_ps",
                t.t_max_ps.unwrap_or(20.0 * cascade.tau_b.max(cascade.tau_x)),
            )?,
            bin_width: positive("trajectories.bin_width_ps", t.bin_width_ps.unwrap_or(8.0))?,
        };

        let cuts = raw.postselection.cuts_ps.clone().unwrap_or_else(|| DEFAULT_CUTS_PS.to_vec());
        positive_list("postselection.cuts_ps", &cuts)?;
        let preset = raw.postselection.preset.as_deref().map(parse_preset).transpose()?;
        if let Some(p) = preset {
            p.apply(&cascade).map_err(|e| Error::Config(format!("postselection.preset: {e}")))?;
        }

        let fractions = |tau: f64| SWEEP_FRACTIONS.iter().map(|f| f * 2.0 * tau).collect::<Vec<_>>();
        let sweep = SweepSettings {
            tau_cb: raw.sweep.tau_cb_ps.clone().unwrap_or_else(|| fractions(cascade.tau_b)),
            tau_cx: raw.sweep.tau_cx_ps.clone().unwrap_or_else(|| fractions(cascade.tau_x)),
        };
        positive_list("sweep.tau_cb_ps", &sweep.tau_cb)?;
        positive_list("sweep.tau_cx_ps", &sweep.tau_cx)?;
        for &b in &sweep.tau_cb {
            cascade
                .with_coherence(Some(b), None)
                .validate()
                .map_err(|e| Error::Config(format!("sweep.tau_cb_ps: {e}")))?;
        }
        for &x in &sweep.tau_cx {
            cascade
                .with_coherence(None, Some(x))
                .validate()
                .map_err(|e| Error::Config(format!("sweep.tau_cx_ps: {e}")))?;
        }

        let a = &raw.analysis;
        if let Some(h) = a.half_window_ps {
            positive("analysis.half_window_ps", h)?;
        }
        let windows = a.windows_ps.clone().unwrap_or_else(|| DEFAULT_CUTS_PS.to_vec());
        positive_list("analysis.windows_ps", &windows)?;
        let n_side = a.n_side.unwrap_or(4);
        if n_side == 0 {
            return Err(Error::Config("analysis.n_side must be >= 1".into()));
        }
        let fit_t_lo = a.fit_t_lo_ps.unwrap_or(0.0);
        if !(fit_t_lo >= 0.0 && fit_t_lo.is_finite()) {
            return Err(Error::Config(format!("analysis.fit_t_lo_ps = {fit_t_lo} must be >= 0")));
        }
        if let Some(hi) = a.fit_t_hi_ps {
            if !(hi > fit_t_lo) {
                return Err(Error::Config(format!(
                    "analysis.fit_t_hi_ps = {hi} must exceed fit_t_lo_ps = {fit_t_lo}"
                )));
            }
        }
        let analysis = AnalysisSettings {
            half_window: a.half_window_ps,
            background: a.background.unwrap_or(false),
            windows,
            event_bin_width: positive("analysis.event_bin_width_ps", a.event_bin_width_ps.unwrap_or(16.0))?,
            delay: positive("analysis.delay_ps", a.delay_ps.unwrap_or(DEFAULT_DELAY_PS))?,
            n_side,
            fit_t_lo,
            fit_t_hi: a.fit_t_hi_ps,
        };

        let fwhm = raw.detector.fwhm_ps.map(|f| positive("detector.fwhm_ps", f)).transpose()?;
        let threads = raw.threads.unwrap_or(1);
        if threads == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(Self {
            cascade,
            sensors,
            grid,
            trajectories,
            postselection: PostselectionSettings { cuts, preset },
            sweep,
            analysis,
            fwhm,
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            threads,
        })
    }

    /// SHA-256 of the resolved physics settings. The output directory, the
    /// worker count and the master seed are excluded, so the hash names a
    /// model rather than a run.
    pub fn hash(&self) -> String {
        let mut view = self.clone();
        view.trajectories.seed = 0;
        let json = serde_json::to_string(&view).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_json(&text)
}
