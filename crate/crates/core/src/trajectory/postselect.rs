//! Temporal postselection on the biexciton emission time.
//!
//! Conditioned on a biexciton jump at `t_b`, the exciton photon is a single
//! exponential wavepacket starting at `t_b`, with field correlation
//!
//! ```text
//! g¹(t, t' | t_b) = e^{−γ_x (min(t,t') − t_b)} e^{−(γ_x/2 + γ_φx)|t − t'|},  t, t' ≥ t_b
//! ```
//!
//! Keeping only `t_b ≤ t_cut` mixes these wavepackets with the truncated
//! weight `γ_b e^{−γ_b t_b} / (1 − e^{−γ_b t_cut})`. The overlap of two
//! independent photons from the mixture is
//!
//! ```text
//! V = ∫∫ |G¹(t,t')|² dt dt' / (∫ G¹(t,t) dt)²
//!   = γ_x / (2c) · E[e^{−γ_x |T − T'|}],   c = γ_x/2 + γ_φx
//! ```
//!
//! with `T, T'` independent draws of the kept biexciton times. The
//! quadrature oracle evaluates the first line; trajectory mode estimates
//! the expectation in the second line from simulated jump times. Dephasing
//! only enters through `c`.
//!
//! Visibilities here use the broadband mapping `ν = V / (2 − V)`, i.e.
//! `P₀ = (1 − V)/2`, without the sensor spectral filtering of
//! [`crate::sensor`].

use rayon::prelude::*;
use serde::Serialize;

use super::mcwf::{default_step, run_ensemble, TrajectoryRecord};
use crate::cascade::{
    build_emitter_system, derive_rates, fourier_fraction_to_coherence, CascadeParams,
    DerivedRates, TAU_CB_PS, TAU_CX_PS,
};
use crate::dynamics::{ChannelLabel, TimeGrid};
use crate::{CVector, Error, Result, C64};

/// Half-width of the experimental coherence-time band (ps).
pub const COHERENCE_BAND_PS: f64 = 25.0;
/// Convergence threshold on successive quadrature refinements.
const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_INTERVALS: usize = 1 << 22;

pub fn visibility_from_overlap(v: f64) -> f64 {
    v / (2.0 - v)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalIntensity {
    pub bin_width: f64,
    pub centers: Vec<f64>,
    /// Exciton jump-time density of the kept records (ps⁻¹, unit area).
    pub density: Vec<f64>,
    pub mean_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PostselectionResult {
    pub t_cut: f64,
    pub n_records: usize,
    pub kept: usize,
    pub kept_fraction: f64,
    pub intensity: Option<ConditionalIntensity>,
    pub overlap: f64,
    pub overlap_stderr: f64,
    pub visibility: f64,
    pub visibility_stderr: f64,
}

fn check_cut(t_cut: f64) -> Result<()> {
    if !(t_cut > 0.0) {
        return Err(Error::param("t_cut", format!("{t_cut} must be > 0")));
    }
    Ok(())
}

/// `γ_x / (2c)`: overlap of one conditional wavepacket with itself.
fn dephasing_factor(rates: &DerivedRates) -> f64 {
    rates.gamma_x / (2.0 * (0.5 * rates.gamma_x + rates.gamma_phi_x))
}

fn intensity_histogram(times: &[f64], bin_width: f64) -> ConditionalIntensity {
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let n_bins = ((t_end / bin_width).floor() as usize) + 1;
    let mut counts = vec![0usize; n_bins];
    for &t in times {
        counts[((t / bin_width).floor() as usize).min(n_bins - 1)] += 1;
    }
    let norm = times.len() as f64 * bin_width;
    ConditionalIntensity {
        bin_width,
        centers: (0..n_bins).map(|i| (i as f64 + 0.5) * bin_width).collect(),
        density: counts.iter().map(|&c| c as f64 / norm).collect(),
        mean_time: times.iter().sum::<f64>() / times.len() as f64,
    }
}

/// U-statistic estimate of `E[e^{−a|T−T'|}]` over distinct pairs with its
/// first-order (Hoeffding projection) standard error.
pub(crate) fn pair_kernel_mean(times: &[f64], a: f64) -> (f64, f64) {
    let n = times.len();
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    // below[i] = Σ_{j<i} e^{−a(t_i − t_j)}, above[i] = Σ_{j>i} e^{−a(t_j − t_i)}.
    let mut below = vec![0.0; n];
    for i in 1..n {
        below[i] = (-a * (sorted[i] - sorted[i - 1])).exp() * (below[i - 1] + 1.0);
    }
    let mut above = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        above[i] = (-a * (sorted[i + 1] - sorted[i])).exp() * (above[i + 1] + 1.0);
    }
    let m = (n - 1) as f64;
    let h1: Vec<f64> = (0..n).map(|i| (below[i] + above[i]) / m).collect();
    let mean = h1.iter().sum::<f64>() / n as f64;
    let var = h1.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    (mean, (4.0 * var / n as f64).sqrt())
}

/// Keeps records whose biexciton jump happened at or before `t_cut`.
pub fn postselect_records(
    records: &[TrajectoryRecord],
    t_cut: f64,
    params: &CascadeParams,
    bin_width: f64,
) -> Result<PostselectionResult> {
    check_cut(t_cut)?;
    if !(bin_width > 0.0) {
        return Err(Error::param("bin_width", format!("{bin_width} must be > 0")));
    }
    let rates = derive_rates(params)?;
    let kept: Vec<&TrajectoryRecord> = records
        .iter()
        .filter(|r| r.first_jump(ChannelLabel::BiexcitonDecay).is_some_and(|t| t <= t_cut))
        .collect();
    if kept.len() < 2 {
        return Err(Error::EmptyPostselection(t_cut));
    }
    let t_b: Vec<f64> = kept
        .iter()
        .map(|r| r.first_jump(ChannelLabel::BiexcitonDecay).expect("filtered"))
        .collect();
    let t_x: Vec<f64> = kept
        .iter()
        .filter_map(|r| r.first_jump(ChannelLabel::ExcitonDecay))
        .collect();
    let (k, k_err) = pair_kernel_mean(&t_b, rates.gamma_x);
    let f = dephasing_factor(&rates);
    let overlap = f * k;
    let overlap_stderr = f * k_err;
    Ok(PostselectionResult {
        t_cut,
        n_records: records.len(),
        kept: kept.len(),
        kept_fraction: kept.len() as f64 / records.len() as f64,
        intensity: (!t_x.is_empty()).then(|| intensity_histogram(&t_x, bin_width)),
        overlap,
        overlap_stderr,
        visibility: visibility_from_overlap(overlap),
        visibility_stderr: 2.0 * overlap_stderr / (2.0 - overlap).powi(2),
    })
}

/// Conditional exciton emission amplitude `A(m) = ∫₀^{min(m,t_cut)} p_b(t_b) e^{−γ_x(m−t_b)} dt_b`.
fn conditional_amplitude(m: f64, t_cut: f64, r: &DerivedRates) -> f64 {
    let (gb, gx) = (r.gamma_b, r.gamma_x);
    let u = m.min(t_cut);
    let norm = -(-gb * t_cut).exp_m1();
    let delta = gx - gb;
    // e^{−γ_x m} (e^{δu} − 1)/δ, written to stay finite for large u.
    let core = if (delta * u).abs() < 1.0 {
        let x = delta * u;
        let ratio = if x == 0.0 { 1.0 } else { x.exp_m1() / x };
        (-gx * m).exp() * u * ratio
    } else {
        ((-gx * (m - u) - gb * u).exp() - (-gx * m).exp()) / delta
    };
    gb * core / norm
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Deterministic quadrature of the conditional overlap `V(t_cut)`.
/// `t_cut = f64::INFINITY` gives the unconditioned overlap.
pub fn conditional_overlap_oracle(params: &CascadeParams, t_cut: f64) -> Result<f64> {
    check_cut(t_cut)?;
    let rates = derive_rates(params)?;
    let c = 0.5 * rates.gamma_x + rates.gamma_phi_x;
    let slow = rates.gamma_b.min(rates.gamma_x);
    // ∫∫|G¹|² = (1/c) ∫ A(m)² dm and ∫ G¹(t,t) dt = ∫ A(m) dm; A is smooth
    // on either side of t_cut, so the m axis is split there.
    let tail = 60.0 / slow;
    let edges: Vec<f64> = if t_cut.is_finite() && t_cut < tail {
        vec![0.0, t_cut, t_cut + 60.0 / rates.gamma_x]
    } else {
        vec![0.0, tail]
    };
    let a = |m: f64| conditional_amplitude(m, t_cut, &rates);
    let a2 = |m: f64| a(m).powi(2);
    let eval = |n: usize| -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for w in edges.windows(2) {
            num += simpson(&a2, w[0], w[1], n);
            den += simpson(&a, w[0], w[1], n);
        }
        num / (c * den * den)
    };
    let mut n = 256;
    let mut prev = eval(n);
    while n < QUAD_MAX_INTERVALS {
        n *= 2;
        let next = eval(n);
        if (next - prev).abs() < QUAD_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "t_cut = {t_cut} ps: V changed by more than {QUAD_TOL:e} at {n} intervals per segment \
         (segments {edges:?}, last value {prev})"
    )))
}

/// Coherence-time settings for the postselection curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CoherencePreset {
    NoDephasing,
    /// Both coherence times at the given fraction of `2τ`.
    FourierFraction(f64),
    /// 200 ps / 450 ps.
    Experimental,
    /// Experimental shifted by −25 ps.
    ExperimentalLow,
    /// Experimental shifted by +25 ps.
    ExperimentalHigh,
}

impl CoherencePreset {
    pub fn apply(&self, base: &CascadeParams) -> Result<CascadeParams> {
        let shift = |s: f64| Some((TAU_CB_PS + s, TAU_CX_PS + s));
        let coherence = match *self {
            CoherencePreset::NoDephasing => None,
            CoherencePreset::FourierFraction(f) => Some((
                fourier_fraction_to_coherence(f, base.tau_b)?,
                fourier_fraction_to_coherence(f, base.tau_x)?,
            )),
            CoherencePreset::Experimental => shift(0.0),
            CoherencePreset::ExperimentalLow => shift(-COHERENCE_BAND_PS),
            CoherencePreset::ExperimentalHigh => shift(COHERENCE_BAND_PS),
        };
        let p = match coherence {
            None => base.with_coherence(None, None),
            Some((b, x)) => base.with_coherence(Some(b), Some(x)),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn name(&self) -> String {
        match self {
            CoherencePreset::NoDephasing => "no-dephasing".into(),
            CoherencePreset::FourierFraction(f) => format!("fourier-{:.0}", f * 100.0),
            CoherencePreset::Experimental => "experimental".into(),
            CoherencePreset::ExperimentalLow => "experimental-low".into(),
            CoherencePreset::ExperimentalHigh => "experimental-high".into(),
        }
    }
}

pub enum CutoffMode<'a> {
    Oracle,
    /// Estimates from simulated records (generated with the same params).
    Trajectory {
        records: &'a [TrajectoryRecord],
        bin_width: f64,
    },
}

/// One [`PostselectionResult`] per cut, in input order.
pub fn visibility_vs_cutoff(
    params: &CascadeParams,
    cuts: &[f64],
    mode: &CutoffMode,
) -> Result<Vec<PostselectionResult>> {
    let rates = derive_rates(params)?;
    for &t in cuts {
        check_cut(t)?;
    }
    match mode {
        CutoffMode::Oracle => cuts
            .par_iter()
            .map(|&t_cut| {
                let v = conditional_overlap_oracle(params, t_cut)?;
                Ok(PostselectionResult {
                    t_cut,
                    n_records: 0,
                    kept: 0,
                    kept_fraction: -(-rates.gamma_b * t_cut).exp_m1(),
                    intensity: None,
                    overlap: v,
                    overlap_stderr: 0.0,
                    visibility: visibility_from_overlap(v),
                    visibility_stderr: 0.0,
                })
            })
            .collect(),
        CutoffMode::Trajectory { records, bin_width } => cuts
            .iter()
            .map(|&t| postselect_records(records, t, params, *bin_width))
            .collect(),
    }
}

/// Cascade trajectories from `|b⟩` at the default step up to `t_max`.
pub fn simulate_cascade_records(
    params: &CascadeParams,
    n_traj: usize,
    master_seed: u64,
    t_max: f64,
) -> Result<Vec<TrajectoryRecord>> {
    let system = build_emitter_system(params)?;
    let dt = default_step(&system);
    let grid = TimeGrid::with_steps(0.0, dt, (t_max / dt).ceil() as usize)?;
    let mut psi0 = CVector::zeros(system.dim());
    psi0[crate::cascade::BIEXCITON] = C64::from(1.0);
    run_ensemble(&system, &psi0, n_traj, master_seed, &grid)
}
