//! Synthetic data with known ground truth.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use statrs::function::erf::erf;

use super::conditional::{ConditionedEvent, ConditionedEventList};
use super::histogram::{CorrelationHistogram, DEFAULT_REP_PERIOD_PS};
use crate::cascade::{derive_rates, CascadeParams};
use crate::dynamics::ChannelLabel;
use crate::trajectory::TrajectoryRecord;
use crate::{Error, Result};

fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Expected counts of unit-area Gaussian peaks integrated over each bin.
fn gaussian_peaks(centers: &[f64], bin_width: f64, peaks: &[(f64, f64)], sigma: f64) -> Vec<f64> {
    centers
        .iter()
        .map(|&x| {
            peaks
                .iter()
                .map(|&(c, area)| {
                    let lo = (x - 0.5 * bin_width - c) / (sigma * std::f64::consts::SQRT_2);
                    let hi = (x + 0.5 * bin_width - c) / (sigma * std::f64::consts::SQRT_2);
                    area * 0.5 * (erf(hi) - erf(lo))
                })
                .sum()
        })
        .collect()
}

fn hom_layout(
    p0: f64,
    side_area: f64,
    delay: f64,
    sigma: f64,
    bin_width: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(p0 >= 0.0 && side_area > 0.0 && sigma > 0.0 && bin_width > 0.0) {
        return Err(Error::param("synthetic histogram", "p0 >= 0, areas, sigma and bin width > 0 required"));
    }
    let half_bins = ((2.0 * delay) / bin_width).ceil() as i64;
    let start = -(half_bins as f64) * bin_width;
    let n = (2 * half_bins + 1) as usize;
    let centers: Vec<f64> = (0..n).map(|k| start + k as f64 * bin_width).collect();
    let peaks = [(-delay, side_area), (0.0, 2.0 * p0 * side_area), (delay, side_area)];
    let means = gaussian_peaks(&centers, bin_width, &peaks, sigma);
    Ok((centers, means))
}

/// Three-peak HOM histogram with side areas `side_area` and central area
/// `2·p0·side_area`, Gaussian peaks of width `sigma`, Poisson noise.
pub fn synthetic_hom_histogram(
    rng: &mut impl Rng,
    p0: f64,
    side_area: f64,
    delay: f64,
    sigma: f64,
    bin_width: f64,
) -> Result<CorrelationHistogram> {
    let (centers, means) = hom_layout(p0, side_area, delay, sigma, bin_width)?;
    let counts = means.into_iter().map(|m| poisson(rng, m)).collect();
    Ok(CorrelationHistogram::new(centers, counts)?.with_metadata(DEFAULT_REP_PERIOD_PS, delay))
}

/// As [`synthetic_hom_histogram`] with counts rounded from the expected
/// values instead of drawn. With `delay` a multiple of `bin_width` the
/// three peaks are sampled identically.
pub fn expected_hom_histogram(
    p0: f64,
    side_area: f64,
    delay: f64,
    sigma: f64,
    bin_width: f64,
) -> Result<CorrelationHistogram> {
    let (centers, means) = hom_layout(p0, side_area, delay, sigma, bin_width)?;
    let counts = means.into_iter().map(|m| m.round() as u64).collect();
    Ok(CorrelationHistogram::new(centers, counts)?.with_metadata(DEFAULT_REP_PERIOD_PS, delay))
}

/// Pulsed autocorrelation with `n_side` side peaks on each side spaced by
/// `rep_period` and a central peak suppressed to `g2` of the side area.
pub fn synthetic_pulsed_g2(
    rng: &mut impl Rng,
    g2: f64,
    side_area: f64,
    n_side: usize,
    rep_period: f64,
    sigma: f64,
    bin_width: f64,
) -> Result<CorrelationHistogram> {
    let half_bins = (((n_side as f64 + 0.5) * rep_period) / bin_width).ceil() as i64;
    let start = -(half_bins as f64) * bin_width;
    let n = (2 * half_bins + 1) as usize;
    let centers: Vec<f64> = (0..n).map(|k| start + k as f64 * bin_width).collect();
    let mut peaks = vec![(0.0, g2 * side_area)];
    for k in 1..=n_side {
        peaks.push((-(k as f64) * rep_period, side_area));
        peaks.push((k as f64 * rep_period, side_area));
    }
    let counts = gaussian_peaks(&centers, bin_width, &peaks, sigma)
        .into_iter()
        .map(|m| poisson(rng, m))
        .collect();
    Ok(CorrelationHistogram::new(centers, counts)?.with_metadata(rep_period, 0.5 * rep_period))
}

/// Decay histogram with `total` expected decay counts, lifetime `tau`,
/// flat background `background` per bin, bins on `[0, t_max]`.
pub fn synthetic_decay(
    rng: &mut impl Rng,
    tau: f64,
    total: f64,
    background: f64,
    bin_width: f64,
    t_max: f64,
) -> Result<CorrelationHistogram> {
    let n = (t_max / bin_width).round() as usize;
    let centers: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * bin_width).collect();
    let counts = centers
        .iter()
        .map(|&c| {
            let lo = c - 0.5 * bin_width;
            let mass = total * ((-lo / tau).exp() - (-(lo + bin_width) / tau).exp());
            poisson(rng, mass + background)
        })
        .collect();
    CorrelationHistogram::new(centers, counts)
}

/// Biexciton-gated HOM events from consecutive pairs of trajectory records.
///
/// Records `2k` and `2k+1` are the two excitations whose exciton photons
/// meet on the beamsplitter. With biexciton times `s`, `u` and pair
/// overlap `K = γ_x/(2c) e^{−γ_x|s−u|}`, a coincidence lands in one of the
/// three slots `(−delay, 0, +delay)` with equal weight, except that the
/// central one survives only with probability `1 − K`. The row carries
/// `t_b = max(s, u)`, so gating on `t_b ≤ w` keeps pairs whose biexciton
/// photons both came within `w`. Timing jitter of `sigma` is added to `τ`.
pub fn synthetic_conditioned_events(
    rng: &mut impl Rng,
    records: &[TrajectoryRecord],
    params: &CascadeParams,
    delay: f64,
    sigma: f64,
) -> Result<ConditionedEventList> {
    let rates = derive_rates(params)?;
    let factor = rates.gamma_x / (2.0 * (0.5 * rates.gamma_x + rates.gamma_phi_x));
    let jitter = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::param("sigma", e.to_string()))?;
    let mut events = Vec::with_capacity(records.len() / 2);
    for pair in records.chunks_exact(2) {
        let (Some(s), Some(u)) = (
            pair[0].first_jump(ChannelLabel::BiexcitonDecay),
            pair[1].first_jump(ChannelLabel::BiexcitonDecay),
        ) else {
            continue;
        };
        let slot: i32 = rng.random_range(-1..=1);
        let keep: f64 = rng.random();
        if slot == 0 {
            let overlap = factor * (-rates.gamma_x * (s - u).abs()).exp();
            if keep < overlap {
                continue;
            }
        }
        events.push(ConditionedEvent {
            t_b: s.max(u),
            tau_hom: slot as f64 * delay + jitter.sample(rng),
        });
    }
    ConditionedEventList::new(events)
}
