//! Peak-area extraction of `P₀`, `ν` and `g²(0)`.

use serde::Serialize;

use super::histogram::CorrelationHistogram;
use crate::cascade::P_INFINITY;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub center: f64,
    pub area: f64,
    /// Poisson error `sqrt(area)` of the raw counts.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    pub half_window: f64,
    /// Flat background per bin subtracted from every area (0 when off).
    pub background_per_bin: f64,
    pub peaks: Vec<Peak>,
}

/// `delay/2 − 2·bin_width`.
pub fn default_half_window(hist: &CorrelationHistogram) -> f64 {
    0.5 * hist.delay - 2.0 * hist.bin_width()
}

fn check_windows(hist: &CorrelationHistogram, centers: &[f64], half_window: f64) -> Result<()> {
    if !(half_window > 0.0 && half_window.is_finite()) {
        return Err(Error::param("half_window", format!("{half_window} must be > 0")));
    }
    let (span_lo, span_hi) = hist.span();
    for &c in centers {
        let (lo, hi) = (c - half_window, c + half_window);
        if lo < span_lo || hi > span_hi {
            return Err(Error::WindowOutsideSpan {
                lo,
                hi,
                span_lo,
                span_hi,
            });
        }
    }
    let mut sorted = centers.to_vec();
    sorted.sort_by(f64::total_cmp);
    for pair in sorted.windows(2) {
        if pair[1] - pair[0] <= 2.0 * half_window {
            return Err(Error::OverlappingWindows {
                a: pair[0],
                b: pair[1],
                half_window,
            });
        }
    }
    Ok(())
}

fn in_window(x: f64, center: f64, half_window: f64) -> bool {
    (x - center).abs() <= half_window
}

/// Sums counts of bins whose centre lies in `[c − h, c + h]`.
pub fn integrate_peaks(
    hist: &CorrelationHistogram,
    centers: &[f64],
    half_window: f64,
) -> Result<PeakReport> {
    check_windows(hist, centers, half_window)?;
    let peaks = centers
        .iter()
        .map(|&c| {
            let area: u64 = hist
                .centers()
                .iter()
                .zip(hist.counts())
                .filter(|(x, _)| in_window(**x, c, half_window))
                .map(|(_, n)| n)
                .sum();
            let area = area as f64;
            Peak {
                center: c,
                area,
                error: area.sqrt(),
            }
        })
        .collect();
    Ok(PeakReport {
        half_window,
        background_per_bin: 0.0,
        peaks,
    })
}

/// As [`integrate_peaks`], minus a flat background estimated as the mean
/// count of the bins outside every window. Errors stay those of the raw
/// counts.
pub fn integrate_peaks_with_background(
    hist: &CorrelationHistogram,
    centers: &[f64],
    half_window: f64,
) -> Result<PeakReport> {
    let mut report = integrate_peaks(hist, centers, half_window)?;
    let outside: Vec<u64> = hist
        .centers()
        .iter()
        .zip(hist.counts())
        .filter(|(x, _)| !centers.iter().any(|&c| in_window(**x, c, half_window)))
        .map(|(_, &n)| n)
        .collect();
    if outside.is_empty() {
        return Err(Error::param(
            "background",
            "no bins outside the peak windows to estimate it from",
        ));
    }
    let bg = outside.iter().sum::<u64>() as f64 / outside.len() as f64;
    for peak in &mut report.peaks {
        let bins = hist
            .centers()
            .iter()
            .filter(|x| in_window(**x, peak.center, half_window))
            .count() as f64;
        peak.area -= bg * bins;
    }
    report.background_per_bin = bg;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomMetrics {
    pub p0: f64,
    pub p0_err: f64,
    pub visibility: f64,
    pub visibility_err: f64,
}

/// `P₀ = A₀/(A₋ + A₊)` from three peaks ordered `(−delay, 0, +delay)`,
/// with first-order Poisson error propagation.
pub fn hom_metrics(report: &PeakReport) -> Result<HomMetrics> {
    let [minus, zero, plus] = report.peaks[..] else {
        return Err(Error::PeakLayout {
            expected: 3,
            actual: report.peaks.len(),
        });
    };
    if !(minus.center < zero.center && zero.center < plus.center) {
        return Err(Error::PeakLayout {
            expected: 3,
            actual: report.peaks.len(),
        });
    }
    let side = minus.area + plus.area;
    if side <= 0.0 {
        return Err(Error::ZeroArea("side peaks A- + A+"));
    }
    let side_var = minus.error.powi(2) + plus.error.powi(2);
    let a0 = zero.area;
    let p0 = a0 / side;
    let p0_err = (zero.error.powi(2) / side.powi(2) + a0.powi(2) * side_var / side.powi(4)).sqrt();
    let visibility = (P_INFINITY - p0) / (P_INFINITY + p0);
    let visibility_err = p0_err / (P_INFINITY + p0).powi(2);
    Ok(HomMetrics {
        p0,
        p0_err,
        visibility,
        visibility_err,
    })
}

/// Peaks at `(−delay, 0, +delay)` of the histogram's own metadata.
pub fn hom_peak_centers(hist: &CorrelationHistogram) -> [f64; 3] {
    [-hist.delay, 0.0, hist.delay]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Zero {
    pub g2: f64,
    pub error: f64,
    pub central_area: f64,
    pub mean_side_area: f64,
}

/// `g²(0)` as the central area over the mean of `n_side` side peaks on each
/// side, spaced by the repetition period.
pub fn g2_zero(hist: &CorrelationHistogram, n_side: usize, half_window: f64) -> Result<G2Zero> {
    if n_side == 0 {
        return Err(Error::param("n_side", "must be >= 1"));
    }
    let t = hist.rep_period;
    let mut centers = vec![0.0];
    for k in 1..=n_side {
        centers.push(-(k as f64) * t);
        centers.push(k as f64 * t);
    }
    let report = integrate_peaks(hist, &centers, half_window)?;
    let central = report.peaks[0];
    let side_sum: f64 = report.peaks[1..].iter().map(|p| p.area).sum();
    let m = (2 * n_side) as f64;
    let mean_side = side_sum / m;
    if mean_side <= 0.0 {
        return Err(Error::ZeroArea("side peaks"));
    }
    let g2 = central.area / mean_side;
    // var(mean_side) = side_sum / m²
    let var = central.area / mean_side.powi(2) + central.area.powi(2) * side_sum / (m * m * mean_side.powi(4));
    Ok(G2Zero {
        g2,
        error: var.sqrt(),
        central_area: central.area,
        mean_side_area: mean_side,
    })
}
