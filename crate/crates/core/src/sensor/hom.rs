//! Time-resolved and time-integrated HOM coincidences.
//!
//! For two independent sources `a`, `b` the coincidence density is
//!
//! ```text
//! G²(t, τ) = ¼ [n_a(t) n_b(t+τ) + n_b(t) n_a(t+τ) − 2 Re{G¹_a(t,τ)* G¹_b(t,τ)}]
//! ```
//!
//! The symmetrised intensity term is used instead of the single ordering
//! `½ n_a(t) n_b(t+τ)`: both integrate to the same `G²_HOM(τ)` over `t`,
//! but only the symmetrised density is non-negative pointwise for
//! identical pure sources. With identical sources (consecutive excitations
//! of the same emitter) it reduces to `½ [n(t) n(t+τ) − |G¹(t,τ)|²]`.
//!
//! Integrating over `t` makes `G²_HOM` even in `τ`, so the `τ < 0` half of
//! every curve is the mirror image of the computed `τ ≥ 0` half.

use super::emission::{trapezoid, EmissionFunctions};
use crate::cascade::{visibility_from_p0, P_INFINITY};
use crate::{Error, Result};

/// Rounding slack when clamping `p0` into `[0, P∞]`.
const P0_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct HomResult {
    /// Delays `−τ_max … τ_max` (ps).
    pub tau: Vec<f64>,
    /// `G²_HOM(τ)`, normalised so that the baseline has unit area.
    pub g2_hom: Vec<f64>,
    /// Same with the interference term dropped.
    pub g2_baseline: Vec<f64>,
    pub p0: f64,
    pub visibility: f64,
}

/// Integrates the coincidence density over `t` for each `τ ≥ 0`.
fn half_curves(em: &EmissionFunctions) -> (Vec<f64>, Vec<f64>) {
    let last = em.n.len() - 1;
    let h = em.t_stride as f64 * em.dt;
    let mut hom = Vec::with_capacity(em.n_tau());
    let mut base = Vec::with_capacity(em.n_tau());
    for k in 0..em.n_tau() {
        let mut inter = Vec::new();
        let mut intens = Vec::new();
        for i in 0..em.n_slices() {
            let ti = i * em.t_stride;
            if ti + k > last {
                break;
            }
            let nn = em.n[ti] * em.n[ti + k];
            intens.push(0.5 * nn);
            inter.push(0.5 * (nn - em.g1[(i, k)].norm_sqr()));
        }
        hom.push(trapezoid(&inter, h));
        base.push(trapezoid(&intens, h));
    }
    (hom, base)
}

fn mirror(half: &[f64]) -> Vec<f64> {
    half.iter()
        .rev()
        .chain(half.iter().skip(1))
        .copied()
        .collect()
}

pub fn hom_g2(em: &EmissionFunctions) -> Result<HomResult> {
    let (hom_half, base_half) = half_curves(em);
    let g2_hom = mirror(&hom_half);
    let g2_baseline = mirror(&base_half);
    let area_hom = trapezoid(&g2_hom, em.dt);
    let area_base = trapezoid(&g2_baseline, em.dt);
    if !(area_base > 0.0) {
        return Err(Error::NonPositiveBaseline(area_base));
    }
    let mut p0 = P_INFINITY * area_hom / area_base;
    if (-P0_SLACK..0.0).contains(&p0) {
        p0 = 0.0;
    } else if p0 > P_INFINITY && p0 <= P_INFINITY + P0_SLACK {
        p0 = P_INFINITY;
    }
    let visibility = visibility_from_p0(p0)?;
    let n_tau = hom_half.len() as isize;
    let tau = (-(n_tau - 1)..n_tau).map(|k| k as f64 * em.dt).collect();
    Ok(HomResult {
        tau,
        g2_hom: g2_hom.iter().map(|v| v / area_base).collect(),
        g2_baseline: g2_baseline.iter().map(|v| v / area_base).collect(),
        p0,
        visibility,
    })
}

impl HomResult {
    pub fn area_hom(&self) -> f64 {
        trapezoid(&self.g2_hom, self.dtau())
    }

    pub fn dtau(&self) -> f64 {
        if self.tau.len() > 1 {
            self.tau[1] - self.tau[0]
        } else {
            0.0
        }
    }
}

/// Convolution with a unit-area Gaussian instrument response of the given
/// FWHM on a uniform grid with spacing `dtau`.
pub fn convolve_detector(curve: &[f64], dtau: f64, fwhm: f64) -> Result<Vec<f64>> {
    if !(fwhm >= 0.0 && fwhm.is_finite()) {
        return Err(Error::param("fwhm", format!("{fwhm} must be >= 0")));
    }
    if !(dtau > 0.0) {
        return Err(Error::param("dtau", format!("{dtau} must be > 0")));
    }
    if fwhm == 0.0 {
        return Ok(curve.to_vec());
    }
    let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    let half = (6.0 * sigma / dtau).ceil() as usize;
    if 2 * half + 1 > curve.len() {
        return Err(Error::KernelTooWide {
            kernel: 2 * half + 1,
            grid: curve.len(),
        });
    }
    let mut kernel: Vec<f64> = (0..=2 * half)
        .map(|j| {
            let x = (j as f64 - half as f64) * dtau / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);
    let n = curve.len() as isize;
    let out = (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(j, w)| {
                    let src = i + half as isize - j as isize;
                    (0..n).contains(&src).then(|| w * curve[src as usize])
                })
                .sum()
        })
        .collect();
    Ok(out)
}
