//! Poisson maximum-likelihood fit of `A·e^{−(t − t_lo)/τ} + B` to a decay
//! histogram.
//!
//! The fit is Fisher scoring with step halving, started from a
//! deterministic guess. The background is held at `B ≥ 0`. Convergence is judged on the scoring decrement
//! `gᵀ I⁻¹ g`, which does not depend on the units of the parameters, so
//! rescaling the time axis by a power of two rescales `τ` exactly.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::Serialize;

use super::histogram::CorrelationHistogram;
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const MAX_HALVINGS: usize = 60;
const DECREMENT_TOL: f64 = 1e-12;
const MIN_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifetimeFit {
    pub tau: f64,
    pub tau_err: f64,
    /// Counts per bin at `t_lo`.
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub background: f64,
    pub background_err: f64,
    pub iterations: usize,
    pub t_lo: f64,
    pub t_hi: f64,
}

struct Data {
    x: Vec<f64>,
    n: Vec<f64>,
}

/// Parameter order: (A, B, τ).
fn model(p: &Vector3<f64>, x: f64) -> (f64, Vector3<f64>) {
    let (a, b, tau) = (p[0], p[1], p[2]);
    let e = (-x / tau).exp();
    let mu = a * e + b;
    let grad = Vector3::new(e, 1.0, a * e * x / (tau * tau));
    (mu, grad)
}

fn log_likelihood(d: &Data, p: &Vector3<f64>) -> Option<f64> {
    let mut ll = 0.0;
    for (&x, &n) in d.x.iter().zip(&d.n) {
        let (mu, _) = model(p, x);
        if !(mu > 0.0) || !mu.is_finite() {
            return None;
        }
        ll += n * mu.ln() - mu;
    }
    Some(ll)
}

fn score_and_fisher(d: &Data, p: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut g = Vector3::zeros();
    let mut info = Matrix3::zeros();
    for (&x, &n) in d.x.iter().zip(&d.n) {
        let (mu, dmu) = model(p, x);
        g += dmu * (n / mu - 1.0);
        info += dmu * dmu.transpose() / mu;
    }
    (g, info)
}

/// `−∂²ℓ` at `p`.
fn observed_information(d: &Data, p: &Vector3<f64>) -> Matrix3<f64> {
    let (a, tau) = (p[0], p[2]);
    let mut h = Matrix3::zeros();
    for (&x, &n) in d.x.iter().zip(&d.n) {
        let (mu, dmu) = model(p, x);
        let e = (-x / tau).exp();
        let t2 = tau * tau;
        let mut d2 = Matrix3::zeros();
        d2[(0, 2)] = e * x / t2;
        d2[(2, 0)] = d2[(0, 2)];
        d2[(2, 2)] = a * e * (x * x / (t2 * t2) - 2.0 * x / (t2 * tau));
        h += dmu * dmu.transpose() * (n / (mu * mu)) - d2 * (n / mu - 1.0);
    }
    h
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `τ₀` from the log-slope between the first and last quartile, `B₀` from
/// the tail median.
fn initial_guess(d: &Data) -> Result<Vector3<f64>> {
    let q = d.x.len() / 4;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (x1, c1) = (mean(&d.x[..q]), mean(&d.n[..q]));
    let k = d.x.len() - q;
    let (x4, c4) = (mean(&d.x[k..]), mean(&d.n[k..]));
    if !(c1 > c4 + 3.0 * (c4 + 1.0).sqrt()) {
        return Err(Error::Fit(format!(
            "no decay: first-quartile mean {c1:.3} vs last-quartile mean {c4:.3}"
        )));
    }
    let tau0 = (x4 - x1) / (c1 / c4.max(0.5)).ln();
    let b0 = median(&mut d.n[k..].to_vec()).max(0.0);
    let a0 = (c1 - b0).max(0.5 * c1) * (x1 / tau0).exp();
    Ok(Vector3::new(a0, b0, tau0))
}

/// Fits bins with centres in `[t_lo, t_hi]`.
pub fn fit_lifetime(hist: &CorrelationHistogram, t_lo: f64, t_hi: f64) -> Result<LifetimeFit> {
    if !(t_hi > t_lo) {
        return Err(Error::param("fit range", format!("t_hi = {t_hi} must exceed t_lo = {t_lo}")));
    }
    let (x, n): (Vec<f64>, Vec<f64>) = hist
        .centers()
        .iter()
        .zip(hist.counts())
        .filter(|(c, _)| **c >= t_lo && **c <= t_hi)
        .map(|(c, &k)| (c - t_lo, k as f64))
        .unzip();
    if x.len() < MIN_BINS {
        return Err(Error::Fit(format!(
            "{} bins in [{t_lo}, {t_hi}] ps, need at least {MIN_BINS}",
            x.len()
        )));
    }
    if n.iter().all(|&k| k == 0.0) {
        return Err(Error::Fit("all counts in range are zero".into()));
    }
    let data = Data { x, n };
    let mut p = initial_guess(&data)?;
    let mut ll = log_likelihood(&data, &p)
        .ok_or_else(|| Error::Fit(format!("initial guess {p:?} gives non-positive rates")))?;

    for iter in 1..=MAX_ITERATIONS {
        let (g, info) = score_and_fisher(&data, &p);
        let chol_err = || Error::Fit(format!("Fisher information not positive definite at {p:?}"));
        let full = info.cholesky().ok_or_else(chol_err)?.solve(&g);
        // With B on its bound and the scoring step pointing below it, step
        // in (A, τ) only; once those settle, a positive pull on B frees it.
        let step = if p[1] <= 0.0 && full[1] < 0.0 {
            let sub = Matrix2::new(info[(0, 0)], info[(0, 2)], info[(2, 0)], info[(2, 2)]);
            let s = sub.cholesky().ok_or_else(chol_err)?.solve(&Vector2::new(g[0], g[2]));
            let reduced = Vector3::new(s[0], 0.0, s[1]);
            if g.dot(&reduced) < DECREMENT_TOL && g[1] > 0.0 {
                Vector3::new(0.0, g[1] / info[(1, 1)], 0.0)
            } else {
                reduced
            }
        } else {
            full
        };
        let decrement = g.dot(&step);
        if decrement < DECREMENT_TOL {
            return finish(&data, p, iter, t_lo, t_hi);
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let mut trial = p + step * scale;
            trial[1] = trial[1].max(0.0);
            if trial[2] > 0.0 {
                if let Some(l) = log_likelihood(&data, &trial) {
                    if l > ll {
                        p = trial;
                        ll = l;
                        accepted = true;
                        break;
                    }
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            // No ascent direction left within rounding: treat as converged.
            return finish(&data, p, iter, t_lo, t_hi);
        }
    }
    Err(Error::Fit(format!(
        "no convergence after {MAX_ITERATIONS} iterations (A = {:.4e}, B = {:.4e}, tau = {:.4e} ps)",
        p[0], p[1], p[2]
    )))
}

fn finish(d: &Data, p: Vector3<f64>, iterations: usize, t_lo: f64, t_hi: f64) -> Result<LifetimeFit> {
    if !(p[0] > 0.0) {
        return Err(Error::Fit(format!("no decay: fitted amplitude {:.4e}", p[0])));
    }
    let cov = observed_information(d, &p)
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular likelihood curvature".into()))?;
    let err = |i: usize| cov[(i, i)].max(0.0).sqrt();
    Ok(LifetimeFit {
        tau: p[2],
        tau_err: err(2),
        amplitude: p[0],
        amplitude_err: err(0),
        background: p[1],
        background_err: err(1),
        iterations,
        t_lo,
        t_hi,
    })
}
