//! Biexciton–exciton three-level emitter.
//!
//! Rate conventions:
//!
//! * Measured lifetimes are *population* lifetimes: `γ = 1/τ`.
//! * The two-photon wavefunction is written with *amplitude* rates
//!   `Γ = γ/2`, so that `|ψ|²` decays at `2Γ = γ`.
//! * The coherence time of a transition obeys the two-level relation
//!   `1/τ_c = 1/(2τ) + γ_φ`; `τ_c = 2τ` is the Fourier limit.
//!
//! The emitter is written in the frame rotating at the two-photon resonance:
//! the biexciton sits at zero energy, the exciton at `Δ_x`, and the
//! excitation pulse is replaced by preparation in `|b⟩` at `t = 0`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ket_bra, ChannelLabel, CollapseChannel, QuantumSystem};
use crate::{CMatrix, Error, Result, C64};

pub const GROUND: usize = 0;
pub const EXCITON: usize = 1;
pub const BIEXCITON: usize = 2;
pub const EMITTER_DIM: usize = 3;

/// Measured biexciton lifetime (ps).
pub const TAU_B_PS: f64 = 237.16;
/// Measured exciton lifetime (ps).
pub const TAU_X_PS: f64 = 367.61;
/// Coherence times that reproduce the measured two-photon interference (ps).
pub const TAU_CB_PS: f64 = 200.0;
pub const TAU_CX_PS: f64 = 450.0;
/// Default exciton detuning from two-photon resonance (rad/ps).
pub const DEFAULT_DELTA_X: f64 = 10.0;
/// Coincidence probability without interference.
pub const P_INFINITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    pub tau_b: f64,
    pub tau_x: f64,
    pub tau_cb: Option<f64>,
    pub tau_cx: Option<f64>,
    pub delta_x: f64,
}

impl CascadeParams {
    /// Fourier-limited emitter with the given lifetimes.
    pub fn new(tau_b: f64, tau_x: f64) -> Self {
        Self {
            tau_b,
            tau_x,
            tau_cb: None,
            tau_cx: None,
            delta_x: DEFAULT_DELTA_X,
        }
    }

    /// Measured lifetimes, no dephasing.
    pub fn measured() -> Self {
        Self::new(TAU_B_PS, TAU_X_PS)
    }

    pub fn with_coherence(mut self, tau_cb: Option<f64>, tau_cx: Option<f64>) -> Self {
        self.tau_cb = tau_cb;
        self.tau_cx = tau_cx;
        self
    }

    pub fn with_delta_x(mut self, delta_x: f64) -> Self {
        self.delta_x = delta_x;
        self
    }

    pub fn validate(&self) -> Result<()> {
        derive_rates(self).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// Population decay `|b⟩ → |x⟩` (ps⁻¹).
    pub gamma_b: f64,
    /// Population decay `|x⟩ → |g⟩` (ps⁻¹).
    pub gamma_x: f64,
    /// Amplitude rate `Γ_b = γ_b/2`.
    pub amp_b: f64,
    /// Amplitude rate `Γ_x = γ_x/2`.
    pub amp_x: f64,
    pub gamma_phi_b: f64,
    pub gamma_phi_x: f64,
}

impl DerivedRates {
    /// Pure-dephasing time `1/γ_φ` of the biexciton level (infinite without dephasing).
    pub fn dephasing_time_b(&self) -> f64 {
        1.0 / self.gamma_phi_b
    }

    pub fn dephasing_time_x(&self) -> f64 {
        1.0 / self.gamma_phi_x
    }

    /// Coherence time reconstructed from `1/τ_c = γ/2 + γ_φ`.
    pub fn coherence_time_b(&self) -> f64 {
        1.0 / (self.gamma_b / 2.0 + self.gamma_phi_b)
    }

    pub fn coherence_time_x(&self) -> f64 {
        1.0 / (self.gamma_x / 2.0 + self.gamma_phi_x)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be finite and > 0")))
    }
}

fn pure_dephasing(name: &'static str, tau_life: f64, tau_c: Option<f64>) -> Result<f64> {
    let Some(tau_c) = tau_c else {
        return Ok(0.0);
    };
    positive(name, tau_c)?;
    let limit = 2.0 * tau_life;
    if tau_c > limit {
        return Err(Error::AboveFourierLimit {
            name,
            value: tau_c,
            limit,
        });
    }
    // Exactly at the limit the difference can round to a tiny negative.
    Ok((1.0 / tau_c - 1.0 / limit).max(0.0))
}

pub fn derive_rates(params: &CascadeParams) -> Result<DerivedRates> {
    positive("tau_b", params.tau_b)?;
    positive("tau_x", params.tau_x)?;
    if !params.delta_x.is_finite() {
        return Err(Error::param("delta_x", "must be finite"));
    }
    let gamma_b = 1.0 / params.tau_b;
    let gamma_x = 1.0 / params.tau_x;
    Ok(DerivedRates {
        gamma_b,
        gamma_x,
        amp_b: gamma_b / 2.0,
        amp_x: gamma_x / 2.0,
        gamma_phi_b: pure_dephasing("tau_cb", params.tau_b, params.tau_cb)?,
        gamma_phi_x: pure_dephasing("tau_cx", params.tau_x, params.tau_cx)?,
    })
}

/// Coherence time corresponding to a fraction of the Fourier limit.
pub fn fourier_fraction_to_coherence(fraction: f64, tau_life: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param("fraction", format!("{fraction} outside (0, 1]")));
    }
    positive("tau_life", tau_life)?;
    Ok(fraction * 2.0 * tau_life)
}

/// Cascade two-photon amplitude `ψ(t_b, t_x)` in ps⁻¹.
pub fn cascade_amplitude(t_b: f64, t_x: f64, rates: &DerivedRates) -> f64 {
    if t_b < 0.0 || t_x < t_b {
        return 0.0;
    }
    2.0 * (rates.amp_b * rates.amp_x).sqrt()
        * (-rates.amp_b * t_b).exp()
        * (-rates.amp_x * (t_x - t_b)).exp()
}

/// Purity of the exciton photon after tracing out the biexciton photon.
pub fn exciton_purity(rates: &DerivedRates) -> f64 {
    rates.amp_b / (rates.amp_b + rates.amp_x)
}

/// `ν = (P∞ − P₀)/(P∞ + P₀)`.
pub fn visibility_from_p0(p0: f64) -> Result<f64> {
    if !(0.0..=P_INFINITY).contains(&p0) {
        return Err(Error::CoincidenceOutOfRange(p0));
    }
    Ok((P_INFINITY - p0) / (P_INFINITY + p0))
}

/// Lowering operators and projectors of the bare emitter.
pub fn sigma_xb() -> CMatrix {
    ket_bra(EMITTER_DIM, EXCITON, BIEXCITON)
}

pub fn sigma_gx() -> CMatrix {
    ket_bra(EMITTER_DIM, GROUND, EXCITON)
}

/// Emitter Hamiltonian in the two-photon rotating frame.
pub fn emitter_hamiltonian(params: &CascadeParams) -> CMatrix {
    ket_bra(EMITTER_DIM, EXCITON, EXCITON) * C64::from(params.delta_x)
}

/// Emitter collapse channels with operators acting on the bare emitter.
pub fn emitter_channels(rates: &DerivedRates) -> Result<Vec<CollapseChannel>> {
    let specs = [
        (ChannelLabel::BiexcitonDecay, rates.gamma_b, sigma_xb()),
        (ChannelLabel::ExcitonDecay, rates.gamma_x, sigma_gx()),
        (
            ChannelLabel::BiexcitonDephasing,
            2.0 * rates.gamma_phi_b,
            ket_bra(EMITTER_DIM, BIEXCITON, BIEXCITON),
        ),
        (
            ChannelLabel::ExcitonDephasing,
            2.0 * rates.gamma_phi_x,
            ket_bra(EMITTER_DIM, EXCITON, EXCITON),
        ),
    ];
    let mut out = Vec::with_capacity(specs.len());
    for (label, rate, jump) in specs {
        out.extend(CollapseChannel::scaled(label, rate, &jump)?);
    }
    Ok(out)
}

pub fn build_emitter_system(params: &CascadeParams) -> Result<QuantumSystem> {
    let rates = derive_rates(params)?;
    QuantumSystem::new(emitter_hamiltonian(params), emitter_channels(&rates)?)
}

/// `|b⟩⟨b|`, the prepared state of every pipeline.
pub fn initial_emitter_state() -> CMatrix {
    ket_bra(EMITTER_DIM, BIEXCITON, BIEXCITON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, TimeGrid};
    use proptest::prelude::*;

    #[test]
    fn dephasing_times_follow_from_coherence_times() {
        let rates = derive_rates(
            &CascadeParams::measured().with_coherence(Some(TAU_CB_PS), Some(TAU_CX_PS)),
        )
        .unwrap();
        assert!((rates.dephasing_time_b() - 345.8).abs() < 0.1);
        assert!((rates.dephasing_time_x() - 1160.0).abs() / 1160.0 < 1e-3);
    }

    #[test]
    fn fourier_limit_has_no_dephasing() {
        let p = CascadeParams::measured().with_coherence(Some(2.0 * TAU_B_PS), Some(2.0 * TAU_X_PS));
        let rates = derive_rates(&p).unwrap();
        assert_eq!(rates.gamma_phi_b, 0.0);
        assert_eq!(rates.gamma_phi_x, 0.0);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let above = CascadeParams::measured().with_coherence(Some(600.0), None);
        assert!(matches!(
            derive_rates(&above),
            Err(Error::AboveFourierLimit { name: "tau_cb", .. })
        ));
        assert!(derive_rates(&CascadeParams::new(0.0, 1.0)).is_err());
        assert!(derive_rates(&CascadeParams::new(1.0, -1.0)).is_err());
        assert!(derive_rates(&CascadeParams::measured().with_coherence(None, Some(0.0))).is_err());
    }

    #[test]
    fn fourier_fraction_arithmetic() {
        assert!((fourier_fraction_to_coherence(0.8, 237.16).unwrap() - 379.456).abs() < 1e-9);
        assert!((fourier_fraction_to_coherence(0.8, 367.61).unwrap() - 588.176).abs() < 1e-9);
        assert_eq!(fourier_fraction_to_coherence(1.0, 100.0).unwrap(), 200.0);
        assert!(fourier_fraction_to_coherence(0.0, 100.0).is_err());
        assert!(fourier_fraction_to_coherence(1.2, 100.0).is_err());
    }

    #[test]
    fn amplitude_respects_time_ordering() {
        let rates = derive_rates(&CascadeParams::measured()).unwrap();
        assert_eq!(cascade_amplitude(100.0, 50.0, &rates), 0.0);
        assert_eq!(cascade_amplitude(-1.0, 50.0, &rates), 0.0);
        let origin = cascade_amplitude(0.0, 0.0, &rates);
        assert!((origin - 2.0 * (rates.amp_b * rates.amp_x).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn amplitude_is_normalised() {
        // Simpson quadrature on the triangle t_x >= t_b.
        let rates = derive_rates(&CascadeParams::measured()).unwrap();
        let h = 2.0;
        let n = 6000; // 12 ns in each direction
        let w = |i: usize| -> f64 {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut total = 0.0;
        for i in 0..=n {
            let tb = i as f64 * h;
            // inner integral over t_x in [t_b, t_b + n h] on a shifted grid
            let mut inner = 0.0;
            for j in 0..=n {
                let tx = tb + j as f64 * h;
                inner += w(j) * cascade_amplitude(tb, tx, &rates).powi(2);
            }
            total += w(i) * inner * h / 3.0;
        }
        total *= h / 3.0;
        assert!((total - 1.0).abs() < 1e-6, "norm = {total}");
    }

    #[test]
    fn purity_values() {
        let sym = derive_rates(&CascadeParams::new(300.0, 300.0)).unwrap();
        assert!((exciton_purity(&sym) - 0.5).abs() < 1e-15);
        let rates = derive_rates(&CascadeParams::measured()).unwrap();
        assert!((exciton_purity(&rates) - 0.6078).abs() < 1e-4);
        let fast_b = derive_rates(&CascadeParams::new(1e-3, 1e6)).unwrap();
        assert!(exciton_purity(&fast_b) > 1.0 - 1e-8);
    }

    #[test]
    fn visibility_mapping() {
        assert!((visibility_from_p0(0.15).unwrap() - 0.5385).abs() < 1e-4);
        assert_eq!(visibility_from_p0(0.5).unwrap(), 0.0);
        assert_eq!(visibility_from_p0(0.0).unwrap(), 1.0);
        assert!(visibility_from_p0(0.51).is_err());
        assert!(visibility_from_p0(-0.01).is_err());
    }

    #[test]
    fn emitter_channel_counts() {
        let bare = build_emitter_system(&CascadeParams::measured()).unwrap();
        assert_eq!(bare.channels().len(), 2);
        let full = build_emitter_system(
            &CascadeParams::measured().with_coherence(Some(TAU_CB_PS), Some(TAU_CX_PS)),
        )
        .unwrap();
        assert_eq!(full.channels().len(), 4);
        assert_eq!(full.dim(), 3);
    }

    #[test]
    fn cascade_decays_to_ground() {
        let p = CascadeParams::measured();
        let sys = build_emitter_system(&p).unwrap();
        let dt = TAU_B_PS / 50.0;
        let grid = TimeGrid::with_steps(0.0, dt, (20.0 * TAU_X_PS / dt).ceil() as usize).unwrap();
        let rho = evolve(&sys, &initial_emitter_state(), &grid).unwrap();
        let last = rho.last().unwrap();
        assert!((last[(GROUND, GROUND)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exciton_population_peaks_at_analytic_time() {
        let p = CascadeParams::measured();
        let rates = derive_rates(&p).unwrap();
        let sys = build_emitter_system(&p).unwrap();
        let dt = 0.1;
        let grid = TimeGrid::new(0.0, 600.0, dt).unwrap();
        let rho = evolve(&sys, &initial_emitter_state(), &grid).unwrap();
        let (k, _) = rho
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r[(EXCITON, EXCITON)].re))
            .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        let t_star = (rates.gamma_b / rates.gamma_x).ln() / (rates.gamma_b - rates.gamma_x);
        assert!((t_star - 293.6).abs() < 1.0, "{t_star}");
        assert!((k as f64 * dt - t_star).abs() <= dt);
    }

    #[test]
    fn exciton_marginal_matches_master_equation() {
        let p = CascadeParams::measured();
        let rates = derive_rates(&p).unwrap();
        let sys = build_emitter_system(&p).unwrap();
        let dt = 2.0;
        let grid = TimeGrid::new(0.0, 4000.0, dt).unwrap();
        let rho = evolve(&sys, &initial_emitter_state(), &grid).unwrap();
        // Marginal of |ψ|² over t_b by trapezoid quadrature, per t_x.
        let marginal: Vec<f64> = grid
            .times()
            .iter()
            .map(|&tx| {
                let m = 400;
                let h = tx / m as f64;
                if tx == 0.0 {
                    return 0.0;
                }
                (0..=m)
                    .map(|j| {
                        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                        w * cascade_amplitude(j as f64 * h, tx, &rates).powi(2)
                    })
                    .sum::<f64>()
                    * h
            })
            .collect();
        let intensity: Vec<f64> = rho
            .iter()
            .map(|r| rates.gamma_x * r[(EXCITON, EXCITON)].re)
            .collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (na, nb) = (norm(&marginal), norm(&intensity));
        let diff = marginal
            .iter()
            .zip(&intensity)
            .map(|(a, b)| (a / na - b / nb).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-3, "L2 difference {diff}");
    }

    proptest! {
        #[test]
        fn coherence_round_trip(tau_b in 10.0f64..2000.0, tau_x in 10.0f64..2000.0,
                                fb in 0.05f64..1.0, fx in 0.05f64..1.0) {
            let p = CascadeParams::new(tau_b, tau_x)
                .with_coherence(Some(fb * 2.0 * tau_b), Some(fx * 2.0 * tau_x));
            let r = derive_rates(&p).unwrap();
            prop_assert!((r.coherence_time_b() / p.tau_cb.unwrap() - 1.0).abs() < 1e-10);
            prop_assert!((r.coherence_time_x() / p.tau_cx.unwrap() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn purity_is_scale_invariant(tau_b in 1.0f64..1000.0, tau_x in 1.0f64..1000.0,
                                     s in 0.01f64..100.0) {
            let a = exciton_purity(&derive_rates(&CascadeParams::new(tau_b, tau_x)).unwrap());
            let b = exciton_purity(&derive_rates(&CascadeParams::new(s * tau_b, s * tau_x)).unwrap());
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((a - tau_x / (tau_b + tau_x)).abs() < 1e-12);
        }

        #[test]
        fn visibility_strictly_decreasing(a in 0.0f64..0.5, b in 0.0f64..0.5) {
            prop_assume!(a < b);
            prop_assert!(visibility_from_p0(a).unwrap() > visibility_from_p0(b).unwrap());
        }
    }
}
