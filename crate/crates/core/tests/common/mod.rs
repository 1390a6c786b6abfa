#![allow(dead_code)]

use hom_cascade::dynamics::{ket_bra, CollapseChannel, QuantumSystem};
use hom_cascade::{CMatrix, ChannelLabel};

/// One-sample Kolmogorov-Smirnov statistic of `samples` against an
/// exponential distribution with the given rate.
pub fn ks_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = -(-rate * t).exp_m1();
            (cdf - i as f64 / n).abs().max((i as f64 + 1.0) / n - cdf)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Two-level emitter `|e⟩ → |g⟩` at rate `gamma`, ground state index 0.
pub fn two_level(gamma: f64) -> QuantumSystem {
    let ch = CollapseChannel::scaled(ChannelLabel::BiexcitonDecay, gamma, &ket_bra(2, 0, 1))
        .unwrap()
        .unwrap();
    QuantumSystem::new(CMatrix::zeros(2, 2), vec![ch]).unwrap()
}
