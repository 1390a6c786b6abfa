//! Analysis of measured or synthetic coincidence data.
//!
//! `P₀` follows the three-peak area method: with an interferometer delay
//! `δ`, the coincidence histogram shows peaks at `−δ, 0, +δ` and
//! `P₀ = A₀ / (A₋ + A₊)`, which is 0.5 without interference. Areas are raw
//! sums over user-set windows; background subtraction is opt-in.

pub mod conditional;
pub mod histogram;
pub mod lifetime;
pub mod peaks;
pub mod synthetic;

pub use conditional::{
    conditional_hom, load_events, parse_events, unconditioned_hom, ConditionalHom,
    ConditionedEvent, ConditionedEventList, EventBinning,
};
pub use histogram::{load_histogram, parse_histogram, write_histogram, CorrelationHistogram};
pub use lifetime::{fit_lifetime, LifetimeFit};
pub use peaks::{
    default_half_window, g2_zero, hom_metrics, hom_peak_centers, integrate_peaks,
    integrate_peaks_with_background, G2Zero, HomMetrics, Peak, PeakReport,
};
