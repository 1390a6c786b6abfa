//! HOM coincidences conditioned on the biexciton detection time.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::histogram::CorrelationHistogram;
use super::peaks::{hom_metrics, integrate_peaks, HomMetrics};
use crate::{Error, Result};

pub const EVENTS_HEADER: &str = "t_b_ps,tau_hom_ps";
pub const EVENTS_SCHEMA: &str = "conditioned-events/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedEvent {
    /// Biexciton detection time after the excitation sync (ps).
    pub t_b: f64,
    /// HOM detector time difference (ps).
    pub tau_hom: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConditionedEventList {
    pub events: Vec<ConditionedEvent>,
}

impl ConditionedEventList {
    pub fn new(events: Vec<ConditionedEvent>) -> Result<Self> {
        for (i, e) in events.iter().enumerate() {
            if !(e.t_b.is_finite() && e.tau_hom.is_finite()) {
                return Err(Error::param("events", format!("row {i} is not finite")));
            }
            if e.t_b < 0.0 {
                return Err(Error::param("events", format!("row {i}: t_b = {} < 0", e.t_b)));
            }
        }
        Ok(Self { events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# schema={EVENTS_SCHEMA}").unwrap();
        writeln!(s, "{EVENTS_HEADER}").unwrap();
        for e in &self.events {
            writeln!(s, "{},{}", e.t_b, e.tau_hom).unwrap();
        }
        s
    }
}

pub fn parse_events(text: &str) -> Result<ConditionedEventList> {
    let mut header_seen = false;
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            let normalized: String = line.split(',').map(str::trim).collect::<Vec<_>>().join(",");
            if normalized != EVENTS_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header '{EVENTS_HEADER}', got '{line}'"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad {what} '{s}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("{what} '{s}' is not finite"),
                });
            }
            Ok(v)
        };
        let t_b = parse(fields[0], "t_b_ps")?;
        let tau_hom = parse(fields[1], "tau_hom_ps")?;
        if t_b < 0.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("t_b_ps = {t_b} < 0"),
            });
        }
        events.push(ConditionedEvent { t_b, tau_hom });
    }
    if !header_seen {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("missing header '{EVENTS_HEADER}'"),
        });
    }
    Ok(ConditionedEventList { events })
}

pub fn load_events(path: &Path) -> Result<ConditionedEventList> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_events(&text)
}

/// Binning and peak layout for [`conditional_hom`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventBinning {
    pub delay: f64,
    pub half_window: f64,
    pub bin_width: f64,
}

impl EventBinning {
    /// Default half window `delay/2 − 2·bin_width`.
    pub fn new(delay: f64, bin_width: f64) -> Self {
        Self {
            delay,
            half_window: 0.5 * delay - 2.0 * bin_width,
            bin_width,
        }
    }

    /// Histogram of `tau_hom` over `±(delay + half_window + bin_width)`,
    /// with a bin centred on zero.
    pub fn histogram<'a>(&self, taus: impl Iterator<Item = &'a f64>) -> Result<CorrelationHistogram> {
        if !(self.bin_width > 0.0) {
            return Err(Error::param("bin_width", format!("{} must be > 0", self.bin_width)));
        }
        let half_bins = ((self.delay + self.half_window) / self.bin_width).ceil() as i64 + 1;
        let n = (2 * half_bins + 1) as usize;
        let mut counts = vec![0u64; n];
        for &t in taus {
            let k = (t / self.bin_width).round() as i64 + half_bins;
            if (0..n as i64).contains(&k) {
                counts[k as usize] += 1;
            }
        }
        Ok(CorrelationHistogram::uniform(-(half_bins as f64) * self.bin_width, self.bin_width, counts)?
            .with_metadata(super::histogram::DEFAULT_REP_PERIOD_PS, self.delay))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalHom {
    pub window: f64,
    pub kept: usize,
    pub kept_fraction: f64,
    pub metrics: HomMetrics,
}

fn metrics_of<'a>(taus: impl Iterator<Item = &'a f64>, binning: &EventBinning) -> Result<HomMetrics> {
    let hist = binning.histogram(taus)?;
    let centers = [-binning.delay, 0.0, binning.delay];
    hom_metrics(&integrate_peaks(&hist, &centers, binning.half_window)?)
}

/// `P₀` and `ν` from all events, ignoring the biexciton time.
pub fn unconditioned_hom(events: &ConditionedEventList, binning: &EventBinning) -> Result<HomMetrics> {
    metrics_of(events.events.iter().map(|e| &e.tau_hom), binning)
}

/// Keeps events with `t_b ≤ window` and analyses their `τ` histogram.
pub fn conditional_hom(
    events: &ConditionedEventList,
    window: f64,
    binning: &EventBinning,
) -> Result<ConditionalHom> {
    if !(window > 0.0) {
        return Err(Error::param("window", format!("{window} must be > 0")));
    }
    let kept: Vec<&ConditionedEvent> = events.events.iter().filter(|e| e.t_b <= window).collect();
    if kept.is_empty() {
        return Err(Error::EmptyPostselectionWindow(window));
    }
    let metrics = metrics_of(kept.iter().map(|e| &e.tau_hom), binning)?;
    Ok(ConditionalHom {
        window,
        kept: kept.len(),
        kept_fraction: kept.len() as f64 / events.len() as f64,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events() -> ConditionedEventList {
        let mut ev = Vec::new();
        for i in 0..300 {
            let t_b = 10.0 + i as f64;
            let slot = [-3000.0, 0.0, 3000.0][i % 3];
            if slot == 0.0 && i % 2 == 0 {
                continue;
            }
            ev.push(ConditionedEvent { t_b, tau_hom: slot + (i % 7) as f64 - 3.0 });
        }
        ConditionedEventList::new(ev).unwrap()
    }

    #[test]
    fn infinite_window_is_the_unconditioned_analysis() {
        let ev = events();
        let b = EventBinning::new(3000.0, 16.0);
        let c = conditional_hom(&ev, f64::INFINITY, &b).unwrap();
        assert_eq!(c.metrics, unconditioned_hom(&ev, &b).unwrap());
        assert_eq!(c.kept_fraction, 1.0);
        assert!((c.metrics.p0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn window_below_first_event_is_empty() {
        let ev = events();
        let b = EventBinning::new(3000.0, 16.0);
        assert!(matches!(
            conditional_hom(&ev, 5.0, &b),
            Err(Error::EmptyPostselectionWindow(_))
        ));
    }

    #[test]
    fn event_csv_round_trip() {
        let ev = events();
        assert_eq!(parse_events(&ev.to_csv()).unwrap(), ev);
        assert!(matches!(
            parse_events("t_b_ps,tau_hom_ps\n-1,0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
