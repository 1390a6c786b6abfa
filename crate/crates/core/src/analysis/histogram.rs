use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// 80 MHz repetition rate.
pub const DEFAULT_REP_PERIOD_PS: f64 = 12_500.0;
/// Nominal interferometer delay.
pub const DEFAULT_DELAY_PS: f64 = 3_000.0;
pub const HISTOGRAM_HEADER: &str = "bin_center_ps,counts";
pub const HISTOGRAM_SCHEMA: &str = "correlation-histogram/1";

const SPACING_TOL: f64 = 1e-6;

/// Binned coincidence counts on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationHistogram {
    centers: Vec<f64>,
    counts: Vec<u64>,
    bin_width: f64,
    pub rep_period: f64,
    pub delay: f64,
}

fn check_uniform(centers: &[f64]) -> std::result::Result<f64, (usize, String)> {
    if centers.len() < 2 {
        return Err((centers.len(), "need at least two bins".into()));
    }
    let w = centers[1] - centers[0];
    if !(w > 0.0) {
        return Err((1, format!("bin centers not increasing ({} then {})", centers[0], centers[1])));
    }
    for (i, pair) in centers.windows(2).enumerate() {
        let d = pair[1] - pair[0];
        if (d - w).abs() > SPACING_TOL * w.max(1.0) {
            return Err((
                i + 1,
                format!("non-uniform spacing: step {d} ps, expected {w} ps"),
            ));
        }
    }
    Ok(w)
}

impl CorrelationHistogram {
    pub fn new(centers: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if centers.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                actual: counts.len(),
            });
        }
        if let Some(i) = centers.iter().position(|c| !c.is_finite()) {
            return Err(Error::param("bin centers", format!("bin {i} is not finite")));
        }
        let bin_width = check_uniform(&centers)
            .map_err(|(i, m)| Error::param("bin centers", format!("bin {i}: {m}")))?;
        Ok(Self {
            centers,
            counts,
            bin_width,
            rep_period: DEFAULT_REP_PERIOD_PS,
            delay: DEFAULT_DELAY_PS,
        })
    }

    /// Bins of width `bin_width` centred on `start + k·bin_width`.
    pub fn uniform(start: f64, bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        let centers = (0..counts.len()).map(|k| start + k as f64 * bin_width).collect();
        Self::new(centers, counts)
    }

    pub fn with_metadata(mut self, rep_period: f64, delay: f64) -> Self {
        self.rep_period = rep_period;
        self.delay = delay;
        self
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Span covered by the bins, edge to edge.
    pub fn span(&self) -> (f64, f64) {
        let h = 0.5 * self.bin_width;
        (self.centers[0] - h, self.centers[self.centers.len() - 1] + h)
    }

    /// Same bins with every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            counts: self.counts.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# schema={HISTOGRAM_SCHEMA}").unwrap();
        writeln!(s, "# rep_period_ps={}", self.rep_period).unwrap();
        writeln!(s, "# delay_ps={}", self.delay).unwrap();
        writeln!(s, "{HISTOGRAM_HEADER}").unwrap();
        for (c, n) in self.centers.iter().zip(&self.counts) {
            writeln!(s, "{c},{n}").unwrap();
        }
        s
    }
}

fn parse_meta(line: &str, key: &str, lineno: usize) -> Result<Option<f64>> {
    let body = line.trim_start_matches('#').trim();
    let Some(value) = body.strip_prefix(key).and_then(|r| r.strip_prefix('=')) else {
        return Ok(None);
    };
    let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
        line: lineno,
        message: format!("{key}: cannot parse '{}'", value.trim()),
    })?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Parse {
            line: lineno,
            message: format!("{key} must be > 0, got {v}"),
        });
    }
    Ok(Some(v))
}

/// Parses the `bin_center_ps,counts` format. Comment lines start with `#`;
/// `# rep_period_ps=` and `# delay_ps=` set the metadata.
pub fn parse_histogram(text: &str) -> Result<CorrelationHistogram> {
    let mut rep_period = DEFAULT_REP_PERIOD_PS;
    let mut delay = DEFAULT_DELAY_PS;
    let mut header_seen = false;
    let mut centers = Vec::new();
    let mut counts = Vec::new();
    let mut linenos = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(v) = parse_meta(line, "rep_period_ps", lineno)? {
                rep_period = v;
            }
            if let Some(v) = parse_meta(line, "delay_ps", lineno)? {
                delay = v;
            }
            continue;
        }
        if !header_seen {
            let normalized: String = line.split(',').map(str::trim).collect::<Vec<_>>().join(",");
            if normalized != HISTOGRAM_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header '{HISTOGRAM_HEADER}', got '{line}'"),
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
        let center: f64 = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("bad bin center '{}'", fields[0]),
        })?;
        if !center.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("bin center '{}' is not finite", fields[0]),
            });
        }
        let count: i64 = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("counts '{}' is not an integer", fields[1]),
        })?;
        if count < 0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("negative counts {count}"),
            });
        }
        centers.push(center);
        counts.push(count as u64);
        linenos.push(lineno);
    }
    if !header_seen {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("missing header '{HISTOGRAM_HEADER}'"),
        });
    }
    check_uniform(&centers).map_err(|(i, message)| Error::Parse {
        line: linenos.get(i).copied().unwrap_or(text.lines().count()),
        message,
    })?;
    Ok(CorrelationHistogram::new(centers, counts)?.with_metadata(rep_period, delay))
}

pub fn load_histogram(path: &Path) -> Result<CorrelationHistogram> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_histogram(&text)
}

pub fn write_histogram(path: &Path, hist: &CorrelationHistogram) -> Result<()> {
    std::fs::write(path, hist.to_csv()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# delay_ps=2500\nbin_center_ps,counts\n-8,3\n0,5\n8,0\n16,12\n";

    #[test]
    fn parses_rows_and_metadata() {
        let h = parse_histogram(SAMPLE).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h.counts(), &[3, 5, 0, 12]);
        assert_eq!(h.bin_width(), 8.0);
        assert_eq!(h.delay, 2500.0);
        assert_eq!(h.rep_period, DEFAULT_REP_PERIOD_PS);
    }

    #[test]
    fn non_uniform_spacing_names_the_line() {
        let text = "bin_center_ps,counts\n0,1\n8,1\n16,1\n25,1\n";
        match parse_histogram(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_and_malformed_rows_are_rejected() {
        for (text, bad_line) in [
            ("bin_center_ps,counts\n0,1\n8,-2\n", 3),
            ("bin_center_ps,counts\n0,1\n8\n", 3),
            ("bin_center_ps,counts\n0,1\nx,2\n", 3),
            ("wrong,header\n0,1\n", 1),
        ] {
            match parse_histogram(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, bad_line, "{text}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let h = CorrelationHistogram::uniform(-1234.5, 0.1, (0..500).map(|k| k * 7 % 13).collect())
            .unwrap()
            .with_metadata(12_345.0, 2_999.5);
        let back = parse_histogram(&h.to_csv()).unwrap();
        assert_eq!(back, h);
    }
}
