use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{what} is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("step too large (dt = {dt} ps): {detail}; use a smaller dt")]
    StepTooLarge { dt: f64, detail: String },

    #[error("negative delay requested: tau0 = {0} ps (mirror via conjugate symmetry instead)")]
    NegativeDelay(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{name} = {value} ps is above Fourier limit 2*tau = {limit} ps")]
    AboveFourierLimit {
        name: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("grid truncates emission: n(t_max)/max n = {ratio:.3e} > 1e-3")]
    GridTruncatesEmission { ratio: f64 },

    #[error("non-positive baseline area {0:.3e}")]
    NonPositiveBaseline(f64),

    #[error("classical bound violated: p0 = {0} outside [0, 0.5]")]
    CoincidenceOutOfRange(f64),

    #[error("detector kernel of {kernel} samples wider than grid of {grid} samples")]
    KernelTooWide { kernel: usize, grid: usize },

    #[error("empty postselection (t_cut = {0} ps keeps no records)")]
    EmptyPostselection(f64),

    #[error("empty postselection window (window = {0} ps keeps no events)")]
    EmptyPostselectionWindow(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("overlapping peak windows at {a} ps and {b} ps (half window {half_window} ps)")]
    OverlappingWindows { a: f64, b: f64, half_window: f64 },

    #[error("peak window [{lo}, {hi}] ps clipped by histogram span [{span_lo}, {span_hi}] ps")]
    WindowOutsideSpan {
        lo: f64,
        hi: f64,
        span_lo: f64,
        span_hi: f64,
    },

    #[error("zero reference area: {0}")]
    ZeroArea(&'static str),

    #[error("expected {expected} ordered peaks, got {actual}")]
    PeakLayout { expected: usize, actual: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("lifetime fit: {0}")]
    Fit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::InvalidState(_) => "invalid_state",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::NegativeDelay(_) => "negative_delay",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::AboveFourierLimit { .. } => "above_fourier_limit",
            Error::GridTruncatesEmission { .. } => "grid_truncates_emission",
            Error::NonPositiveBaseline(_) => "non_positive_baseline",
            Error::CoincidenceOutOfRange(_) => "coincidence_out_of_range",
            Error::KernelTooWide { .. } => "kernel_too_wide",
            Error::EmptyPostselection(_) => "empty_postselection",
            Error::EmptyPostselectionWindow(_) => "empty_postselection_window",
            Error::Quadrature(_) => "quadrature",
            Error::OverlappingWindows { .. } => "overlapping_windows",
            Error::WindowOutsideSpan { .. } => "window_outside_span",
            Error::ZeroArea(_) => "zero_area",
            Error::PeakLayout { .. } => "peak_layout",
            Error::Parse { .. } => "parse",
            Error::Fit(_) => "fit",
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
        }
    }
}
