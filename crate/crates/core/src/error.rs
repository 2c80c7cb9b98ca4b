use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncated header: need {needed} bytes, have {available}")]
    TruncatedHeader { needed: usize, available: usize },

    #[error("truncated data record: expected {expected} bytes of samples, found {found}")]
    TruncatedData { expected: usize, found: usize },

    #[error("invalid header field {field}: {value:?}")]
    InvalidHeaderField { field: &'static str, value: String },

    #[error("signal {label:?}: digital_min {min} must be below digital_max {max}")]
    InvalidDigitalRange { label: String, min: i32, max: i32 },

    #[error("signal {label:?}: physical_min equals physical_max ({value})")]
    InvalidPhysicalRange { label: String, value: f64 },

    #[error("mixed sample rates: {first_label:?} at {first} Hz, {other_label:?} at {other} Hz")]
    MixedSampleRates {
        first_label: String,
        first: f64,
        other_label: String,
        other: f64,
    },

    #[error("signal {label:?} sample {index}: value {value} outside physical range [{min}, {max}]")]
    SampleOutOfRange {
        label: String,
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("annotation line {line}: {message}")]
    Annotation { line: usize, message: String },

    #[error("inverted interval: start {start} >= stop {stop}")]
    InvertedInterval { start: f64, stop: f64 },

    #[error("interval ({start}, {stop}) outside [0, {total}]")]
    IntervalOutOfRange { start: f64, stop: f64, total: f64 },

    #[error("missing electrode {0}")]
    MissingElectrode(String),

    #[error("missing channel {0}")]
    MissingChannel(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid montage: {0}")]
    InvalidMontage(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("empty signal")]
    EmptySignal,

    #[error("window of {0} samples is too short (need at least 2)")]
    WindowTooShort(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape plan fails at conv layer {layer}: {axis} axis is {size}, cannot apply {op}")]
    ShapePlan {
        layer: usize,
        axis: &'static str,
        size: usize,
        op: &'static str,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value produced in {0}")]
    NonFinite(String),

    #[error("total durations differ: {0} s vs {1} s")]
    DurationMismatch(f64, f64),

    #[error("total duration must be positive, got {0}")]
    ZeroDuration(f64),

    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid container: {0}")]
    Container(String),

    #[error("spec hash mismatch: checkpoint {checkpoint}, requested {requested}")]
    SpecHashMismatch { checkpoint: String, requested: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input data).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
