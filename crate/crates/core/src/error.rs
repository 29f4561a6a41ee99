use thiserror::Error;

/// Errors raised by the geometry, kernel and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter {t} outside curve domain [{lo}, {hi}]")]
    ParameterOutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("curve derivative vanishes at t = {t}")]
    DegenerateDerivative { t: f64 },

    #[error("curve of kind `{kind}` has no differential frame")]
    FrameUnavailable { kind: &'static str },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("point has negative abscissa x = {x}")]
    NegativeAbscissa { x: f64 },

    #[error("singular kernel evaluation: {0}")]
    Singular(String),

    #[error("log-trig integral needs a > |b| (a = {a}, b = {b})")]
    InvalidTrigArguments { a: f64, b: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel {kernel} cannot be used with {mode} configurations")]
    KernelModeMismatch { kernel: String, mode: &'static str },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("node set is not symmetric about y = {axis}")]
    AsymmetricNodes { axis: f64 },

    #[error("non-differentiable configuration: {0}")]
    NonDifferentiable(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
