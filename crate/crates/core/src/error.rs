use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped by failure class rather than by module so that a
/// front end can map them onto exit codes without unwrapping nested enums:
/// decode/format/IO problems, invalid caller-supplied parameters, and
/// data-insufficiency (inputs that are well-formed but too small or empty
/// for the requested analysis).
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed image data. `offset` is the byte position at which decoding
    /// failed when the codec tracks positions (the PBM codec does; the PNG
    /// decoder reports `None` and explains itself in `reason`).
    #[error("decode error{}: {reason}", fmt_offset(.offset))]
    Decode {
        offset: Option<usize>,
        reason: String,
    },

    /// Recognizable but unsupported input format (e.g. an RGB PNG).
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Two inputs that must agree in shape do not (testing-function lengths,
    /// descriptor bin counts).
    #[error("shape mismatch: expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// An input collection is empty where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A sample or pool is too small for the requested operation.
    #[error("{what} has {got} element(s), need at least {need}")]
    TooFewSamples {
        what: String,
        got: usize,
        need: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_offset(offset: &Option<usize>) -> String {
    match offset {
        Some(o) => format!(" at byte {o}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
