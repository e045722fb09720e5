use thiserror::Error;

/// Errors raised by the library. Validation *failures* of a well-formed system
/// are not errors; they are entries in a [`crate::cifs::ValidationReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shift of the empty word")]
    EmptyWord,

    #[error("letter {letter} outside alphabet of size {alphabet}")]
    LetterOutOfRange { letter: usize, alphabet: usize },

    #[error("point {point:?} lies outside the seed set (distance {distance:e})")]
    OutsideSeed { point: Vec<f64>, distance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level {requested} exceeds weight table depth {available}")]
    LevelTooDeep { requested: usize, available: usize },

    #[error("level sum diverges or is not finite: {0}")]
    NonSummable(String),

    #[error("pressure has no sign change on [{lo}, {hi}] (P(lo) = {p_lo}, P(hi) = {p_hi}); system is not regular")]
    IrregularSystem { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },

    #[error("dimension formula inapplicable: {0}")]
    Inapplicable(String),

    #[error("local dimension undefined: {0}")]
    UndefinedDimension(String),

    #[error("all probes are degenerate (ball mass lower bracket is zero)")]
    DegenerateProbes,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("matrix is not hyperbolic: eigenvalue {re} + {im}i has modulus {modulus}")]
    NotHyperbolic { re: f64, im: f64, modulus: f64 },

    #[error(
        "periodic shadowing is only constructed for expanding matrices \
         (general hyperbolic case needs shadowing along stable and unstable directions)"
    )]
    UnsupportedConstruction,

    #[error("empty measure")]
    EmptyMeasure,
}

pub type Result<T> = std::result::Result<T, Error>;
