use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("coordinate arity {got} does not match group rank {expected}")]
    Arity { expected: usize, got: usize },

    #[error("operands live on different groups")]
    GroupMismatch,

    #[error("expected a {expected}-side function, got {got}")]
    SideMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("normalized indicator of the empty set is undefined")]
    EmptySet,

    #[error("{0} is not a subset of the enclosing set")]
    NotSubset(&'static str),

    #[error("matrix shape does not fit the group: {0}")]
    Shape(String),

    #[error("coefficients do not sum to zero; the equation is not translation-invariant")]
    NotTranslationInvariant,

    #[error("T{index} is not an automorphism: det = {det}, gcd(det, {modulus}) = {gcd}")]
    NotAutomorphism {
        index: usize,
        det: u64,
        modulus: u64,
        gcd: u64,
    },

    #[error("system is not canonical (T1 must be the identity)")]
    NotCanonical,

    #[error("width {0} is outside [0, 2]")]
    WidthOutOfRange(f64),

    #[error("frequency set contains the trivial character")]
    TrivialFrequency,

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("malformed increment certificate: {0}")]
    MalformedCertificate(String),

    #[error("group of order {0} is too large to enumerate")]
    TooLarge(usize),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
