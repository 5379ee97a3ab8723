use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("frame must have at least one label")]
    EmptyFrame,
    #[error("frame has {0} labels, at most 64 are supported")]
    FrameTooLarge(usize),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("labels must be non-empty strings")]
    EmptyLabel,
    #[error("label `{label}` is not in frame {{{frame}}}")]
    UnknownLabel { label: String, frame: String },
    #[error("mask {mask:#x} does not fit a frame of {size} elements")]
    MaskOutOfRange { mask: u64, size: usize },
    #[error("operands belong to different frames")]
    FrameMismatch,

    #[error("refinement images overlap on `{0}`")]
    OverlappingImages(String),
    #[error("refinement images do not cover `{0}`")]
    UncoveredLabel(String),
    #[error("coarse label `{0}` has no image")]
    MissingImage(String),
    #[error("coarse label `{0}` maps to an empty set")]
    EmptyImage(String),

    #[error("scalar mode mismatch: {0} vs {1}")]
    ModeMismatch(&'static str, &'static str),
    #[error("division by zero")]
    DivisionByZero,
    #[error("polynomial degree exceeds {0} in one variable")]
    DegreeOverflow(u32),
    #[error("denominator vanishes at ({0}, {1})")]
    VanishingDenominator(String, String),
    #[error("symbolic scalars cannot be ordered")]
    NotComparable,
    #[error("cannot parse scalar `{text}`: {reason}")]
    ScalarParse { text: String, reason: String },

    #[error("mass assigned to the empty set")]
    MassOnEmptySet,
    #[error("subset {0} assigned twice")]
    DuplicateFocal(String),
    #[error("masses sum to {0}, expected 1")]
    MassSum(String),
    #[error("mass {value} on {subset} is outside [0, 1]")]
    MassOutOfRange { subset: String, value: String },
    #[error("total conflict: normalizing constant K is zero")]
    TotalConflict,
    #[error("table is not a belief function: {0}")]
    NotABeliefFunction(String),
    #[error("frame of {0} elements is too large for Möbius inversion (max 12)")]
    OracleTooLarge(usize),

    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("strategy {strategy} cannot be applied: {reason}")]
    StrategyMismatch { strategy: &'static str, reason: String },
    #[error("missing focal set {0} in product-space result")]
    MissingFocal(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("unknown quantity `{quantity}` in scenario `{scenario}`")]
    UnknownQuantity { scenario: String, quantity: String },
    #[error("order estimate: {0}")]
    Order(String),

    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<Error> },
}

impl Error {
    /// Errors caused by the request itself (bad syntax, names or
    /// parameters) rather than by the evidence being combined.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::AtLine { source, .. } => source.is_usage(),
            Error::Syntax { .. }
            | Error::ScalarParse { .. }
            | Error::UnknownScenario(_)
            | Error::InvalidParam { .. }
            | Error::UnknownQuantity { .. }
            | Error::Order(_) => true,
            _ => false,
        }
    }
}
