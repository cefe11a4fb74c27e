//! Crate error type.
//!
//! Budget exhaustion is deliberately an ordinary error variant, not a
//! panic: scan loops that may diverge (conditioning on a thin event,
//! selection rules that stop firing, enumeration past a finite support)
//! are capped, and hitting the cap is a reportable outcome the caller can
//! surface, distinct from a failed check.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse {0:?} as a rational (expected \"num/den\" or an integer)")]
    ParseRatio(String),

    #[error("set is not prefix-free: \"{shorter}\" is a prefix of \"{longer}\"")]
    NotPrefixFree { shorter: String, longer: String },

    #[error("symbol {symbol} does not belong to alphabet {alphabet}")]
    ForeignSymbol { symbol: String, alphabet: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("conditioning event {event} has zero certified mass under {distribution}")]
    ZeroConditioning { event: String, distribution: String },

    #[error(
        "event {event} has no exact mass under {distribution} \
         (certified only to [{lower}, {upper}])"
    )]
    InexactEventMass {
        event: String,
        distribution: String,
        lower: String,
        upper: String,
    },

    #[error("{what}: budget of {budget} exhausted after {spent} steps")]
    BudgetExhausted {
        what: String,
        budget: u64,
        spent: u64,
    },

    #[error("index map is not injective: positions {first} and {second} both map to {image}")]
    NotInjective { first: u64, second: u64, image: u64 },

    #[error("selection rule {rule} is undefined on a prefix of length {prefix_len}")]
    UndefinedSelection { rule: String, prefix_len: usize },

    #[error("partition violation: symbol {symbol} matched {matches} cells")]
    PartitionViolation { symbol: String, matches: usize },

    #[error("cylinder of \"{anchor}\" is not covered at depth {depth}: \"{witness}\" escapes")]
    CoverGap {
        anchor: String,
        depth: usize,
        witness: String,
    },

    #[error("inclusion fails: member \"{witness}\" of the smaller set is not covered")]
    InclusionGap { witness: String },

    #[error("string \"{string}\" is longer than the slice anchor ({len} > {max})")]
    SliceTooLong {
        string: String,
        len: usize,
        max: usize,
    },

    #[error("{m} events would need {cells} joint cells; refusing more than {max}")]
    TooManyCells { m: usize, cells: String, max: usize },

    #[error("input stream ended after {got} symbols")]
    EndOfInput { got: u64 },

    #[error("line {line}: cannot parse {text:?} as a symbol")]
    BadStreamLine { line: usize, text: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that mean "ran out of budget or input", as opposed
    /// to a definite negative verdict or a malformed request.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExhausted { .. } | Error::EndOfInput { .. }
        )
    }
}
