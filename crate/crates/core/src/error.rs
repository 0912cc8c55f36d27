use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown extension tag `{0}` for p = {1}")]
    UnknownTag(String, u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("element is not a unit (valuation {0})")]
    NotUnit(i64),
    #[error("valuation undecidable: element is zero to working precision")]
    ZeroValuation,
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("mismatched root orders {0} and {1}")]
    MismatchedOrder(u64, u64),
    #[error("denominator {den} does not divide root order {order}")]
    DenominatorMismatch { den: u64, order: u64 },
    #[error("value is not unimodular")]
    NotUnimodular,
    #[error("value is unimodular but not +1 or -1")]
    NotPlusMinusOne,
    #[error("numeric bound {0:e} does not separate +1 from -1")]
    Unseparated(f64),
    #[error("|G|^2 differs from q^a")]
    ModulusMismatch,
    #[error("level {level} exceeds the policy bound {bound} for this extension")]
    LevelExceedsPolicy { level: u32, bound: u32 },
    #[error("restriction to F* cannot be met at level {0}")]
    RestrictionUnsatisfiable(u32),
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("character is not regular")]
    NotRegular,
    #[error("restriction to F* violated: {0}")]
    RestrictionViolated(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("structural invariant violated: {0}")]
    Invariant(String),
    #[error("cannot parse character encoding `{0}`")]
    BadEncoding(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
