use thiserror::Error;

/// Errors shared by the exact-arithmetic layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("p must be an odd prime >= 3, got {0}")]
    InvalidPrime(u64),

    #[error("precision exponent must be >= 1")]
    InvalidPrecision,

    #[error("operands live in different rings: Z/{p_lhs}^{prec_lhs} vs Z/{p_rhs}^{prec_rhs}")]
    PrecisionMismatch {
        p_lhs: u64,
        prec_lhs: u32,
        p_rhs: u64,
        prec_rhs: u32,
    },

    #[error("group-ring levels differ: {lhs} vs {rhs}")]
    LevelMismatch { lhs: u32, rhs: u32 },

    #[error("cannot project below level 0")]
    LevelZero,

    #[error("not a unit: valuation is positive")]
    NotAUnit,

    #[error("zero at working precision p^{prec}; rerun with a higher precision")]
    PrecisionExhausted { prec: u32 },

    #[error("cyclotomic element is zero at working precision (valuation >= {num}/{den})")]
    ZeroAtPrecision { num: u64, den: u64 },

    #[error("group-law coefficient at {monomial} has negative valuation {val}")]
    IntegralityViolation { monomial: String, val: i64 },

    #[error("newton iteration stalled: residual valuation stuck at {val}")]
    NonConvergence { val: i64 },
}
