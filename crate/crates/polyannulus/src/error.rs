//! Error surface shared by every layer of the kernel.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    /// An input that must be nonzero at the working precision is zero there.
    #[error("operand is zero at the working precision (known mod p^{abs_prec})")]
    ZeroAtPrecision { abs_prec: i64 },

    /// A structurally zero input where the operation is undefined.
    #[error("zero input: {context}")]
    ZeroInput { context: &'static str },

    /// Element is not a unit of the integral ring (reduction is not a monomial).
    #[error("not a unit at the working precision: {context}")]
    NotAUnit { context: String },

    /// A matrix that must be invertible is singular at precision.
    #[error("matrix is not invertible at the working precision: {context}")]
    NotInvertible { context: String },

    /// Guaranteed coefficient window became empty or cannot cover a target.
    #[error("window exhausted in variable {var}: {context}")]
    WindowExhausted { var: usize, context: String },

    /// A coefficient lost all significant p-adic digits.
    #[error("precision exhausted: {context}")]
    PrecisionExhausted { context: String },

    /// Determinant of a Frobenius matrix vanishes at the working precision.
    #[error("determinant is zero at the working precision")]
    ZeroDeterminantAtPrecision,

    /// Requested twist exponent is not integral for the given Frobenius power.
    #[error("twist by {num}/{den} is not integral for f = {f}")]
    NonIntegralTwist { num: i64, den: i64, f: u32 },

    /// Frobenius iteration target is not a multiple of the current power.
    #[error("cannot iterate Frobenius from f = {from} to f' = {to}: not a multiple")]
    IncompatiblePower { from: u32, to: u32 },

    /// The connection fails the integrability (flatness) identity.
    #[error("connection is not integrable: defect in (θ_{i}, θ_{j}) at exponent {exponent:?}")]
    NotIntegrable {
        i: usize,
        j: usize,
        exponent: Vec<i64>,
    },

    /// Decay too slow for the requested operation (needs r < 1).
    #[error("decay too slow: witness violated at level j = {level} in variable {var} (w_j = {w}, bound {bound})")]
    DecayTooSlow {
        var: usize,
        level: i64,
        w: i64,
        bound: String,
    },

    /// A residue that must be an integer (after clearing q−1) is not.
    #[error("non-integral exponent in variable {var}: (q-1)·c has valuation {valuation} < 0")]
    NonIntegralExponent { var: usize, valuation: i64 },

    /// Connection entries have poles deeper than a simple one.
    #[error("connection is not regular singular in variable {var}")]
    NotRegularSingular { var: usize },

    /// A decay witness that the theory guarantees failed to verify.
    #[error("witness failure: {context}")]
    WitnessFailure { context: String },

    /// Frobenius/connection compatibility identity fails beyond tolerance.
    #[error("compatibility defect of valuation {defect_valuation} in variable {var} (required ≥ {required})")]
    CompatibilityDefect {
        var: usize,
        defect_valuation: i64,
        required: i64,
    },

    /// Random instance generation exceeded its retry budget.
    #[error("instance generation failed: {context}")]
    GenerationFailed { context: String },

    /// Ring/parameter mismatch between operands.
    #[error("parameter mismatch: {context}")]
    ParamMismatch { context: String },

    /// Malformed wire-format input.
    #[error("invalid input: {context}")]
    BadInput { context: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, KernelError>;

impl KernelError {
    /// Process exit code for the CLI: 2 no-claim, 3 check failure,
    /// 4 precision/window exhaustion, 5 I/O and parse errors.
    pub fn exit_code(&self) -> i32 {
        use KernelError::*;
        match self {
            WindowExhausted { .. } | PrecisionExhausted { .. } => 4,
            Io(_) | Json(_) | BadInput { .. } => 5,
            _ => 3,
        }
    }
}
