//! Crate-wide error type.

use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Rejected inputs and violated contracts.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A word width was zero or exceeded the 128-qubit register limit.
    BadWidth { width: usize },
    /// A word value does not fit in its declared width.
    ValueOutOfRange { width: usize, value: u128 },
    /// Two words (or a word and a register section) have different widths.
    WidthMismatch { expected: usize, got: usize },
    /// Two states live on different register layouts.
    LayoutMismatch,
    /// A qubit index is outside the register.
    QubitOutOfRange { index: usize, total: usize },
    /// The same qubit was listed twice in a target list.
    DuplicateQubit { index: usize },
    /// A target list or measured subset was empty.
    EmptyQubitList,
    /// A dense matrix arity does not match its target list.
    ArityMismatch { expected: usize, got: usize },
    /// A dense matrix exceeds the configured arity cap.
    ArityCapExceeded { arity: usize, cap: usize },
    /// `U · U†` deviates from the identity by more than the tolerance.
    NotUnitary { max_deviation: f64 },
    /// A basis permutation mapped two inputs to the same output.
    NotInjective,
    /// A basis permutation produced a value outside the register.
    PermutationOutOfRange { value: u128 },
    /// Amplitudes do not form a unit vector.
    NotNormalized { norm: f64 },
    /// An oracle table has the wrong length or an out-of-width entry.
    BadOracleTable,
    /// A section range used by a catalog permutation is invalid.
    BadSection,
    /// A program failed structural validation.
    InvalidProgram(&'static str),
    /// Consecutive oracles in a hybrid chain differ on more than one word.
    ChainPremiseViolated { index: usize, differences: usize },
    /// The oracle is not a single full cycle through all words.
    NotAFullCycle,
    /// No mutation value changes the iterated output.
    NoMutationTarget,
    /// A scalar parameter was outside its allowed range.
    BadParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadWidth { width } => write!(f, "invalid word width {width}"),
            Error::ValueOutOfRange { width, value } => {
                write!(f, "value {value} does not fit in {width} bits")
            }
            Error::WidthMismatch { expected, got } => {
                write!(f, "width mismatch: expected {expected}, got {got}")
            }
            Error::LayoutMismatch => write!(f, "states have different register layouts"),
            Error::QubitOutOfRange { index, total } => {
                write!(f, "qubit index {index} outside register of {total} qubits")
            }
            Error::DuplicateQubit { index } => write!(f, "duplicate qubit index {index}"),
            Error::EmptyQubitList => write!(f, "empty qubit list"),
            Error::ArityMismatch { expected, got } => {
                write!(
                    f,
                    "arity mismatch: matrix covers {expected} qubits, {got} targets given"
                )
            }
            Error::ArityCapExceeded { arity, cap } => {
                write!(f, "dense arity {arity} exceeds cap {cap}")
            }
            Error::NotUnitary { max_deviation } => {
                write!(f, "matrix is not unitary (max deviation {max_deviation:e})")
            }
            Error::NotInjective => write!(f, "basis permutation is not injective"),
            Error::PermutationOutOfRange { value } => {
                write!(
                    f,
                    "basis permutation produced out-of-register value {value}"
                )
            }
            Error::NotNormalized { norm } => write!(f, "state norm {norm} is not 1"),
            Error::BadOracleTable => write!(f, "oracle table length or entry out of range"),
            Error::BadSection => write!(f, "invalid qubit section for catalog permutation"),
            Error::InvalidProgram(why) => write!(f, "invalid program: {why}"),
            Error::ChainPremiseViolated { index, differences } => write!(
                f,
                "oracles {index} and {} differ on {differences} words (at most 1 allowed)",
                index + 1
            ),
            Error::NotAFullCycle => write!(f, "oracle is not a single full cycle"),
            Error::NoMutationTarget => write!(f, "no mutation value changes the iterated output"),
            Error::BadParameter(why) => write!(f, "bad parameter: {why}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
