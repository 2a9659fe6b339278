//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid lattice specification: {0}")]
    InvalidLattice(String),

    #[error("field index {k} out of range for group order {n}")]
    FieldIndexOutOfRange { k: usize, n: usize },

    #[error("basis contains a configuration violating the Gauss law at position {index}")]
    GaussLawViolation { index: usize },

    #[error("charge conjugation maps basis configuration {index} outside the basis")]
    SymmetryClosure { index: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix dimension {dim} is not a power of two")]
    NotPowerOfTwo { dim: usize },

    #[error("operator does not commute with the symmetry (commutator norm {norm:.3e})")]
    SymmetryCommutator { norm: f64 },

    #[error("no sector contains the zero-field vacuum configuration")]
    VacuumSectorNotFound,

    #[error("sector basis is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("permutation of length {len} is not a bijection")]
    NotABijection { len: usize },

    #[error("permutation length {len} does not match the minimal embedding dimension {expected}")]
    WrongEmbeddingSize { len: usize, expected: usize },

    #[error("exhaustive search over {qubits} qubits is infeasible; use the greedy local search")]
    BruteForceTooLarge { qubits: usize },

    #[error("time {t} is not on the Trotter grid with step {dt}")]
    OffTimeGrid { t: f64, dt: f64 },

    #[error("Trotter step {dt} must be positive and finite")]
    InvalidTimeStep { dt: f64 },

    #[error("decomposition contains Pauli string {string} outside the Trotter-step template")]
    TemplateMismatch { string: String },

    #[error("correlation time s={s} exceeds t={t}")]
    TimeOrdering { t: f64, s: f64 },

    #[error("circuit width {expected} does not match state width {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("invalid probability {value} for {what}")]
    InvalidProbability { what: &'static str, value: f64 },

    #[error("readout confusion matrix is not left-stochastic (column {column} sums to {sum})")]
    NotLeftStochastic { column: usize, sum: f64 },

    #[error("density matrix trace {trace} is not 1")]
    NotUnitTrace { trace: f64 },

    #[error("fold count s={s} must be smaller than the circuit depth {depth}")]
    FoldTooLong { s: usize, depth: usize },

    #[error("calibration eigenvalue {lambda:.3e} for mask {mask:#b} is below the mitigation floor")]
    LambdaBelowFloor { mask: usize, lambda: f64 },

    #[error("observable contains non-diagonal Pauli string {string}; readout maps act on measured bitstrings only")]
    NotDiagonalObservable { string: String },

    #[error("extrapolation needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("extrapolation design matrix is degenerate")]
    DegenerateFit,

    #[error("noise scale {requested} is not realizable; nearest realizable scales are {nearest:?}")]
    UnrealizableScale { requested: f64, nearest: Vec<f64> },
}

impl Error {
    /// True for errors caused by invalid user input rather than a violated
    /// numerical invariant. The CLI maps the former to exit code 2 and the
    /// latter to exit code 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidLattice(_)
                | Error::FieldIndexOutOfRange { .. }
                | Error::NotPowerOfTwo { .. }
                | Error::NotABijection { .. }
                | Error::WrongEmbeddingSize { .. }
                | Error::BruteForceTooLarge { .. }
                | Error::OffTimeGrid { .. }
                | Error::InvalidTimeStep { .. }
                | Error::TimeOrdering { .. }
                | Error::NotLeftStochastic { .. }
                | Error::WidthMismatch { .. }
                | Error::InvalidProbability { .. }
                | Error::FoldTooLong { .. }
                | Error::TooFewPoints { .. }
                | Error::UnrealizableScale { .. }
        )
    }
}
