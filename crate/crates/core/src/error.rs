use thiserror::Error;

/// Errors surfaced by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid residue '{letter}' at position {position} (expected one of the 20 standard one-letter codes)")]
    InvalidResidue { letter: char, position: usize },

    #[error("peptide has {n} residues, need at least 4")]
    PeptideTooShort { n: usize },

    #[error("bit length mismatch: got {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("turn sequence violates the gauge convention: {0}")]
    GaugeViolation(String),

    #[error("interaction matrix is not symmetric at ({a}, {b})")]
    AsymmetricMatrix { a: char, b: char },

    #[error("interaction matrix has no entry for residue '{0}'")]
    MissingResidue(char),

    #[error("malformed interaction matrix: {0}")]
    MalformedMatrix(String),

    #[error("conformation has overlapping beads")]
    OverlappingBeads,

    #[error("geometry is not feasible (backtracking or overlapping)")]
    InfeasibleGeometry,

    #[error("operator is not diagonal in the computational basis")]
    NonDiagonal,

    #[error("degenerate instance: nested-commutator norm vanishes")]
    DegenerateInstance,

    #[error("hardware-scale instance, simulation refused: {n_q} qubits exceeds the statevector cap of {cap}")]
    SimulatorCap { n_q: usize, cap: usize },

    #[error("need {need} shots, sample set has {have}")]
    NotEnoughShots { need: u64, have: u64 },

    #[error("elite set is empty")]
    EmptyElites,

    #[error("geometry pool exhausted after {attempts} generation attempts")]
    PoolExhausted { attempts: u64 },

    #[error("no geometrically feasible samples to repair")]
    NoFeasibleSamples,

    #[error("exact enumeration refused: {n} residues exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("malformed sample file: {0}")]
    MalformedSamples(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
