//! Tetrahedral-lattice protein folding workbench.
//!
//! Peptides are encoded as self-avoiding walks on the diamond lattice (two
//! qubits per backbone turn plus one indicator qubit per eligible residue
//! contact), folded into a higher-order spin Hamiltonian with up to five-body
//! terms. Low-energy samples are produced by bias-field digitized
//! counterdiabatic sweeps on a noiseless statevector backend, then cleaned up
//! by classical consensus / per-sample repair pipelines and compared against
//! exact enumeration and a genetic-algorithm reference solver.
//!
//! Data-parallel kernels (batch energy evaluation, statevector rotations,
//! conformation enumeration, pool scoring) run on rayon when the default
//! `parallel` feature is enabled and fall back to sequential loops otherwise.
//! Every kernel is bit-deterministic: results do not depend on thread count.

pub mod bfdcqo;
pub mod bits;
pub mod hamiltonian;
pub mod lattice;
pub mod pauli;
pub mod postproc;
pub mod qsim;
pub mod refsolve;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Write a file through a temporary sibling and an atomic rename.
pub fn write_atomic(path: &std::path::Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
