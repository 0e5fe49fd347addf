//! On-disk shapes for run manifests and experiment reports.

use serde::{Deserialize, Serialize};
use tetrafold::bfdcqo::RunConfig;
use tetrafold::hamiltonian::PenaltyConfig;
use tetrafold::postproc::PipelineResult;

/// Everything a run leaves behind, enough to re-drive post-processing
/// offline. Deliberately timestamp-free: identical seeds give byte-identical
/// manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub peptide: String,
    pub matrix: String,
    pub penalties: PenaltyConfig,
    pub run: RunConfig,
    pub n_q: usize,
    pub hamiltonian_file: String,
    pub rounds: Vec<RoundEntry>,
    /// Equal-shot uniform batches mirroring the rounds (present when the
    /// baseline arm was requested).
    pub baseline_files: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundEntry {
    pub round: usize,
    pub bias: Vec<f64>,
    pub mean_energy: f64,
    pub best_energy: f64,
    pub gate_estimate: u64,
    pub samples_file: String,
}

/// Accumulated post-processing results for one instance.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Report {
    pub peptide: String,
    pub n_q: usize,
    pub e_ref: Option<f64>,
    pub fragments: Vec<Fragment>,
}

/// One (arm, pipeline) outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fragment {
    pub arm: String,
    pub pipeline: String,
    pub raw_mean: f64,
    pub raw_best: f64,
    /// Mean final energy: per-batch consensus finals, or the shot-weighted
    /// mean of per-sample repaired finals.
    pub e_avg: f64,
    /// Final energy of the pipeline on the merged collection.
    pub e_best: f64,
    /// Consensus finals per batch (empty for per-sample repair).
    pub batch_finals: Vec<f64>,
    pub feasibility_fraction: f64,
    /// Mean |p - 0.5| over contact qubits.
    pub polarization_gap: f64,
    pub result: PipelineResult,
}

impl Report {
    pub fn load_or_new(path: &std::path::Path) -> anyhow::Result<Self> {
        if path.exists() {
            Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
        } else {
            Ok(Report::default())
        }
    }

    pub fn save(&self, path: &std::path::Path) -> anyhow::Result<()> {
        tetrafold::write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(())
    }

    /// Replace a same-keyed fragment or append.
    pub fn upsert(&mut self, fragment: Fragment) {
        if let Some(slot) = self
            .fragments
            .iter_mut()
            .find(|f| f.arm == fragment.arm && f.pipeline == fragment.pipeline)
        {
            *slot = fragment;
        } else {
            self.fragments.push(fragment);
        }
    }
}
