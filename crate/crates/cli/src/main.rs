//! Command-line workbench: build folding instances, run bias-field
//! counterdiabatic sampling, post-process sample collections, and emit
//! analysis data. Exit codes: 0 ok, 1 runtime failure, 2 validation failure.

mod commands;
mod report;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "tetrafold", version, about = "Tetrahedral-lattice folding workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the problem Hamiltonian and print the qubit layout.
    Build {
        /// Peptide as one-letter residue codes.
        #[arg(long)]
        peptide: String,
        /// Contact-matrix file, or "hp" for the built-in toy matrix.
        /// Falls back to the TETRAFOLD_MATRIX environment variable.
        #[arg(long)]
        matrix: Option<String>,
        /// Output Hamiltonian JSON path.
        #[arg(long, default_value = "hamiltonian.json")]
        out: PathBuf,
        /// Backbone penalty override (default 10x the largest |eps|).
        #[arg(long)]
        lambda_back: Option<f64>,
        /// Contact-mismatch penalty override.
        #[arg(long)]
        lambda_mismatch: Option<f64>,
        /// Overlap penalty override.
        #[arg(long)]
        lambda_overlap: Option<f64>,
    },
    /// Run the bias-field feedback loop and persist all samples.
    Run {
        #[arg(long)]
        peptide: String,
        #[arg(long)]
        matrix: Option<String>,
        /// Output directory for the manifest, Hamiltonian and sample CSVs.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 5000)]
        shots: u64,
        /// Elite count for the bias update.
        #[arg(long, default_value_t = 100)]
        elites: u64,
        /// Bias scale K_s.
        #[arg(long, default_value_t = 2.0)]
        bias_scale: f64,
        /// Total evolution time T.
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Pruning threshold: a number, or the presets "low" (0.01) /
        /// "high" (2.0).
        #[arg(long, default_value = "0")]
        prune: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Statevector qubit cap; larger instances are refused.
        #[arg(long, default_value_t = 26)]
        cap: usize,
        /// Also generate equal-shot uniform-random batches.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        lambda_back: Option<f64>,
        #[arg(long)]
        lambda_mismatch: Option<f64>,
        #[arg(long)]
        lambda_overlap: Option<f64>,
    },
    /// Generate uniform random bitstrings as a standalone comparison arm.
    Baseline {
        /// Qubit count (or derive it from --peptide).
        #[arg(long)]
        qubits: Option<usize>,
        #[arg(long)]
        peptide: Option<String>,
        #[arg(long, default_value_t = 50000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Optional Hamiltonian JSON; adds the energy column.
        #[arg(long)]
        hamiltonian: Option<PathBuf>,
    },
    /// Run a repair pipeline over stored samples and extend a report.
    Postprocess {
        /// Run manifest to read samples and the Hamiltonian from.
        #[arg(long)]
        manifest: PathBuf,
        /// Which sample collection to process.
        #[arg(long, value_parser = ["quantum", "random"])]
        arm: String,
        #[arg(long, value_parser = ["consensus", "repair"])]
        pipeline: String,
        /// Top-k shots feeding the consensus vote and polarization.
        #[arg(long, default_value_t = 2000)]
        top_k: u64,
        /// Geometry-candidate pool size for consensus.
        #[arg(long, default_value_t = 200)]
        pool_size: usize,
        /// Pipeline seed; defaults to the run seed from the manifest.
        #[arg(long)]
        seed: Option<u64>,
        /// Report JSON to create or extend.
        #[arg(long)]
        report: PathBuf,
    },
    /// Emit per-stage histogram CSVs and a summary JSON from a report.
    Analyze {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Classical reference solvers: exhaustive enumeration or the GA.
    Refsolve {
        #[arg(long)]
        peptide: String,
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long, value_parser = ["exact", "ga"], default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Residue cap for exhaustive enumeration.
        #[arg(long, default_value_t = 12)]
        max_residues: usize,
        #[arg(long)]
        out: PathBuf,
        /// Optional report JSON whose e_ref field is set from this result.
        #[arg(long)]
        report: Option<PathBuf>,
        /// GA population (ga method only).
        #[arg(long, default_value_t = 400)]
        population: usize,
        /// GA convergence patience in generations.
        #[arg(long, default_value_t = 300)]
        patience: usize,
        /// GA generation cap.
        #[arg(long, default_value_t = 5000)]
        generations: usize,
    },
}

/// Validation failures exit with 2, runtime failures with 1.
fn classify(err: &anyhow::Error) -> u8 {
    use tetrafold::Error as E;
    match err.downcast_ref::<E>() {
        Some(
            E::InvalidResidue { .. }
            | E::PeptideTooShort { .. }
            | E::AsymmetricMatrix { .. }
            | E::MissingResidue(_)
            | E::MalformedMatrix(_)
            | E::LengthMismatch { .. }
            | E::GaugeViolation(_)
            | E::SimulatorCap { .. }
            | E::EnumerationCap { .. },
        ) => 2,
        _ => {
            if err.to_string().starts_with("validation:") {
                2
            } else {
                1
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build { peptide, matrix, out, lambda_back, lambda_mismatch, lambda_overlap } => {
            commands::build(&peptide, matrix, &out, lambda_back, lambda_mismatch, lambda_overlap)
        }
        Command::Run {
            peptide,
            matrix,
            out_dir,
            rounds,
            shots,
            elites,
            bias_scale,
            time,
            steps,
            prune,
            seed,
            cap,
            baseline,
            lambda_back,
            lambda_mismatch,
            lambda_overlap,
        } => commands::run(commands::RunArgs {
            peptide,
            matrix,
            out_dir,
            rounds,
            shots,
            elites,
            bias_scale,
            time,
            steps,
            prune,
            seed,
            cap,
            baseline,
            lambda_back,
            lambda_mismatch,
            lambda_overlap,
        }),
        Command::Baseline { qubits, peptide, samples, seed, out, hamiltonian } => {
            commands::baseline(qubits, peptide, samples, seed, &out, hamiltonian)
        }
        Command::Postprocess { manifest, arm, pipeline, top_k, pool_size, seed, report } => {
            commands::postprocess(&manifest, &arm, &pipeline, top_k, pool_size, seed, &report)
        }
        Command::Analyze { report, out_dir } => commands::analyze(&report, &out_dir),
        Command::Refsolve {
            peptide,
            matrix,
            method,
            seed,
            max_residues,
            out,
            report,
            population,
            patience,
            generations,
        } => commands::refsolve(
            &peptide,
            matrix,
            &method,
            seed,
            max_residues,
            &out,
            report,
            population,
            patience,
            generations,
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}
