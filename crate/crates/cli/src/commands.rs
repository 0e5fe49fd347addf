//! Subcommand implementations.

use anyhow::{bail, Context};
use std::path::{Path, PathBuf};

use crate::report::{Fragment, Manifest, Report, RoundEntry};
use tetrafold::bfdcqo::{self, RunConfig};
use tetrafold::hamiltonian::{build_total, PenaltyConfig, SpinPolynomial};
use tetrafold::lattice::{qubit_layout, InteractionMatrix, Peptide, TurnSequence};
use tetrafold::postproc::{
    consensus_pipeline, contact_polarization, feasibility_fraction, per_sample_repair,
    random_baseline, ConsensusConfig, PipelineResult,
};
use tetrafold::qsim::SampleSet;
use tetrafold::refsolve::{exact_enumerate_with_cap, genetic_algorithm, GAConfig};

/// Named pruning presets for the impulse threshold.
pub const PRUNE_LOW: f64 = 0.01;
pub const PRUNE_HIGH: f64 = 2.0;

fn load_matrix(arg: Option<String>) -> anyhow::Result<(InteractionMatrix, String)> {
    let choice = match arg {
        Some(v) => v,
        None => match std::env::var("TETRAFOLD_MATRIX") {
            Ok(v) if !v.is_empty() => v,
            _ => bail!(
                "validation: no contact matrix given; pass --matrix <file|hp> or set TETRAFOLD_MATRIX"
            ),
        },
    };
    if choice == "hp" {
        return Ok((InteractionMatrix::hp(), "hp".into()));
    }
    let m = InteractionMatrix::from_path(Path::new(&choice))
        .with_context(|| format!("loading matrix {choice}"))?;
    Ok((m, choice))
}

fn penalties(
    matrix: &InteractionMatrix,
    back: Option<f64>,
    mismatch: Option<f64>,
    overlap: Option<f64>,
) -> PenaltyConfig {
    let mut pen = PenaltyConfig::defaults_for(matrix);
    if let Some(v) = back {
        pen.lambda_back = v;
    }
    if let Some(v) = mismatch {
        pen.lambda_mismatch = v;
    }
    if let Some(v) = overlap {
        pen.lambda_overlap = v;
    }
    pen
}

fn parse_prune(text: &str) -> anyhow::Result<f64> {
    match text {
        "low" => Ok(PRUNE_LOW),
        "high" => Ok(PRUNE_HIGH),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| *v >= 0.0)
            .ok_or_else(|| anyhow::anyhow!("validation: bad --prune value '{other}'")),
    }
}

pub fn build(
    peptide: &str,
    matrix: Option<String>,
    out: &Path,
    lambda_back: Option<f64>,
    lambda_mismatch: Option<f64>,
    lambda_overlap: Option<f64>,
) -> anyhow::Result<()> {
    let peptide = Peptide::new(peptide)?;
    let (matrix, matrix_name) = load_matrix(matrix)?;
    let pen = penalties(&matrix, lambda_back, lambda_mismatch, lambda_overlap);
    let layout = qubit_layout(&peptide);
    let h = build_total(&peptide, &matrix, &layout, &pen)?;
    h.write_json(out)?;

    println!("peptide        {peptide}");
    println!("matrix         {matrix_name}");
    println!("n_q            {}", layout.n_q);
    println!("n_geom         {}", layout.n_geom);
    println!("n_contact      {}", layout.n_contact);
    println!("terms          {}", h.term_count());
    println!("degree         {}", h.degree());
    for (deg, count) in h.degree_histogram() {
        println!("  degree {deg}: {count} terms");
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub struct RunArgs {
    pub peptide: String,
    pub matrix: Option<String>,
    pub out_dir: PathBuf,
    pub rounds: usize,
    pub shots: u64,
    pub elites: u64,
    pub bias_scale: f64,
    pub time: f64,
    pub steps: usize,
    pub prune: String,
    pub seed: u64,
    pub cap: usize,
    pub baseline: bool,
    pub lambda_back: Option<f64>,
    pub lambda_mismatch: Option<f64>,
    pub lambda_overlap: Option<f64>,
}

pub fn run(args: RunArgs) -> anyhow::Result<()> {
    let peptide = Peptide::new(&args.peptide)?;
    let (matrix, matrix_name) = load_matrix(args.matrix)?;
    let pen = penalties(&matrix, args.lambda_back, args.lambda_mismatch, args.lambda_overlap);
    let layout = qubit_layout(&peptide);
    let h = build_total(&peptide, &matrix, &layout, &pen)?;
    let cfg = RunConfig {
        rounds: args.rounds,
        shots_per_round: args.shots,
        n_elite: args.elites,
        bias_scale: args.bias_scale,
        total_time: args.time,
        n_steps: args.steps,
        theta_prune: parse_prune(&args.prune)?,
        seed: args.seed,
        qubit_cap: args.cap,
    };
    if cfg.validate().is_err() {
        bail!("validation: inconsistent run parameters (rounds/shots/elites/time/steps)");
    }
    // refuse hardware-scale instances before any heavy work
    tetrafold::qsim::StateVector::zero_state(layout.n_q, cfg.qubit_cap)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let records = bfdcqo::run(&h, &cfg)?;

    let ham_file = "hamiltonian.json";
    h.write_json(&args.out_dir.join(ham_file))?;

    let mut round_entries = Vec::with_capacity(records.len());
    for rec in &records {
        let samples_file = format!("round_{:02}.csv", rec.round);
        rec.samples.write_csv(&args.out_dir.join(&samples_file), Some(&rec.energies))?;
        round_entries.push(RoundEntry {
            round: rec.round,
            bias: rec.bias.clone(),
            mean_energy: rec.mean_energy,
            best_energy: rec.best_energy,
            gate_estimate: rec.gate_estimate,
            samples_file,
        });
    }

    let mut baseline_files = Vec::new();
    if args.baseline {
        for i in 0..records.len() {
            let set = random_baseline(
                cfg.shots_per_round,
                layout.n_q,
                bfdcqo::derive_seed(cfg.seed, 0x72616e64 + i as u64),
            );
            let energies = set.evaluate_energies(&h);
            let file = format!("baseline_{i:02}.csv");
            set.write_csv(&args.out_dir.join(&file), Some(&energies))?;
            baseline_files.push(file);
        }
    }

    let manifest = Manifest {
        peptide: peptide.to_string(),
        matrix: matrix_name,
        penalties: pen,
        run: cfg,
        n_q: layout.n_q,
        hamiltonian_file: ham_file.into(),
        rounds: round_entries,
        baseline_files,
    };
    tetrafold::write_atomic(
        &args.out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    let last = records.last().expect("at least one round");
    println!(
        "completed {} rounds; best energy {:.6}; final-round mean {:.6}",
        records.len(),
        last.best_energy,
        last.mean_energy
    );
    println!("manifest {}", args.out_dir.join("manifest.json").display());
    Ok(())
}

pub fn baseline(
    qubits: Option<usize>,
    peptide: Option<String>,
    samples: u64,
    seed: u64,
    out: &Path,
    hamiltonian: Option<PathBuf>,
) -> anyhow::Result<()> {
    let n_q = match (qubits, peptide) {
        (Some(n), _) => n,
        (None, Some(seq)) => qubit_layout(&Peptide::new(&seq)?).n_q,
        (None, None) => bail!("validation: pass --qubits or --peptide"),
    };
    let set = random_baseline(samples, n_q, seed);
    let energies = match hamiltonian {
        Some(path) => Some(SpinPolynomial::read_json(&path)?).map(|h| set.evaluate_energies(&h)),
        None => None,
    };
    set.write_csv(out, energies.as_ref())?;
    println!("wrote {} samples over {} qubits to {}", samples, n_q, out.display());
    Ok(())
}

struct LoadedArm {
    batches: Vec<SampleSet>,
    merged: SampleSet,
}

fn load_arm(manifest: &Manifest, dir: &Path, arm: &str) -> anyhow::Result<LoadedArm> {
    let files: Vec<&String> = match arm {
        "quantum" => manifest.rounds.iter().map(|r| &r.samples_file).collect(),
        "random" => {
            if manifest.baseline_files.is_empty() {
                bail!("manifest has no baseline batches; re-run with --baseline");
            }
            manifest.baseline_files.iter().collect()
        }
        other => bail!("validation: unknown arm '{other}'"),
    };
    let mut batches = Vec::with_capacity(files.len());
    for f in files {
        batches.push(SampleSet::read_csv(&dir.join(f))?);
    }
    let mut merged = batches[0].clone();
    for b in &batches[1..] {
        merged.merge(b);
    }
    Ok(LoadedArm { batches, merged })
}

fn mean_abs_gap(pol: &[f64]) -> f64 {
    if pol.is_empty() {
        return 0.0;
    }
    pol.iter().map(|p| (p - 0.5).abs()).sum::<f64>() / pol.len() as f64
}

pub fn postprocess(
    manifest_path: &Path,
    arm: &str,
    pipeline: &str,
    top_k: u64,
    pool_size: usize,
    seed: Option<u64>,
    report_path: &Path,
) -> anyhow::Result<()> {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let peptide = Peptide::new(&manifest.peptide)?;
    let layout = qubit_layout(&peptide);
    let h = SpinPolynomial::read_json(&dir.join(&manifest.hamiltonian_file))?;
    let seed = seed.unwrap_or(manifest.run.seed);

    let loaded = load_arm(&manifest, dir, arm)?;
    let energies = loaded.merged.evaluate_energies(&h);

    let (result, e_avg, batch_finals): (PipelineResult, f64, Vec<f64>) = match pipeline {
        "consensus" => {
            let cfg = ConsensusConfig { top_k, pool_size };
            let merged = consensus_pipeline(&loaded.merged, &energies, &h, &layout, &cfg, seed)?;
            let mut finals = Vec::with_capacity(loaded.batches.len());
            for batch in &loaded.batches {
                let be = batch.evaluate_energies(&h);
                finals.push(consensus_pipeline(batch, &be, &h, &layout, &cfg, seed)?.final_energy);
            }
            let avg = finals.iter().sum::<f64>() / finals.len() as f64;
            (merged, avg, finals)
        }
        "repair" => {
            let merged = per_sample_repair(&loaded.merged, &energies, &h, &layout, seed)?;
            let avg = merged.e_avg;
            (merged, avg, Vec::new())
        }
        other => bail!("validation: unknown pipeline '{other}'"),
    };

    let fragment = Fragment {
        arm: arm.into(),
        pipeline: result.pipeline.clone(),
        raw_mean: loaded.merged.mean_energy(&energies),
        raw_best: loaded.merged.min_energy(&energies).unwrap_or(f64::INFINITY),
        e_avg,
        e_best: result.final_energy,
        batch_finals,
        feasibility_fraction: feasibility_fraction(&loaded.merged, &layout),
        polarization_gap: mean_abs_gap(&contact_polarization(
            &loaded.merged,
            &energies,
            &layout,
            top_k,
        )),
        result,
    };

    let mut report = Report::load_or_new(report_path)?;
    report.peptide = manifest.peptide.clone();
    report.n_q = manifest.n_q;
    println!(
        "{arm}/{pipeline}: e_best {:.6}, e_avg {:.6}, feasibility {:.4}",
        fragment.e_best, fragment.e_avg, fragment.feasibility_fraction
    );
    report.upsert(fragment);
    report.save(report_path)?;
    println!("report {}", report_path.display());
    Ok(())
}

pub fn analyze(report_path: &Path, out_dir: &Path) -> anyhow::Result<()> {
    let report = Report::load_or_new(report_path)?;
    std::fs::create_dir_all(out_dir)?;

    if report.fragments.is_empty() {
        tetrafold::write_atomic(&out_dir.join("histograms.csv"), b"arm,pipeline,stage,energy,count\n")?;
    }
    for frag in &report.fragments {
        let mut csv = String::from("stage,energy,count\n");
        for stage in &frag.result.stages {
            for &(energy, count) in &stage.entries {
                csv.push_str(&format!("{},{},{}\n", stage.stage, energy, count));
            }
        }
        let name = format!("hist_{}_{}.csv", frag.arm, frag.pipeline);
        tetrafold::write_atomic(&out_dir.join(name), csv.as_bytes())?;
    }

    let pick = |arm: &str, pipeline: &str| -> Option<&Fragment> {
        report.fragments.iter().find(|f| f.arm == arm && f.pipeline == pipeline)
    };
    let arm_stats = |arm: &str| -> Option<serde_json::Value> {
        report.fragments.iter().find(|f| f.arm == arm).map(|f| {
            serde_json::json!({
                "raw_mean": f.raw_mean,
                "raw_best": f.raw_best,
                "feasibility_fraction": f.feasibility_fraction,
                "polarization_gap": f.polarization_gap,
            })
        })
    };
    let pipeline_stats = |name: &str| -> serde_json::Value {
        let q = pick("quantum", name);
        let r = pick("random", name);
        serde_json::json!({
            "e_avg_quantum": q.map(|f| f.e_avg),
            "e_avg_random": r.map(|f| f.e_avg),
            "e_best_quantum": q.map(|f| f.e_best),
            "e_best_random": r.map(|f| f.e_best),
        })
    };
    let raw_ratio = match (
        report.fragments.iter().find(|f| f.arm == "random"),
        report.fragments.iter().find(|f| f.arm == "quantum"),
    ) {
        (Some(r), Some(q)) if q.raw_mean != 0.0 => Some(r.raw_mean / q.raw_mean),
        _ => None,
    };

    let summary = serde_json::json!({
        "peptide": report.peptide,
        "n_q": report.n_q,
        "e_ref": report.e_ref,
        "arms": {
            "quantum": arm_stats("quantum"),
            "random": arm_stats("random"),
        },
        "pipelines": {
            "consensus": pipeline_stats("consensus"),
            "per_sample_repair": pipeline_stats("per_sample_repair"),
        },
        "raw_mean_ratio_random_over_quantum": raw_ratio,
    });
    tetrafold::write_atomic(
        &out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    println!("analysis in {}", out_dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn refsolve(
    peptide: &str,
    matrix: Option<String>,
    method: &str,
    seed: u64,
    max_residues: usize,
    out: &Path,
    report: Option<PathBuf>,
    population: usize,
    patience: usize,
    generations: usize,
) -> anyhow::Result<()> {
    let peptide = Peptide::new(peptide)?;
    let (matrix, _) = load_matrix(matrix)?;
    let result = match method {
        "exact" => exact_enumerate_with_cap(&peptide, &matrix, max_residues)?,
        "ga" => {
            let cfg = GAConfig {
                population,
                patience,
                max_generations: generations,
                seed,
                ..GAConfig::default()
            };
            genetic_algorithm(&peptide, &matrix, &cfg)?
        }
        other => bail!("validation: unknown method '{other}'"),
    };
    tetrafold::write_atomic(out, serde_json::to_string_pretty(&result)?.as_bytes())?;
    println!(
        "{} e_ref {:.6} (turns {:?}, {} generations)",
        result.method,
        result.e_ref,
        TurnSequence::new(result.turns.clone())?.turns(),
        result.generations
    );
    if let Some(report_path) = report {
        let mut rep = Report::load_or_new(&report_path)?;
        rep.peptide = peptide.to_string();
        rep.e_ref = Some(result.e_ref);
        rep.save(&report_path)?;
        println!("e_ref recorded in {}", report_path.display());
    }
    Ok(())
}
