//! End-to-end checks of the command surface through the real binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tetrafold"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn mj_path() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/mj1996.txt")
        .display()
        .to_string()
}

#[test]
fn build_reports_published_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ham.json");
    let output = run_ok(&[
        "build",
        "--peptide",
        "IDWKKLLDAAKQIL",
        "--matrix",
        &mj_path(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("n_q            46"), "{text}");
    assert!(text.contains("n_geom         21"), "{text}");
    assert!(text.contains("n_contact      25"), "{text}");
    assert!(out.exists());

    // 16-residue instance reports 61/25/36
    let out16 = dir.path().join("ham16.json");
    let output = run_ok(&[
        "build",
        "--peptide",
        "MRWQEMGYIFYPRKLR",
        "--matrix",
        &mj_path(),
        "--out",
        out16.to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("n_q            61"), "{text}");
    assert!(text.contains("n_contact      36"), "{text}");
}

#[test]
fn build_rejects_bad_residue_with_exit_2() {
    let out = bin()
        .args(["build", "--peptide", "HHXPPH", "--matrix", "hp", "--out", "/tmp/nope.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("position 2"), "{err}");
}

#[test]
fn run_refuses_hardware_scale_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "run",
            "--peptide",
            "IDWKKLLDAAKQIL",
            "--matrix",
            &mj_path(),
            "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("simulation refused"), "{err}");
    assert!(err.contains("26"), "{err}");
}

fn small_run(dir: &Path, seed: &str) {
    run_ok(&[
        "run",
        "--peptide",
        "HHPPPHH",
        "--matrix",
        "hp",
        "--out-dir",
        dir.to_str().unwrap(),
        "--rounds",
        "3",
        "--shots",
        "500",
        "--elites",
        "10",
        "--seed",
        seed,
        "--baseline",
    ]);
}

#[test]
fn identical_seeds_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_run(a.path(), "7");
    small_run(b.path(), "7");
    for name in ["manifest.json", "round_00.csv", "round_02.csv", "baseline_01.csv"] {
        let left = std::fs::read(a.path().join(name)).unwrap();
        let right = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
    let c = tempfile::tempdir().unwrap();
    small_run(c.path(), "8");
    assert_ne!(
        std::fs::read(a.path().join("round_00.csv")).unwrap(),
        std::fs::read(c.path().join("round_00.csv")).unwrap()
    );
}

#[test]
fn full_workflow_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    small_run(dir.path(), "3");
    let manifest = dir.path().join("manifest.json");
    let report = dir.path().join("report.json");

    for arm in ["quantum", "random"] {
        for pipeline in ["consensus", "repair"] {
            run_ok(&[
                "postprocess",
                "--manifest",
                manifest.to_str().unwrap(),
                "--arm",
                arm,
                "--pipeline",
                pipeline,
                "--report",
                report.to_str().unwrap(),
            ]);
        }
    }

    run_ok(&[
        "refsolve",
        "--peptide",
        "HHPPPHH",
        "--matrix",
        "hp",
        "--out",
        dir.path().join("ref.json").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    let ref_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ref.json")).unwrap())
            .unwrap();
    assert_eq!(ref_json["method"], "exact");
    assert_eq!(ref_json["e_ref"], -1.0);

    let analysis = dir.path().join("analysis");
    run_ok(&[
        "analyze",
        "--report",
        report.to_str().unwrap(),
        "--out-dir",
        analysis.to_str().unwrap(),
    ]);
    let summary_path = analysis.join("summary.json");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary_path).unwrap()).unwrap();
    assert_eq!(summary["peptide"], "HHPPPHH");
    assert_eq!(summary["e_ref"], -1.0);
    assert!(summary["raw_mean_ratio_random_over_quantum"].is_number());
    assert!(summary["arms"]["quantum"]["feasibility_fraction"].is_number());
    assert!(summary["pipelines"]["consensus"]["e_best_quantum"].is_number());
    for name in ["hist_quantum_consensus.csv", "hist_random_per_sample_repair.csv"] {
        let text = std::fs::read_to_string(analysis.join(name)).unwrap();
        assert!(text.starts_with("stage,energy,count\n"), "{name}");
        assert!(text.lines().count() > 1, "{name} has no rows");
    }

    // reload + re-analysis reproduces identical summary bytes
    let first = std::fs::read(&summary_path).unwrap();
    run_ok(&[
        "analyze",
        "--report",
        report.to_str().unwrap(),
        "--out-dir",
        analysis.to_str().unwrap(),
    ]);
    assert_eq!(first, std::fs::read(&summary_path).unwrap());
}

#[test]
fn analyze_empty_report_writes_headers() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("empty.json");
    std::fs::write(
        &report,
        serde_json::json!({"peptide": "", "n_q": 0, "e_ref": null, "fragments": []}).to_string(),
    )
    .unwrap();
    let analysis = dir.path().join("analysis");
    run_ok(&[
        "analyze",
        "--report",
        report.to_str().unwrap(),
        "--out-dir",
        analysis.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(analysis.join("histograms.csv")).unwrap();
    assert_eq!(text, "arm,pipeline,stage,energy,count\n");
    assert!(analysis.join("summary.json").exists());
}

#[test]
fn baseline_command_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run_ok(&[
        "baseline", "--peptide", "HHPPPHH", "--samples", "1000", "--seed", "4", "--out",
        a.to_str().unwrap(),
    ]);
    run_ok(&[
        "baseline", "--qubits", "9", "--samples", "1000", "--seed", "4", "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn ga_method_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ga.json");
    run_ok(&[
        "refsolve",
        "--peptide",
        "HHPPPHH",
        "--matrix",
        "hp",
        "--method",
        "ga",
        "--seed",
        "2",
        "--population",
        "100",
        "--patience",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["method"], "ga");
    assert!(v["e_ref"].as_f64().unwrap() <= 0.0);
}
