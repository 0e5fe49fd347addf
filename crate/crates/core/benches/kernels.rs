//! Parallel vs sequential comparison of the data-parallel kernels: batch
//! energy evaluation, statevector rotations, and conformation enumeration.
//! Built with default features the plain entry points run on rayon; the
//! `_seq` siblings are the scalar reference paths.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tetrafold::hamiltonian::{build_total, PenaltyConfig, SpinPolynomial};
use tetrafold::lattice::{qubit_layout, InteractionMatrix, Peptide};
use tetrafold::qsim::{apply_pauli_rotation, apply_pauli_rotation_seq, prepare_initial};
use tetrafold::refsolve::{exact_enumerate, exact_enumerate_seq};

fn instance(seq: &str) -> SpinPolynomial {
    let p = Peptide::new(seq).unwrap();
    let m = InteractionMatrix::hp();
    let layout = qubit_layout(&p);
    build_total(&p, &m, &layout, &PenaltyConfig::defaults_for(&m)).unwrap()
}

fn bench_energy_eval(c: &mut Criterion) {
    let h = instance("HHPPHPPHHPPHH"); // 39 qubits, ~1900 terms
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let words: Vec<u64> = (0..5000).map(|_| rng.gen::<u64>() & ((1 << 39) - 1)).collect();
    let mut group = c.benchmark_group("energy_eval_5000");
    group.bench_function(BenchmarkId::new("batch", "parallel"), |b| {
        b.iter(|| black_box(h.evaluate_batch(&words)))
    });
    group.bench_function(BenchmarkId::new("batch", "sequential"), |b| {
        b.iter(|| black_box(h.evaluate_batch_seq(&words)))
    });
    group.finish();
}

fn bench_rotations(c: &mut Criterion) {
    let n_q = 18;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rotations: Vec<(u64, u64, f64)> = (0..16)
        .map(|_| {
            let x = 1u64 << rng.gen_range(0..n_q);
            let z = (rng.gen::<u64>() & ((1 << n_q) - 1)) | x;
            (x, z, rng.gen_range(-1.0..1.0))
        })
        .collect();
    let mut group = c.benchmark_group("rotations_18q_x16");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new("sweep", "parallel"), |b| {
        b.iter(|| {
            let mut state = prepare_initial(&vec![0.1; n_q], 26).unwrap();
            for &(x, z, phi) in &rotations {
                apply_pauli_rotation(&mut state, x, z, phi);
            }
            black_box(state.norm_sqr())
        })
    });
    group.bench_function(BenchmarkId::new("sweep", "sequential"), |b| {
        b.iter(|| {
            let mut state = prepare_initial(&vec![0.1; n_q], 26).unwrap();
            for &(x, z, phi) in &rotations {
                apply_pauli_rotation_seq(&mut state, x, z, phi);
            }
            black_box(state.norm_sqr())
        })
    });
    group.finish();
}

fn bench_enumeration(c: &mut Criterion) {
    let p = Peptide::new("HHPPHPPHHPPH").unwrap(); // 12 residues
    let m = InteractionMatrix::hp();
    let mut group = c.benchmark_group("enumerate_n12");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("dfs", "parallel"), |b| {
        b.iter(|| black_box(exact_enumerate(&p, &m).unwrap().e_ref))
    });
    group.bench_function(BenchmarkId::new("dfs", "sequential"), |b| {
        b.iter(|| black_box(exact_enumerate_seq(&p, &m).unwrap().e_ref))
    });
    group.finish();
}

criterion_group!(benches, bench_energy_eval, bench_rotations, bench_enumeration);
criterion_main!(benches);
