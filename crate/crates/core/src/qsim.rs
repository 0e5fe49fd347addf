//! Noiseless statevector backend.
//!
//! Amplitudes are stored with qubit `j` at bit `j` of the index. Rotation
//! kernels update amplitude pairs in place through a scratch buffer; each
//! index is written exactly once per rotation, so results are bit-identical
//! whether the kernel runs sequentially or on rayon. A hard qubit cap keeps
//! hardware-scale instances out of the statevector path.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::hamiltonian::SpinPolynomial;
use crate::pauli::{CDTerm, PauliSum};
use crate::{bits, Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default statevector qubit cap; larger instances are refused.
pub const DEFAULT_QUBIT_CAP: usize = 26;

/// Below this size the parallel kernels fall back to the scalar loop.
const PAR_THRESHOLD: usize = 1 << 14;

/// Full complex statevector over `n_q` qubits.
#[derive(Debug, Clone)]
pub struct StateVector {
    n_q: usize,
    amps: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl StateVector {
    /// The |0...0> state, refusing instances above `cap` qubits.
    pub fn zero_state(n_q: usize, cap: usize) -> Result<Self> {
        if n_q > cap {
            return Err(Error::SimulatorCap { n_q, cap });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_q];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_q, amps, scratch: Vec::new() })
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// <psi|M|psi> for a Pauli sum (test and diagnostics path).
    pub fn expectation(&self, m: &PauliSum) -> Complex64 {
        assert_eq!(m.n_q(), self.n_q);
        let mut total = Complex64::new(0.0, 0.0);
        for t in m.terms() {
            let y_count = (t.x & t.z).count_ones();
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..self.amps.len() {
                let j = i ^ t.x as usize;
                let mu = mu_phase(y_count, (i as u64 & t.z).count_ones());
                acc += self.amps[i].conj() * mu * self.amps[j];
            }
            total += t.coeff * acc;
        }
        total
    }

    /// Probability of measuring `word`.
    pub fn probability(&self, word: u64) -> f64 {
        self.amps[word as usize].norm_sqr()
    }
}

/// Per-qubit ground state of `-X + h Z`, eigenvalue `-sqrt(1 + h^2)`:
/// amplitudes (v0, v1) with v1/v0 = h + sqrt(1 + h^2). Positive bias leans
/// the state toward bit 1 (sigma_z = -1).
fn ground_pair(h: f64) -> (f64, f64) {
    let s = (1.0 + h * h).sqrt();
    let r = h + s;
    let norm = (1.0 + r * r).sqrt();
    (1.0 / norm, r / norm)
}

/// Product ground state of the biased driver `sum_j (-X_j + h_j Z_j)`.
pub fn prepare_initial(h: &[f64], cap: usize) -> Result<StateVector> {
    let n_q = h.len();
    let mut state = StateVector::zero_state(n_q, cap)?;
    let mut len = 1usize;
    state.amps[0] = Complex64::new(1.0, 0.0);
    for (j, &hj) in h.iter().enumerate() {
        let (v0, v1) = ground_pair(hj);
        for k in 0..len {
            let base = state.amps[k];
            state.amps[k] = base * v0;
            state.amps[k + (1 << j)] = base * v1;
        }
        len <<= 1;
    }
    Ok(state)
}

#[inline]
fn mu_phase(y_count: u32, z_parity_bits: u32) -> Complex64 {
    // (-i)^y * (-1)^parity
    let e = (2 * z_parity_bits + 3 * y_count) & 3;
    match e {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Apply `exp(-i phi P)` for the Pauli string with masks (x, z).
pub fn apply_pauli_rotation(state: &mut StateVector, x: u64, z: u64, phi: f64) {
    #[cfg(feature = "parallel")]
    {
        if state.amps.len() >= PAR_THRESHOLD {
            apply_rotation_impl(state, x, z, phi, true);
            return;
        }
    }
    apply_rotation_impl(state, x, z, phi, false);
}

/// Scalar reference path for [`apply_pauli_rotation`]; bit-identical output.
pub fn apply_pauli_rotation_seq(state: &mut StateVector, x: u64, z: u64, phi: f64) {
    apply_rotation_impl(state, x, z, phi, false);
}

fn apply_rotation_impl(state: &mut StateVector, x: u64, z: u64, phi: f64, parallel: bool) {
    debug_assert!(state.n_q == 64 || (x | z) >> state.n_q == 0);
    let (sin, cos) = phi.sin_cos();
    let y_count = (x & z).count_ones();
    if x == 0 {
        // diagonal string: pure phases, sampling distribution untouched
        let phase_plus = Complex64::new(cos, -sin);
        let phase_minus = Complex64::new(cos, sin);
        let kernel = |(i, a): (usize, &mut Complex64)| {
            let parity = (i as u64 & z).count_ones() % 2;
            *a *= if parity == 0 { phase_plus } else { phase_minus };
        };
        #[cfg(feature = "parallel")]
        if parallel {
            state.amps.par_iter_mut().enumerate().for_each(|(i, a)| kernel((i, a)));
            return;
        }
        let _ = parallel;
        state.amps.iter_mut().enumerate().for_each(kernel);
        return;
    }

    if state.scratch.len() != state.amps.len() {
        state.scratch = vec![Complex64::new(0.0, 0.0); state.amps.len()];
    }
    let amps = &state.amps;
    let minus_i_sin = Complex64::new(0.0, -sin);
    let kernel = |(i, out): (usize, &mut Complex64)| {
        let j = i ^ x as usize;
        let mu = mu_phase(y_count, (i as u64 & z).count_ones());
        *out = cos * amps[i] + minus_i_sin * mu * amps[j];
    };
    #[cfg(feature = "parallel")]
    if parallel {
        state.scratch.par_iter_mut().enumerate().for_each(|(i, a)| kernel((i, a)));
        std::mem::swap(&mut state.amps, &mut state.scratch);
        return;
    }
    let _ = parallel;
    state.scratch.iter_mut().enumerate().for_each(kernel);
    std::mem::swap(&mut state.amps, &mut state.scratch);
}

/// Trotterized impulse evolution `prod_l exp(-i dt A_lambda_l)` with
/// midpoint schedule `lambda_l = (l - 1/2) / n_steps` and per-term pruning:
/// rotations with `|dt * r| < theta` are skipped. Terms are applied in
/// canonical order, so the result is independent of thread count.
pub fn trotter_impulse(
    state: &mut StateVector,
    cd: &CDTerm,
    total_time: f64,
    n_steps: usize,
    theta_prune: f64,
) -> Result<()> {
    let dt = total_time / n_steps as f64;
    for l in 1..=n_steps {
        let lambda = (l as f64 - 0.5) / n_steps as f64;
        let alpha = cd.alpha1().eval(lambda)?;
        for rot in cd.rotations() {
            if (dt * rot.r()).abs() < theta_prune {
                continue;
            }
            apply_pauli_rotation(state, rot.x, rot.z, dt * alpha * rot.coeff);
        }
    }
    Ok(())
}

/// Rotations surviving the pruning rule at `dt = T / n_steps`.
pub fn surviving_rotation_count(cd: &CDTerm, total_time: f64, n_steps: usize, theta: f64) -> usize {
    let dt = total_time / n_steps as f64;
    cd.rotations().iter().filter(|r| (dt * r.r()).abs() >= theta).count()
}

/// Entangling-gate estimate for one full impulse: 2 gates per surviving
/// multi-qubit term per step.
pub fn gate_estimate(cd: &CDTerm, total_time: f64, n_steps: usize, theta: f64) -> u64 {
    let dt = total_time / n_steps as f64;
    let multi = cd
        .rotations()
        .iter()
        .filter(|r| (dt * r.r()).abs() >= theta && (r.x | r.z).count_ones() >= 2)
        .count() as u64;
    2 * multi * n_steps as u64
}

/// Multiset of measured bitstrings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    n_q: usize,
    total_shots: u64,
    counts: BTreeMap<u64, u64>,
}

impl SampleSet {
    pub fn new(n_q: usize) -> Self {
        Self { n_q, total_shots: 0, counts: BTreeMap::new() }
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn add(&mut self, word: u64, count: u64) {
        debug_assert!(self.n_q == 64 || word >> self.n_q == 0);
        *self.counts.entry(word).or_insert(0) += count;
        self.total_shots += count;
    }

    pub fn merge(&mut self, other: &SampleSet) {
        assert_eq!(self.n_q, other.n_q);
        for (&w, &c) in &other.counts {
            self.add(w, c);
        }
    }

    /// Distinct words with counts, ascending by word.
    pub fn counts(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&w, &c)| (w, c))
    }

    pub fn distinct_words(&self) -> Vec<u64> {
        self.counts.keys().copied().collect()
    }

    pub fn distinct_count(&self) -> usize {
        self.counts.len()
    }

    pub fn count_of(&self, word: u64) -> u64 {
        self.counts.get(&word).copied().unwrap_or(0)
    }

    /// Energies of every distinct word under `h` (parallel batch kernel).
    pub fn evaluate_energies(&self, h: &SpinPolynomial) -> BTreeMap<u64, f64> {
        let words = self.distinct_words();
        let energies = h.evaluate_batch(&words);
        words.into_iter().zip(energies).collect()
    }

    /// Shot-weighted mean of the given per-word energies.
    pub fn mean_energy(&self, energies: &BTreeMap<u64, f64>) -> f64 {
        if self.total_shots == 0 {
            return 0.0;
        }
        let sum: f64 = self.counts.iter().map(|(w, &c)| energies[w] * c as f64).sum();
        sum / self.total_shots as f64
    }

    pub fn min_energy(&self, energies: &BTreeMap<u64, f64>) -> Option<f64> {
        self.counts.keys().map(|w| energies[w]).fold(None, |acc, e| {
            Some(match acc {
                None => e,
                Some(a) => a.min(e),
            })
        })
    }

    /// CSV rows "bitstring,count,energy", words ascending. Energy column is
    /// blank when no energy map is supplied.
    pub fn write_csv(&self, path: &Path, energies: Option<&BTreeMap<u64, f64>>) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "bitstring,count,energy")?;
        for (&w, &c) in &self.counts {
            match energies.and_then(|e| e.get(&w)) {
                Some(e) => writeln!(out, "{},{},{}", bits::to_text(w, self.n_q), c, e)?,
                None => writeln!(out, "{},{},", bits::to_text(w, self.n_q), c)?,
            }
        }
        crate::write_atomic(path, &out)
    }

    /// Read a CSV produced by [`SampleSet::write_csv`].
    pub fn read_csv(path: &Path) -> Result<SampleSet> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut set: Option<SampleSet> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if idx == 0 && line.starts_with("bitstring") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let word_text = fields
                .next()
                .ok_or_else(|| Error::MalformedSamples(format!("line {}", idx + 1)))?;
            let count: u64 = fields
                .next()
                .ok_or_else(|| Error::MalformedSamples(format!("line {}", idx + 1)))?
                .trim()
                .parse()
                .map_err(|e| Error::MalformedSamples(format!("line {}: {e}", idx + 1)))?;
            let (word, n) = bits::from_text(word_text)?;
            let set = set.get_or_insert_with(|| SampleSet::new(n));
            if set.n_q != n {
                return Err(Error::MalformedSamples(format!(
                    "line {}: width {} != {}",
                    idx + 1,
                    n,
                    set.n_q
                )));
            }
            set.add(word, count);
        }
        set.ok_or_else(|| Error::MalformedSamples("no rows".into()))
    }
}

/// Draw `n_shots` computational-basis samples; identical seeds give
/// identical sample sets.
pub fn sample(state: &StateVector, n_shots: u64, seed: u64) -> SampleSet {
    let mut cumulative = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = SampleSet::new(state.n_q);
    for _ in 0..n_shots {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u).min(state.amps.len() - 1);
        set.add(idx as u64, 1);
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::SpinPolynomial;
    use crate::pauli::{cd_term, driver};
    use rand::Rng;

    fn z_poly(n_q: usize, terms: &[(u64, f64)]) -> SpinPolynomial {
        SpinPolynomial::new(n_q, terms.iter().copied().collect())
    }

    #[test]
    fn cap_enforced() {
        assert!(StateVector::zero_state(5, 26).is_ok());
        match StateVector::zero_state(46, 26) {
            Err(Error::SimulatorCap { n_q: 46, cap: 26 }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn uniform_superposition_at_zero_bias() {
        let state = prepare_initial(&[0.0; 3], 26).unwrap();
        let expect = 1.0 / (8f64).sqrt();
        for a in state.amplitudes() {
            assert!((a.re - expect).abs() <= 1e-12 && a.im == 0.0);
        }
    }

    #[test]
    fn initial_state_reaches_driver_ground_energy() {
        // per-qubit <-X + hZ> must equal -sqrt(1 + h^2)
        for h in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let state = prepare_initial(&[h], 26).unwrap();
            let e = state.expectation(&driver(&[h]));
            assert!(e.im.abs() <= 1e-12);
            assert!((e.re + (1.0 + h * h).sqrt()).abs() <= 1e-12, "h={h}");
        }
    }

    #[test]
    fn positive_bias_leans_to_bit_one() {
        let state = prepare_initial(&[1.5], 26).unwrap();
        let mut z = PauliSum::new(1);
        z.add_term(0, 1, Complex64::new(1.0, 0.0));
        assert!(state.expectation(&z).re < 0.0);
    }

    #[test]
    fn zero_angle_is_identity() {
        let mut state = prepare_initial(&[0.3, -0.7], 26).unwrap();
        let before = state.amplitudes().to_vec();
        apply_pauli_rotation(&mut state, 0b01, 0b11, 0.0);
        assert_eq!(state.amplitudes(), &before[..]);
    }

    #[test]
    fn diagonal_rotation_keeps_probabilities() {
        let mut state = prepare_initial(&[0.4, 0.1, -0.2], 26).unwrap();
        let probs: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
        apply_pauli_rotation(&mut state, 0, 0b101, 0.83);
        let after: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
        for (p, q) in probs.iter().zip(&after) {
            assert!((p - q).abs() <= 1e-14);
        }
    }

    #[test]
    fn y_half_pi_flips_basis_state() {
        // exp(-i (pi/2) Y)|0> = |1> up to global phase
        let mut state = StateVector::zero_state(1, 26).unwrap();
        apply_pauli_rotation(&mut state, 1, 1, std::f64::consts::FRAC_PI_2);
        assert!(state.probability(1) > 1.0 - 1e-12);
    }

    /// 2x2 analytic oracle: exp(-i phi Y) = [[cos, -sin], [sin, cos]].
    #[test]
    fn single_qubit_rotation_matches_analytic() {
        for phi in [0.1, 0.7, -1.3] {
            let mut state = prepare_initial(&[0.0], 26).unwrap();
            apply_pauli_rotation(&mut state, 1, 1, phi);
            let inv = std::f64::consts::FRAC_1_SQRT_2;
            let expect0 = (phi.cos() - phi.sin()) * inv;
            let expect1 = (phi.sin() + phi.cos()) * inv;
            assert!((state.amplitudes()[0].re - expect0).abs() <= 1e-12);
            assert!((state.amplitudes()[1].re - expect1).abs() <= 1e-12);
        }
    }

    #[test]
    fn norm_preserved_over_many_rotations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n_q = 8;
        let mut state = prepare_initial(&vec![0.2; n_q], 26).unwrap();
        for _ in 0..10_000 {
            let x = rng.gen::<u64>() & 0xFF;
            let z = rng.gen::<u64>() & 0xFF;
            let phi = rng.gen_range(-1.0..1.0);
            apply_pauli_rotation(&mut state, x, z, phi);
        }
        assert!((state.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn par_and_seq_rotations_bit_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let n_q = 6;
        let mut a = prepare_initial(&vec![0.1; n_q], 26).unwrap();
        let mut b = a.clone();
        for _ in 0..50 {
            let x = rng.gen::<u64>() & 0x3F;
            let z = rng.gen::<u64>() & 0x3F;
            let phi = rng.gen_range(-1.0..1.0);
            apply_rotation_impl(&mut a, x, z, phi, false);
            apply_rotation_impl(&mut b, x, z, phi, cfg!(feature = "parallel"));
        }
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn impulse_prune_all_is_identity() {
        let h_f = z_poly(2, &[(0b11, 1.0), (0b01, -0.5)]);
        let cd = cd_term(&driver(&[0.0, 0.0]), &h_f).unwrap();
        let mut state = prepare_initial(&[0.0, 0.0], 26).unwrap();
        let before = state.amplitudes().to_vec();
        trotter_impulse(&mut state, &cd, 1.0, 1, f64::INFINITY).unwrap();
        assert_eq!(state.amplitudes(), &before[..]);
    }

    #[test]
    fn impulse_single_qubit_analytic() {
        // H_f = Z, h = 0, T = 1, n_steps = 1: one Y rotation with
        // phi = alpha1(1/2) * coeff = (-1/4) * (-2) = 1/2;
        // <Z> after = -sin(2 phi) = -sin(1)
        let h_f = z_poly(1, &[(1, 1.0)]);
        let cd = cd_term(&driver(&[0.0]), &h_f).unwrap();
        let mut state = prepare_initial(&[0.0], 26).unwrap();
        trotter_impulse(&mut state, &cd, 1.0, 1, 0.0).unwrap();
        let mut z = PauliSum::new(1);
        z.add_term(0, 1, Complex64::new(1.0, 0.0));
        let got = state.expectation(&z).re;
        assert!((got + 1f64.sin()).abs() <= 1e-10, "got {got}");
    }

    #[test]
    fn prune_monotone() {
        let h_f = z_poly(3, &[(0b111, 1.0), (0b011, 0.5), (0b001, 0.1)]);
        let cd = cd_term(&driver(&[0.0; 3]), &h_f).unwrap();
        let mut last = usize::MAX;
        for theta in [0.0, 0.1, 0.5, 1.0, 5.0] {
            let n = surviving_rotation_count(&cd, 1.0, 1, theta);
            assert!(n <= last);
            last = n;
        }
        assert_eq!(surviving_rotation_count(&cd, 1.0, 1, f64::INFINITY), 0);
    }

    #[test]
    fn gate_estimate_counts_multiqubit_terms() {
        let h_f = z_poly(3, &[(0b111, 1.0), (0b001, 0.5)]);
        let cd = cd_term(&driver(&[0.0; 3]), &h_f).unwrap();
        // Z0Z1Z2 yields three weight-3 Y strings; Z0 yields one weight-1 Y
        assert_eq!(gate_estimate(&cd, 1.0, 1, 0.0), 6);
        assert_eq!(gate_estimate(&cd, 1.0, 2, 0.0), 12);
    }

    #[test]
    fn sampling_basis_state() {
        let state = StateVector::zero_state(3, 26).unwrap();
        let set = sample(&state, 1000, 42);
        assert_eq!(set.total_shots(), 1000);
        assert_eq!(set.count_of(0), 1000);
    }

    #[test]
    fn sampling_unbiased_on_plus_state() {
        let state = prepare_initial(&[0.0], 26).unwrap();
        let set = sample(&state, 100_000, 7);
        // 5 sigma binomial bound around 50%
        let sigma = (100_000f64 * 0.25).sqrt();
        let ones = set.count_of(1) as f64;
        assert!((ones - 50_000.0).abs() <= 5.0 * sigma, "ones = {ones}");
    }

    #[test]
    fn sampling_deterministic() {
        let state = prepare_initial(&[0.3, -0.4, 0.0], 26).unwrap();
        let a = sample(&state, 5000, 99);
        let b = sample(&state, 5000, 99);
        assert_eq!(a, b);
        let c = sample(&state, 5000, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        let state = prepare_initial(&[0.5, -0.5], 26).unwrap();
        let set = sample(&state, 2000, 5);
        let h = z_poly(2, &[(0b01, 1.0)]);
        let energies = set.evaluate_energies(&h);
        set.write_csv(&path, Some(&energies)).unwrap();
        let back = SampleSet::read_csv(&path).unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn energies_batch_matches_scalar() {
        let h = z_poly(4, &[(0b1010, 1.5), (0b0001, -0.5), (0, 2.0)]);
        let mut set = SampleSet::new(4);
        for w in 0..16 {
            set.add(w, w + 1);
        }
        let map = set.evaluate_energies(&h);
        for (w, e) in &map {
            assert_eq!(*e, h.evaluate_word(*w));
        }
        let mut expected_mean = 0.0;
        let mut total = 0.0;
        for (w, c) in set.counts() {
            expected_mean += h.evaluate_word(w) * c as f64;
            total += c as f64;
        }
        assert!((set.mean_energy(&map) - expected_mean / total).abs() <= 1e-12);
    }
}
