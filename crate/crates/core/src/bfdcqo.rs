//! Bias-field feedback loop around the digitized counterdiabatic sweep.
//!
//! Each round prepares the ground state of the biased driver, applies the
//! impulse evolution, samples, selects the lowest-energy shots and refreshes
//! the per-qubit bias `h_j = -K_s <sigma_z>` over that elite multiset. Rounds
//! are strictly sequential (the bias carries the data dependence); the heavy
//! inner work (energy evaluation, rotation kernels) parallelizes inside each
//! round. A fixed master seed makes the whole run replayable bit for bit.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::hamiltonian::SpinPolynomial;
use crate::pauli::{cd_term, driver};
use crate::qsim::{
    self, gate_estimate, prepare_initial, sample, trotter_impulse, SampleSet,
};
use crate::{bits, Error, Result};

/// Parameters of one feedback run. Defaults mirror the reference setup:
/// 10 rounds of 5000 shots, 100 elites, K_s = 2, T = 1, a single Trotter
/// step and no pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rounds: usize,
    pub shots_per_round: u64,
    pub n_elite: u64,
    pub bias_scale: f64,
    pub total_time: f64,
    pub n_steps: usize,
    pub theta_prune: f64,
    pub seed: u64,
    pub qubit_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            shots_per_round: 5000,
            n_elite: 100,
            bias_scale: 2.0,
            total_time: 1.0,
            n_steps: 1,
            theta_prune: 0.0,
            seed: 0,
            qubit_cap: qsim::DEFAULT_QUBIT_CAP,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rounds >= 1
            && self.n_elite >= 1
            && self.n_elite <= self.shots_per_round
            && self.bias_scale > 0.0
            && self.total_time > 0.0
            && self.n_steps >= 1
            && self.theta_prune >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::MalformedSamples("invalid run configuration".into()))
        }
    }
}

/// Everything recorded about one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Bias field used by this round (all zeros in round 0).
    pub bias: Vec<f64>,
    pub samples: SampleSet,
    pub energies: BTreeMap<u64, f64>,
    /// Energies of the elite shots, ascending.
    pub elite_energies: Vec<f64>,
    pub mean_energy: f64,
    /// Running minimum over all rounds so far.
    pub best_energy: f64,
    pub gate_estimate: u64,
}

/// Deterministic per-stream seed derivation (splitmix64 over the master).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `n_elite` lowest-energy shots counted with multiplicity, as
/// (word, shots taken) pairs. Ties break on (energy, lexicographic text).
pub fn select_elites(
    samples: &SampleSet,
    energies: &BTreeMap<u64, f64>,
    n_elite: u64,
) -> Result<Vec<(u64, u64)>> {
    if samples.total_shots() < n_elite {
        return Err(Error::NotEnoughShots { need: n_elite, have: samples.total_shots() });
    }
    let mut ranked: Vec<(u64, u64)> = samples.counts().collect();
    ranked.sort_by(|a, b| {
        let (ea, eb) = (energies[&a.0], energies[&b.0]);
        ea.total_cmp(&eb)
            .then_with(|| bits::lex_key(a.0, samples.n_q()).cmp(&bits::lex_key(b.0, samples.n_q())))
    });
    let mut remaining = n_elite;
    let mut elites = Vec::new();
    for (word, count) in ranked {
        if remaining == 0 {
            break;
        }
        let take = count.min(remaining);
        elites.push((word, take));
        remaining -= take;
    }
    Ok(elites)
}

/// Bias update `h_j = -K_s <sigma_z>` over the elite multiset; `|h_j| <= K_s`
/// holds because spins are +-1.
pub fn update_bias(elites: &[(u64, u64)], n_q: usize, k_s: f64) -> Result<Vec<f64>> {
    let total: u64 = elites.iter().map(|&(_, c)| c).sum();
    if total == 0 {
        return Err(Error::EmptyElites);
    }
    let mut h = vec![0.0; n_q];
    for item in h.iter_mut().enumerate() {
        let (j, slot) = item;
        let spin_sum: i64 = elites
            .iter()
            .map(|&(w, c)| bits::spin(w, j) * c as i64)
            .sum();
        *slot = -k_s * spin_sum as f64 / total as f64;
    }
    Ok(h)
}

/// Run the full feedback loop and return every round's record (the sample
/// collection across rounds is the algorithm's output).
pub fn run(h_f: &SpinPolynomial, cfg: &RunConfig) -> Result<Vec<RoundRecord>> {
    cfg.validate()?;
    let n_q = h_f.n_q();
    let mut bias = vec![0.0; n_q];
    let mut records: Vec<RoundRecord> = Vec::with_capacity(cfg.rounds);
    let mut best = f64::INFINITY;

    for round in 0..cfg.rounds {
        let h_i = driver(&bias);
        let cd = cd_term(&h_i, h_f)?;
        let mut state = prepare_initial(&bias, cfg.qubit_cap)?;
        trotter_impulse(&mut state, &cd, cfg.total_time, cfg.n_steps, cfg.theta_prune)?;
        let samples = sample(&state, cfg.shots_per_round, derive_seed(cfg.seed, round as u64));
        let energies = samples.evaluate_energies(h_f);

        let elites = select_elites(&samples, &energies, cfg.n_elite)?;
        let mut elite_energies = Vec::with_capacity(cfg.n_elite as usize);
        for &(w, c) in &elites {
            for _ in 0..c {
                elite_energies.push(energies[&w]);
            }
        }
        best = best.min(samples.min_energy(&energies).unwrap_or(f64::INFINITY));

        records.push(RoundRecord {
            round,
            bias: bias.clone(),
            mean_energy: samples.mean_energy(&energies),
            best_energy: best,
            gate_estimate: gate_estimate(&cd, cfg.total_time, cfg.n_steps, cfg.theta_prune),
            samples,
            energies,
            elite_energies,
        });

        bias = update_bias(&elites, n_q, cfg.bias_scale)?;
    }
    Ok(records)
}

/// Union of all samples from every round.
pub fn merge_rounds(records: &[RoundRecord]) -> SampleSet {
    let n_q = records.first().map(|r| r.samples.n_q()).unwrap_or(0);
    let mut all = SampleSet::new(n_q);
    for r in records {
        all.merge(&r.samples);
    }
    all
}
