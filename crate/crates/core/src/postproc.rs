//! Classical repair pipelines over raw sample sets.
//!
//! The consensus pipeline aggregates a contact-vote across the lowest-energy
//! shots, matches the voted contact pattern against a pool of feasible
//! backbone geometries, and repairs the contacts of the winner. Per-sample
//! repair instead fixes every feasible sample independently (conditional
//! contact optimum, then first-improvement bit-flip descent) and keeps the
//! best. A uniform-random sampler provides the comparison arm, and the
//! polarization / feasibility diagnostics quantify how much contact signal a
//! sample set carries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::bfdcqo::{derive_seed, select_elites};
use crate::hamiltonian::SpinPolynomial;
use crate::lattice::{
    decode_geometry, encode_geometry, is_self_avoiding, no_backtracking, residues_for_geom_bits,
    turns_to_positions, QubitLayout, TurnSequence,
};
use crate::qsim::SampleSet;
use crate::{bits, Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Upper bound on rejection-sampling attempts while topping up the pool.
const POOL_ATTEMPT_CAP: u64 = 1_000_000;

/// Consensus pipeline knobs: how many low-energy shots vote, and how many
/// geometry candidates are scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub top_k: u64,
    pub pool_size: usize,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self { top_k: 2000, pool_size: 200 }
    }
}

/// Energy histogram of one pipeline stage: (energy, shot count) rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDistribution {
    pub stage: String,
    pub entries: Vec<(f64, u64)>,
}

impl StageDistribution {
    fn from_weighted(stage: &str, pairs: impl IntoIterator<Item = (f64, u64)>) -> Self {
        let mut merged: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
        for (e, c) in pairs {
            let entry = merged.entry(e.to_bits()).or_insert((e, 0));
            entry.1 += c;
        }
        let mut entries: Vec<(f64, u64)> = merged.into_values().collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { stage: stage.to_string(), entries }
    }

    pub fn shot_count(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    pub fn mean(&self) -> f64 {
        let total = self.shot_count();
        if total == 0 {
            return 0.0;
        }
        self.entries.iter().map(|&(e, c)| e * c as f64).sum::<f64>() / total as f64
    }

    pub fn min(&self) -> Option<f64> {
        self.entries.first().map(|&(e, _)| e)
    }
}

/// Outcome of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub pipeline: String,
    pub n_q: usize,
    /// Final bitstring, qubit 0 first.
    pub final_bitstring: String,
    pub final_energy: f64,
    /// Headline distribution mean: pool scores for consensus, descended
    /// per-shot energies for per-sample repair.
    pub e_avg: f64,
    /// Share of raw shots whose geometry decodes feasibly.
    pub feasibility_fraction: f64,
    /// Per-contact-qubit fraction of top shots with the bit set.
    pub polarization: Vec<f64>,
    pub stages: Vec<StageDistribution>,
}

impl PipelineResult {
    pub fn final_word(&self) -> u64 {
        bits::from_text(&self.final_bitstring).expect("valid text").0
    }
}

fn decoded_turns(word: u64, layout: &QubitLayout) -> TurnSequence {
    let n_res = residues_for_geom_bits(layout.n_geom);
    decode_geometry(layout.geometry_bits(word), layout.n_geom, n_res).expect("width fixed")
}

fn word_is_feasible(word: u64, layout: &QubitLayout) -> bool {
    let turns = decoded_turns(word, layout);
    no_backtracking(&turns) && is_self_avoiding(&turns_to_positions(&turns))
}

/// Share of shots whose geometry is non-backtracking and self-avoiding.
pub fn feasibility_fraction(samples: &SampleSet, layout: &QubitLayout) -> f64 {
    if samples.total_shots() == 0 {
        return 0.0;
    }
    let feasible: u64 = samples
        .counts()
        .filter(|&(w, _)| word_is_feasible(w, layout))
        .map(|(_, c)| c)
        .sum();
    feasible as f64 / samples.total_shots() as f64
}

/// Per-contact-qubit fraction of the `top_k` lowest-energy shots with the
/// bit set; values live in [0, 1], 0.5 means no signal.
pub fn contact_polarization(
    samples: &SampleSet,
    energies: &BTreeMap<u64, f64>,
    layout: &QubitLayout,
    top_k: u64,
) -> Vec<f64> {
    let k = top_k.min(samples.total_shots());
    if k == 0 {
        return vec![0.5; layout.n_contact];
    }
    let top = select_elites(samples, energies, k).expect("k clamped");
    let total: u64 = top.iter().map(|&(_, c)| c).sum();
    (0..layout.n_contact)
        .map(|p| {
            let q = layout.contact_qubit(p);
            let ones: u64 = top
                .iter()
                .filter(|&&(w, _)| bits::bit(w, q) == 1)
                .map(|&(_, c)| c)
                .sum();
            ones as f64 / total as f64
        })
        .collect()
}

/// Majority-vote contact bits over the `top_k` lowest-energy shots:
/// bit = 1 iff the shot-weighted <sigma_z> is negative, ties vote 0.
pub fn consensus_contacts(
    samples: &SampleSet,
    energies: &BTreeMap<u64, f64>,
    layout: &QubitLayout,
    top_k: u64,
) -> u64 {
    let k = top_k.min(samples.total_shots());
    if k == 0 {
        return 0;
    }
    let top = select_elites(samples, energies, k).expect("k clamped");
    let mut contacts = 0u64;
    for p in 0..layout.n_contact {
        let q = layout.contact_qubit(p);
        let spin_sum: i64 = top.iter().map(|&(w, c)| bits::spin(w, q) * c as i64).sum();
        if spin_sum < 0 {
            contacts |= 1 << p;
        }
    }
    contacts
}

/// Optimal contact bits for a fixed feasible geometry under the full
/// Hamiltonian. Contact variables decouple unless the Hamiltonian carries
/// explicit contact-contact terms, in which case each connected component of
/// that coupling graph is optimized exactly.
pub fn repair_contacts(
    geometry: &TurnSequence,
    h_f: &SpinPolynomial,
    layout: &QubitLayout,
) -> Result<u64> {
    if !no_backtracking(geometry) || !is_self_avoiding(&turns_to_positions(geometry)) {
        return Err(Error::InfeasibleGeometry);
    }
    let geom_word = encode_geometry(geometry)?;
    let geom_mask = (1u64 << layout.n_geom) - 1;
    let reduced = h_f.partial_evaluate(geom_mask, geom_word);
    Ok(optimize_contact_vars(&reduced, layout) << layout.n_geom >> layout.n_geom)
}

/// Exact minimizer of a polynomial over the contact variables (geometry
/// variables already clamped). Returns contact bits relative to pair index.
fn optimize_contact_vars(reduced: &SpinPolynomial, layout: &QubitLayout) -> u64 {
    // coupling graph over contact qubits
    let mut linear = vec![0.0f64; layout.n_contact];
    let mut edges: Vec<(usize, usize, u64)> = Vec::new();
    let mut coupled: BTreeMap<u64, f64> = BTreeMap::new();
    for &(mask, c) in reduced.terms() {
        let k = mask.count_ones();
        if k == 0 {
            continue;
        }
        let p = (mask.trailing_zeros() as usize).saturating_sub(layout.n_geom);
        if k == 1 {
            linear[p] += c;
        } else {
            // multi-contact term: handled per connected component
            *coupled.entry(mask).or_insert(0.0) += c;
            let qs: Vec<usize> = (0..64)
                .filter(|j| (mask >> j) & 1 == 1)
                .map(|j| j - layout.n_geom)
                .collect();
            for w in qs.windows(2) {
                edges.push((w[0], w[1], mask));
            }
        }
    }

    if coupled.is_empty() {
        // independent qubits: spin -1 (bit on) wins iff the linear
        // coefficient is positive; ties keep the contact off
        let mut bits_out = 0u64;
        for (p, &a) in linear.iter().enumerate() {
            if a > 0.0 {
                bits_out |= 1 << p;
            }
        }
        return bits_out;
    }

    // union-find over contact indices
    let mut parent: Vec<usize> = (0..layout.n_contact).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for &(a, b, _) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for p in 0..layout.n_contact {
        let root = find(&mut parent, p);
        components.entry(root).or_default().push(p);
    }

    let mut bits_out = 0u64;
    for members in components.values() {
        assert!(members.len() <= 20, "contact component too large for exact enumeration");
        let mut best_assign = 0u64;
        let mut best_e = f64::INFINITY;
        for assign in 0..(1u64 << members.len()) {
            let mut word = 0u64;
            for (slot, &p) in members.iter().enumerate() {
                if (assign >> slot) & 1 == 1 {
                    word |= 1 << (layout.n_geom + p);
                }
            }
            let mut e = 0.0;
            for (p, &a) in linear.iter().enumerate() {
                if members.contains(&p) {
                    e += a * bits::spin(word, layout.n_geom + p) as f64;
                }
            }
            for (&mask, &c) in &coupled {
                if (0..64).filter(|j| (mask >> j) & 1 == 1).all(|j| {
                    members.contains(&(j - layout.n_geom))
                }) {
                    let parity = (mask & word).count_ones() % 2;
                    e += if parity == 0 { c } else { -c };
                }
            }
            if e < best_e {
                best_e = e;
                best_assign = assign;
            }
        }
        for (slot, &p) in members.iter().enumerate() {
            if (best_assign >> slot) & 1 == 1 {
                bits_out |= 1 << p;
            }
        }
    }
    bits_out
}

/// Uniformly random feasible geometry under the gauge, by rejection.
fn random_feasible_geometry(rng: &mut ChaCha8Rng, n_res: usize) -> Option<u64> {
    let mut turns = Vec::with_capacity(n_res - 1);
    turns.push(0u8);
    turns.push(1);
    turns.push(if rng.gen::<bool>() { 0 } else { 2 });
    for _ in 3..n_res - 1 {
        let prev = *turns.last().unwrap();
        let mut t = rng.gen_range(0..3u8);
        if t >= prev {
            t += 1;
        }
        turns.push(t);
    }
    let seq = TurnSequence::new(turns).ok()?;
    if !no_backtracking(&seq) || !is_self_avoiding(&turns_to_positions(&seq)) {
        return None;
    }
    encode_geometry(&seq).ok()
}

/// Consensus pipeline: vote contacts over the best shots, score a feasible
/// geometry pool against the vote, then repair the winner's contacts.
pub fn consensus_pipeline(
    samples: &SampleSet,
    energies: &BTreeMap<u64, f64>,
    h_f: &SpinPolynomial,
    layout: &QubitLayout,
    cfg: &ConsensusConfig,
    seed: u64,
) -> Result<PipelineResult> {
    if samples.total_shots() == 0 {
        return Err(Error::MalformedSamples("empty sample set".into()));
    }
    let n_res = residues_for_geom_bits(layout.n_geom);
    let contacts = consensus_contacts(samples, energies, layout, cfg.top_k);

    // pool: distinct feasible sampled geometries first (best raw energy
    // first), topped up with uniform feasible walks
    let mut seen: BTreeSet<u64> = BTreeSet::new();
    let mut sampled: Vec<(f64, u64, u64)> = Vec::new(); // (best energy, lex, geom)
    for (w, _) in samples.counts() {
        if !word_is_feasible(w, layout) {
            continue;
        }
        let g = layout.geometry_bits(w);
        if seen.insert(g) {
            let others = samples
                .counts()
                .filter(|&(v, _)| layout.geometry_bits(v) == g)
                .map(|(v, _)| energies[&v])
                .fold(f64::INFINITY, f64::min);
            sampled.push((others, bits::lex_key(g, layout.n_geom), g));
        }
    }
    sampled.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut pool: Vec<u64> = sampled.iter().take(cfg.pool_size).map(|&(_, _, g)| g).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x706f6f6c));
    let mut attempts = 0u64;
    let mut stalled = 0u64;
    let pool_set: &mut BTreeSet<u64> = &mut pool.iter().copied().collect();
    // a long streak without a new geometry means the space is exhausted
    while pool.len() < cfg.pool_size && attempts < POOL_ATTEMPT_CAP && stalled < 10_000 {
        attempts += 1;
        stalled += 1;
        if let Some(g) = random_feasible_geometry(&mut rng, n_res) {
            if pool_set.insert(g) {
                pool.push(g);
                stalled = 0;
            }
        }
    }
    if pool.is_empty() {
        return Err(Error::PoolExhausted { attempts });
    }

    // score every (geometry, consensus contacts) pair under the full H
    let scored_words: Vec<u64> = pool.iter().map(|&g| layout.assemble(g, contacts)).collect();
    let scores = h_f.evaluate_batch(&scored_words);

    let mut best_idx = 0;
    for i in 1..pool.len() {
        let better = scores[i].total_cmp(&scores[best_idx]).then(
            bits::lex_key(pool[i], layout.n_geom).cmp(&bits::lex_key(pool[best_idx], layout.n_geom)),
        );
        if better.is_lt() {
            best_idx = i;
        }
    }
    let best_geom = pool[best_idx];
    let turns = decode_geometry(best_geom, layout.n_geom, n_res)?;
    let repaired = repair_contacts(&turns, h_f, layout)?;
    let final_word = layout.assemble(best_geom, repaired);
    let final_energy = h_f.evaluate_word(final_word);
    debug_assert!(final_energy <= scores[best_idx] + 1e-12);

    let raw = StageDistribution::from_weighted(
        "raw",
        samples.counts().map(|(w, c)| (energies[&w], c)),
    );
    let pool_scored =
        StageDistribution::from_weighted("pool_scored", scores.iter().map(|&e| (e, 1)));
    let final_stage = StageDistribution::from_weighted("final", [(final_energy, 1)]);
    let e_avg = pool_scored.mean();

    Ok(PipelineResult {
        pipeline: "consensus".into(),
        n_q: layout.n_q,
        final_bitstring: bits::to_text(final_word, layout.n_q),
        final_energy,
        e_avg,
        feasibility_fraction: feasibility_fraction(samples, layout),
        polarization: contact_polarization(samples, energies, layout, cfg.top_k),
        stages: vec![raw, pool_scored, final_stage],
    })
}

/// Repair one feasible word: conditional contact optimum, then seeded
/// first-improvement single-bit descent on the full bitstring.
fn repair_one(
    word: u64,
    h_f: &SpinPolynomial,
    layout: &QubitLayout,
    flip_order: &[usize],
) -> Result<(u64, f64, f64)> {
    let turns = decoded_turns(word, layout);
    let repaired = repair_contacts(&turns, h_f, layout)?;
    let start = layout.assemble(layout.geometry_bits(word), repaired);
    let contact_energy = h_f.evaluate_word(start);

    let mut current = start;
    let mut energy = contact_energy;
    loop {
        let mut improved = false;
        for &q in flip_order {
            let candidate = current ^ (1 << q);
            let e = h_f.evaluate_word(candidate);
            if e < energy {
                current = candidate;
                energy = e;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    debug_assert!(energy <= contact_energy);
    Ok((current, contact_energy, energy))
}

/// Per-sample repair pipeline over every feasible sample, best-of reduction.
pub fn per_sample_repair(
    samples: &SampleSet,
    energies: &BTreeMap<u64, f64>,
    h_f: &SpinPolynomial,
    layout: &QubitLayout,
    seed: u64,
) -> Result<PipelineResult> {
    if samples.total_shots() == 0 {
        return Err(Error::MalformedSamples("empty sample set".into()));
    }
    let feasible: Vec<(u64, u64)> = samples
        .counts()
        .filter(|&(w, _)| word_is_feasible(w, layout))
        .collect();
    if feasible.is_empty() {
        return Err(Error::NoFeasibleSamples);
    }

    let mut flip_order: Vec<usize> = (0..layout.n_q).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x666c6970));
    for i in (1..flip_order.len()).rev() {
        let j = rng.gen_range(0..=i);
        flip_order.swap(i, j);
    }

    let repair = |&(w, c): &(u64, u64)| -> Result<(u64, u64, f64, f64)> {
        let (word, contact_e, final_e) = repair_one(w, h_f, layout, &flip_order)?;
        Ok((word, c, contact_e, final_e))
    };
    #[cfg(feature = "parallel")]
    let repaired: Vec<(u64, u64, f64, f64)> =
        feasible.par_iter().map(repair).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let repaired: Vec<(u64, u64, f64, f64)> =
        feasible.iter().map(repair).collect::<Result<_>>()?;

    let mut best: Option<(u64, f64)> = None;
    for &(word, _, _, final_e) in &repaired {
        let replace = match best {
            None => true,
            Some((bw, be)) => final_e
                .total_cmp(&be)
                .then(bits::lex_key(word, layout.n_q).cmp(&bits::lex_key(bw, layout.n_q)))
                .is_lt(),
        };
        if replace {
            best = Some((word, final_e));
        }
    }
    let (final_word, final_energy) = best.expect("nonempty");

    let raw = StageDistribution::from_weighted(
        "raw",
        samples.counts().map(|(w, c)| (energies[&w], c)),
    );
    let feasible_raw = StageDistribution::from_weighted(
        "feasible_raw",
        feasible.iter().map(|&(w, c)| (energies[&w], c)),
    );
    let contact_repaired = StageDistribution::from_weighted(
        "contact_repaired",
        repaired.iter().map(|&(_, c, e, _)| (e, c)),
    );
    let descended = StageDistribution::from_weighted(
        "descended",
        repaired.iter().map(|&(_, c, _, e)| (e, c)),
    );
    let e_avg = descended.mean();

    Ok(PipelineResult {
        pipeline: "per_sample_repair".into(),
        n_q: layout.n_q,
        final_bitstring: bits::to_text(final_word, layout.n_q),
        final_energy,
        e_avg,
        feasibility_fraction: feasibility_fraction(samples, layout),
        polarization: contact_polarization(samples, energies, layout, 2000),
        stages: vec![raw, feasible_raw, contact_repaired, descended],
    })
}

/// Uniform i.i.d. bitstrings over `n_q` qubits, seeded.
pub fn random_baseline(n_samples: u64, n_q: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = if n_q == 64 { u64::MAX } else { (1u64 << n_q) - 1 };
    let mut set = SampleSet::new(n_q);
    for _ in 0..n_samples {
        set.add(rng.gen::<u64>() & mask, 1);
    }
    set
}
