//! Diagonal problem Hamiltonian as a higher-order spin polynomial.
//!
//! `H = H_back + H_contact` over spin variables `s_j = 1 - 2*b_j`. The
//! backbone part charges `lambda_back` per pair of equal consecutive turns
//! (degree <= 4). The contact part rewards each asserted contact with its pair
//! energy, charges `lambda_mismatch * (d^2 - 3)` when the asserted pair is not
//! lattice-adjacent, and charges a contact-gated overlap penalty on the four
//! "wing" pairs (i+-1, j), (i, j+-1): conditioned on the contact being
//! adjacent, each wing's squared distance is exactly 8 when distinct and 0 on
//! an overlap, so `lambda_overlap * (8 - d^2_wing) / 16` vanishes identically
//! on every self-avoiding consistent configuration and activates only when an
//! overlap is exploited. Every stored term has degree <= 5.
//!
//! On the feasible sector (self-avoiding, non-backtracking geometry with
//! matching contact bits) the polynomial reproduces the structural energy
//! exactly; with the bundled HP matrix all coefficients are dyadic and the
//! agreement is bit-exact in f64.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::lattice::{InteractionMatrix, Peptide, QubitLayout};
use crate::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Coefficients with magnitude at or below this are dropped when merging.
const MERGE_EPS: f64 = 1e-12;

/// A measurement outcome with an explicit qubit count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstring {
    word: u64,
    n: usize,
}

impl Bitstring {
    pub fn new(word: u64, n: usize) -> Result<Self> {
        if n == 0 || n > 64 || (n < 64 && word >> n != 0) {
            return Err(Error::LengthMismatch {
                got: 64 - word.leading_zeros() as usize,
                expected: n,
            });
        }
        Ok(Self { word, n })
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Real multilinear polynomial over spin variables, keyed by index subsets
/// packed into `u64` bitmasks. Terms are kept sorted by mask, which fixes the
/// evaluation and serialization order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinPolynomial {
    n_q: usize,
    terms: Vec<(u64, f64)>,
}

impl SpinPolynomial {
    pub fn new(n_q: usize, map: BTreeMap<u64, f64>) -> Self {
        let terms: Vec<(u64, f64)> = map
            .into_iter()
            .filter(|&(mask, c)| {
                debug_assert!(n_q == 64 || mask >> n_q == 0, "term index out of range");
                c.abs() > MERGE_EPS
            })
            .collect();
        Self { n_q, terms }
    }

    pub fn empty(n_q: usize) -> Self {
        Self { n_q, terms: Vec::new() }
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    /// Terms as (index-subset mask, coefficient), ascending by mask.
    pub fn terms(&self) -> &[(u64, f64)] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Largest subset size among stored terms.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|&(m, _)| m.count_ones() as usize).max().unwrap_or(0)
    }

    /// Term count per degree.
    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &(m, _) in &self.terms {
            *h.entry(m.count_ones() as usize).or_insert(0) += 1;
        }
        h
    }

    pub fn constant_term(&self) -> f64 {
        match self.terms.first() {
            Some(&(0, c)) => c,
            _ => 0.0,
        }
    }

    /// Termwise sum; both operands must share the variable count.
    pub fn add(&self, other: &SpinPolynomial) -> SpinPolynomial {
        assert_eq!(self.n_q, other.n_q, "variable count mismatch");
        let mut map: BTreeMap<u64, f64> = self.terms.iter().copied().collect();
        for &(mask, c) in &other.terms {
            *map.entry(mask).or_insert(0.0) += c;
        }
        SpinPolynomial::new(self.n_q, map)
    }

    /// Energy of a bitstring: sum over terms of `c * prod_{j in S} (1 - 2 b_j)`,
    /// accumulated in ascending mask order.
    pub fn evaluate(&self, b: &Bitstring) -> Result<f64> {
        if b.len() != self.n_q {
            return Err(Error::LengthMismatch { got: b.len(), expected: self.n_q });
        }
        Ok(self.evaluate_word(b.word()))
    }

    /// Unchecked energy of a packed bitstring word.
    #[inline]
    pub fn evaluate_word(&self, word: u64) -> f64 {
        let mut e = 0.0;
        for &(mask, c) in &self.terms {
            if (mask & word).count_ones() % 2 == 0 {
                e += c;
            } else {
                e -= c;
            }
        }
        e
    }

    /// Energies of a batch of words; parallel when built with the `parallel`
    /// feature and the batch is large enough to pay for it. Results are
    /// bit-identical to [`SpinPolynomial::evaluate_batch_seq`].
    pub fn evaluate_batch(&self, words: &[u64]) -> Vec<f64> {
        #[cfg(feature = "parallel")]
        {
            if words.len().saturating_mul(self.terms.len()) >= 1 << 14 {
                return words.par_iter().map(|&w| self.evaluate_word(w)).collect();
            }
        }
        self.evaluate_batch_seq(words)
    }

    /// Scalar reference path for [`SpinPolynomial::evaluate_batch`].
    pub fn evaluate_batch_seq(&self, words: &[u64]) -> Vec<f64> {
        words.iter().map(|&w| self.evaluate_word(w)).collect()
    }

    /// Clamp the variables in `mask` to the bits of `word`, returning a
    /// polynomial over the remaining variables (indices preserved).
    pub fn partial_evaluate(&self, mask: u64, word: u64) -> SpinPolynomial {
        let mut map = BTreeMap::new();
        for &(m, c) in &self.terms {
            let fixed = m & mask;
            let sign = if (fixed & word).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            *map.entry(m & !mask).or_insert(0.0) += sign * c;
        }
        SpinPolynomial::new(self.n_q, map)
    }

    pub fn to_json_string(&self) -> String {
        let file = HamiltonianFile {
            n_q: self.n_q,
            terms: self
                .terms
                .iter()
                .map(|&(mask, coeff)| TermRecord { qubits: mask_to_indices(mask), coeff })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: HamiltonianFile = serde_json::from_str(text)?;
        let mut map = BTreeMap::new();
        for t in file.terms {
            let mut mask = 0u64;
            for &q in &t.qubits {
                if q >= file.n_q {
                    return Err(Error::LengthMismatch { got: q, expected: file.n_q });
                }
                mask |= 1 << q;
            }
            *map.entry(mask).or_insert(0.0) += t.coeff;
        }
        Ok(SpinPolynomial::new(file.n_q, map))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json_string())?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn mask_to_indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|j| (mask >> j) & 1 == 1).collect()
}

#[derive(Serialize, Deserialize)]
struct HamiltonianFile {
    n_q: usize,
    terms: Vec<TermRecord>,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    qubits: Vec<usize>,
    coeff: f64,
}

/// Penalty scales for the constraint terms. Defaults are 10x the largest
/// absolute pair energy, large enough that any violation outweighs any
/// harvestable reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub lambda_back: f64,
    pub lambda_mismatch: f64,
    pub lambda_overlap: f64,
}

impl PenaltyConfig {
    pub fn defaults_for(matrix: &InteractionMatrix) -> Self {
        let scale = 10.0 * matrix.max_abs().max(0.1);
        Self { lambda_back: scale, lambda_mismatch: scale, lambda_overlap: scale }
    }
}

/// Small builder map with spin-monomial arithmetic (`s^2 = 1`, so monomial
/// products XOR their masks).
#[derive(Debug, Clone, Default)]
struct Poly(BTreeMap<u64, f64>);

impl Poly {
    fn constant(c: f64) -> Self {
        let mut p = Poly::default();
        p.add_term(0, c);
        p
    }

    fn variable(j: usize) -> Self {
        let mut p = Poly::default();
        p.add_term(1 << j, 1.0);
        p
    }

    fn add_term(&mut self, mask: u64, c: f64) {
        let entry = self.0.entry(mask).or_insert(0.0);
        *entry += c;
        if entry.abs() <= MERGE_EPS {
            self.0.remove(&mask);
        }
    }

    fn add_assign(&mut self, other: &Poly) {
        for (&m, &c) in &other.0 {
            self.add_term(m, c);
        }
    }

    fn scale(&self, f: f64) -> Poly {
        let mut out = Poly::default();
        for (&m, &c) in &self.0 {
            out.add_term(m, c * f);
        }
        out
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (&ma, &ca) in &self.0 {
            for (&mb, &cb) in &other.0 {
                out.add_term(ma ^ mb, ca * cb);
            }
        }
        out
    }
}

/// Per-bond components of the tetrahedral direction vector as spin
/// polynomials over the geometry qubits, with the gauge prefix folded in as
/// constants: x = s_hi, y = s_lo, z = s_hi * s_lo.
struct BondComponents {
    x: Vec<Poly>,
    y: Vec<Poly>,
    z: Vec<Poly>,
}

impl BondComponents {
    fn new(n_residues: usize) -> Self {
        let n_bonds = n_residues - 1;
        let mut x = Vec::with_capacity(n_bonds);
        let mut y = Vec::with_capacity(n_bonds);
        let mut z = Vec::with_capacity(n_bonds);
        for k in 0..n_bonds {
            match k {
                // gauge: turn 0 is label 0, turn 1 is label 1
                0 => {
                    x.push(Poly::constant(1.0));
                    y.push(Poly::constant(1.0));
                    z.push(Poly::constant(1.0));
                }
                1 => {
                    x.push(Poly::constant(1.0));
                    y.push(Poly::constant(-1.0));
                    z.push(Poly::constant(-1.0));
                }
                // gauge: turn 2 has its low bit fixed to 0 (label 0 or 2)
                2 => {
                    x.push(Poly::variable(0));
                    y.push(Poly::constant(1.0));
                    z.push(Poly::variable(0));
                }
                _ => {
                    let hi = 1 + 2 * (k - 3);
                    let lo = 2 + 2 * (k - 3);
                    x.push(Poly::variable(hi));
                    y.push(Poly::variable(lo));
                    z.push(Poly::variable(hi).mul(&Poly::variable(lo)));
                }
            }
        }
        Self { x, y, z }
    }

    /// Squared distance between beads `i < j` as a polynomial: the
    /// displacement is `sum_k (-1)^k a_{t_k}` over bonds k in [i, j).
    fn squared_distance(&self, i: usize, j: usize) -> Poly {
        let mut total = Poly::default();
        for comp in [&self.x, &self.y, &self.z] {
            let mut disp = Poly::default();
            for (k, bond) in comp.iter().enumerate().take(j).skip(i) {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                disp.add_assign(&bond.scale(sign));
            }
            total.add_assign(&disp.mul(&disp));
        }
        total
    }
}

/// Indicator polynomial for two consecutive turns sharing a label:
/// `(1 + x x')(1 + y y') / 4`.
fn equal_turns(bonds: &BondComponents, k: usize) -> Poly {
    let mut a = Poly::constant(1.0);
    a.add_assign(&bonds.x[k].mul(&bonds.x[k + 1]));
    let mut b = Poly::constant(1.0);
    b.add_assign(&bonds.y[k].mul(&bonds.y[k + 1]));
    a.mul(&b).scale(0.25)
}

/// Backbone constraint polynomial: `lambda_back` per equal consecutive turn
/// pair, over geometry qubits only. Degree <= 4.
pub fn build_backbone(layout: &QubitLayout, pen: &PenaltyConfig) -> SpinPolynomial {
    let n_residues = crate::lattice::residues_for_geom_bits(layout.n_geom);
    let bonds = BondComponents::new(n_residues);
    let mut total = Poly::default();
    for k in 0..n_residues - 2 {
        total.add_assign(&equal_turns(&bonds, k).scale(pen.lambda_back));
    }
    SpinPolynomial::new(layout.n_q, total.0)
}

/// Contact interaction polynomial: reward, mismatch and wing-overlap terms
/// per eligible pair, each gated by that pair's contact qubit. Degree <= 5.
pub fn build_contact(
    peptide: &Peptide,
    matrix: &InteractionMatrix,
    layout: &QubitLayout,
    pen: &PenaltyConfig,
) -> Result<SpinPolynomial> {
    let n = peptide.len();
    let res = peptide.residues();
    let bonds = BondComponents::new(n);
    let mut total = Poly::default();
    for (p, &(i, j)) in layout.contact_pairs.iter().enumerate() {
        let eps = matrix.get(res[i], res[j])?;
        // contact indicator (1 - s_c)/2
        let mut gate = Poly::constant(0.5);
        gate.add_term(1 << layout.contact_qubit(p), -0.5);

        // eps + lambda_mismatch * (d^2 - 3); zero exactly when adjacent
        let mut body = bonds.squared_distance(i, j).scale(pen.lambda_mismatch);
        body.add_term(0, eps - 3.0 * pen.lambda_mismatch);

        // wing pairs sit on the same sublattice: an adjacent contact forces
        // d^2 in {0, 8}, so (8 - d^2)/16 vanishes on self-avoiding geometry
        // and fires only when an overlap is exploited
        for (u, v) in [(i.wrapping_sub(1), j), (i + 1, j), (i, j - 1), (i, j + 1)] {
            if u >= n || v >= n {
                continue;
            }
            let (u, v) = (u.min(v), u.max(v));
            let mut wing = bonds.squared_distance(u, v).scale(-pen.lambda_overlap / 16.0);
            wing.add_term(0, 8.0 * pen.lambda_overlap / 16.0);
            body.add_assign(&wing);
        }

        total.add_assign(&gate.mul(&body));
    }
    Ok(SpinPolynomial::new(layout.n_q, total.0))
}

/// Full problem Hamiltonian `H_back + H_contact`, terms merged with
/// cancellation.
pub fn build_total(
    peptide: &Peptide,
    matrix: &InteractionMatrix,
    layout: &QubitLayout,
    pen: &PenaltyConfig,
) -> Result<SpinPolynomial> {
    let back = build_backbone(layout, pen);
    let contact = build_contact(peptide, matrix, layout, pen)?;
    Ok(back.add(&contact))
}
