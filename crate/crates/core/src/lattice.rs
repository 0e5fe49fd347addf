//! Peptides on the tetrahedral (diamond) lattice.
//!
//! The backbone is a walk whose bonds point along the four body-diagonal
//! directions `a_0=(1,1,1)`, `a_1=(1,-1,-1)`, `a_2=(-1,1,-1)`, `a_3=(-1,-1,1)`,
//! with the sign alternating by bond parity (the lattice is bipartite). Two
//! beads are lattice-adjacent iff their squared distance is 3; all geometry is
//! exact integer arithmetic.
//!
//! Gauge convention: the global frame is fixed by `turn[0] = 0`, `turn[1] = 1`
//! and the low bit of `turn[2]` = 0 (so `turn[2]` is 0 or 2). This removes the
//! 24 direction relabelings of the point group while keeping every
//! conformation class representable, and accounts for the five fixed qubits in
//! `n_geom = 2(N-1) - 5`.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::{bits, Error, Result};

/// The 20 standard one-letter residue codes.
pub const RESIDUE_ALPHABET: &str = "ACDEFGHIKLMNPQRSTVWY";

/// Tetrahedral bond directions; bond `k` contributes `(-1)^k * a[turn_k]`.
pub const DIRECTIONS: [[i64; 3]; 4] = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]];

/// A validated peptide sequence (one-letter codes, length >= 4).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Peptide {
    residues: Vec<char>,
}

impl Peptide {
    pub fn new(sequence: &str) -> Result<Self> {
        let residues: Vec<char> = sequence.trim().chars().collect();
        for (position, &letter) in residues.iter().enumerate() {
            if !RESIDUE_ALPHABET.contains(letter) {
                return Err(Error::InvalidResidue { letter, position });
            }
        }
        if residues.len() < 4 {
            return Err(Error::PeptideTooShort { n: residues.len() });
        }
        Ok(Self { residues })
    }

    /// Number of residues N.
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn residues(&self) -> &[char] {
        &self.residues
    }
}

impl fmt::Display for Peptide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.residues {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Peptide {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Peptide::new(s)
    }
}

/// Symmetric residue-pair contact energies, keyed by one-letter codes.
///
/// File format: first line lists the covered residue letters, followed by one
/// row of whitespace-separated energies per letter. Symmetry is validated on
/// load.
#[derive(Debug, Clone)]
pub struct InteractionMatrix {
    letters: Vec<char>,
    index: [Option<u8>; 26],
    eps: Vec<Vec<f64>>,
}

impl InteractionMatrix {
    pub fn new(letters: Vec<char>, eps: Vec<Vec<f64>>) -> Result<Self> {
        if letters.is_empty() || eps.len() != letters.len() {
            return Err(Error::MalformedMatrix(format!(
                "{} letters but {} rows",
                letters.len(),
                eps.len()
            )));
        }
        let mut index = [None; 26];
        for (i, &c) in letters.iter().enumerate() {
            if !RESIDUE_ALPHABET.contains(c) {
                return Err(Error::MalformedMatrix(format!("unknown residue letter '{c}'")));
            }
            let slot = (c as u8 - b'A') as usize;
            if index[slot].is_some() {
                return Err(Error::MalformedMatrix(format!("duplicate letter '{c}'")));
            }
            index[slot] = Some(i as u8);
        }
        for (i, row) in eps.iter().enumerate() {
            if row.len() != letters.len() {
                return Err(Error::MalformedMatrix(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    letters.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::MalformedMatrix(format!("non-finite entry at ({i},{j})")));
                }
                if v != eps[j][i] {
                    return Err(Error::AsymmetricMatrix { a: letters[i], b: letters[j] });
                }
            }
        }
        Ok(Self { letters, index, eps })
    }

    /// Two-letter toy matrix: eps(H,H) = -1, everything else 0.
    pub fn hp() -> Self {
        Self::new(vec!['H', 'P'], vec![vec![-1.0, 0.0], vec![0.0, 0.0]]).unwrap()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedMatrix("empty file".into()))?;
        let letters: Vec<char> = header.split_whitespace().flat_map(|t| t.chars()).collect();
        let mut eps = Vec::with_capacity(letters.len());
        for line in lines {
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            eps.push(row.map_err(|e| Error::MalformedMatrix(format!("bad number: {e}")))?);
        }
        Self::new(letters, eps)
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    /// Contact energy for a residue pair.
    pub fn get(&self, a: char, b: char) -> Result<f64> {
        let ia = self.lookup(a)?;
        let ib = self.lookup(b)?;
        Ok(self.eps[ia][ib])
    }

    /// Largest absolute entry; penalty defaults scale from this.
    pub fn max_abs(&self) -> f64 {
        self.eps
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
    }

    fn lookup(&self, c: char) -> Result<usize> {
        if !c.is_ascii_uppercase() {
            return Err(Error::MissingResidue(c));
        }
        self.index[(c as u8 - b'A') as usize]
            .map(|i| i as usize)
            .ok_or(Error::MissingResidue(c))
    }
}

/// Backbone turn labels, one per bond (length N-1), each in {0,1,2,3}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TurnSequence {
    turns: Vec<u8>,
}

impl TurnSequence {
    pub fn new(turns: Vec<u8>) -> Result<Self> {
        if let Some(&t) = turns.iter().find(|&&t| t > 3) {
            return Err(Error::GaugeViolation(format!("turn label {t} out of range")));
        }
        Ok(Self { turns })
    }

    /// The alternating chain 0,1,0,1,... — the canonical extended backbone.
    pub fn zigzag(n_residues: usize) -> Self {
        Self { turns: (0..n_residues.saturating_sub(1)).map(|k| (k % 2) as u8).collect() }
    }

    pub fn turns(&self) -> &[u8] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// True iff the sequence satisfies the gauge convention.
    pub fn is_gauge_canonical(&self) -> bool {
        self.turns.first().is_none_or(|&t| t == 0)
            && self.turns.get(1).is_none_or(|&t| t == 1)
            && self.turns.get(2).is_none_or(|&t| t == 0 || t == 2)
    }
}

/// Bead positions on the lattice, starting at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conformation {
    positions: Vec<[i64; 3]>,
}

impl Conformation {
    pub fn positions(&self) -> &[[i64; 3]] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> i64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        (a[0] - b[0]).pow(2) + (a[1] - b[1]).pow(2) + (a[2] - b[2]).pow(2)
    }
}

/// Qubit bookkeeping for one peptide.
///
/// Qubits 0..n_geom are geometry bits in decode order (high bit of turn 2,
/// then high/low per remaining turn); qubit `n_geom + p` is the indicator for
/// `contact_pairs()[p]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitLayout {
    pub n_q: usize,
    pub n_geom: usize,
    pub n_contact: usize,
    /// Eligible residue pairs (0-based bead indices), lexicographically sorted.
    pub contact_pairs: Vec<(usize, usize)>,
}

impl QubitLayout {
    /// Qubit index of contact pair `p`.
    pub fn contact_qubit(&self, p: usize) -> usize {
        self.n_geom + p
    }

    /// Geometry bits of a full measurement word.
    pub fn geometry_bits(&self, word: u64) -> u64 {
        word & ((1u64 << self.n_geom) - 1)
    }

    /// Contact bits of a full measurement word (bit `p` = pair `p`).
    pub fn contact_bits(&self, word: u64) -> u64 {
        word >> self.n_geom
    }

    /// Assemble a full word from geometry and contact parts.
    pub fn assemble(&self, geom: u64, contacts: u64) -> u64 {
        geom | (contacts << self.n_geom)
    }
}

/// All eligible contact pairs for an N-residue chain: 0-based bead pairs
/// (i, j) with j - i >= 5 and j - i odd, lexicographically sorted. Even
/// separations sit on the same sublattice and can never be adjacent.
pub fn contact_pairs(n_residues: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n_residues {
        for j in (i + 5..n_residues).filter(|j| (j - i) % 2 == 1) {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Qubit layout for a peptide: `n_geom = 2(N-1) - 5` turn bits plus one
/// indicator per eligible contact pair.
pub fn qubit_layout(peptide: &Peptide) -> QubitLayout {
    let n = peptide.len();
    let n_geom = 2 * (n - 1) - 5;
    let pairs = contact_pairs(n);
    QubitLayout {
        n_q: n_geom + pairs.len(),
        n_geom,
        n_contact: pairs.len(),
        contact_pairs: pairs,
    }
}

/// Number of residues recovered from a geometry bit count.
pub fn residues_for_geom_bits(n_geom: usize) -> usize {
    (n_geom + 7) / 2
}

/// Decode geometry bits into the gauge-prefixed turn sequence.
///
/// Bit 0 is the high bit of turn 2; each later turn takes two bits in
/// (high, low) order with label = 2*hi + lo.
pub fn decode_geometry(geom_bits: u64, n_geom: usize, n_residues: usize) -> Result<TurnSequence> {
    let expected = 2 * (n_residues - 1) - 5;
    if n_geom != expected {
        return Err(Error::LengthMismatch { got: n_geom, expected });
    }
    let mut turns = Vec::with_capacity(n_residues - 1);
    turns.push(0);
    turns.push(1);
    turns.push(2 * bits::bit(geom_bits, 0));
    for k in 3..n_residues - 1 {
        let hi = bits::bit(geom_bits, 1 + 2 * (k - 3));
        let lo = bits::bit(geom_bits, 2 + 2 * (k - 3));
        turns.push(2 * hi + lo);
    }
    TurnSequence::new(turns)
}

/// Inverse of [`decode_geometry`]; the sequence must be gauge-canonical.
pub fn encode_geometry(seq: &TurnSequence) -> Result<u64> {
    if !seq.is_gauge_canonical() {
        return Err(Error::GaugeViolation(
            "expected turns [0, 1, {0|2}, ...] under the shipped gauge".into(),
        ));
    }
    let turns = seq.turns();
    let mut word = 0u64;
    if turns.len() > 2 && turns[2] == 2 {
        word |= 1;
    }
    for (k, &t) in turns.iter().enumerate().skip(3) {
        let hi = u64::from(t >> 1);
        let lo = u64::from(t & 1);
        word |= hi << (1 + 2 * (k - 3));
        word |= lo << (2 + 2 * (k - 3));
    }
    Ok(word)
}

/// Walk the turn sequence from the origin. Bond `k` adds `(-1)^k * a[turn_k]`.
pub fn turns_to_positions(seq: &TurnSequence) -> Conformation {
    let mut positions = Vec::with_capacity(seq.len() + 1);
    positions.push([0i64; 3]);
    for (k, &t) in seq.turns().iter().enumerate() {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let a = DIRECTIONS[t as usize];
        let p = positions[k];
        positions.push([p[0] + sign * a[0], p[1] + sign * a[1], p[2] + sign * a[2]]);
    }
    Conformation { positions }
}

/// True iff all bead positions are distinct.
pub fn is_self_avoiding(conf: &Conformation) -> bool {
    let mut seen = HashSet::with_capacity(conf.len());
    conf.positions().iter().all(|p| seen.insert(*p))
}

/// True iff no two consecutive turns share a label (backtracking returns the
/// chain to the previous bead).
pub fn no_backtracking(seq: &TurnSequence) -> bool {
    seq.turns().windows(2).all(|w| w[0] != w[1])
}

/// Both feasibility checks at once.
pub fn is_feasible(seq: &TurnSequence) -> bool {
    no_backtracking(seq) && is_self_avoiding(&turns_to_positions(seq))
}

/// Sum of pair energies over eligible contacts at squared distance 3.
/// Errors on overlapping beads; the caller is responsible for feeding
/// self-avoiding conformations.
pub fn structural_energy(
    conf: &Conformation,
    peptide: &Peptide,
    matrix: &InteractionMatrix,
) -> Result<f64> {
    if !is_self_avoiding(conf) {
        return Err(Error::OverlappingBeads);
    }
    let res = peptide.residues();
    let mut energy = 0.0;
    for (i, j) in contact_pairs(peptide.len()) {
        if conf.squared_distance(i, j) == 3 {
            energy += matrix.get(res[i], res[j])?;
        }
    }
    Ok(energy)
}

/// Contact bits implied by a geometry: bit `p` set iff pair `p` is adjacent.
pub fn contacts_from_geometry(conf: &Conformation, layout: &QubitLayout) -> Result<u64> {
    if !is_self_avoiding(conf) {
        return Err(Error::OverlappingBeads);
    }
    let mut word = 0u64;
    for (p, &(i, j)) in layout.contact_pairs.iter().enumerate() {
        if conf.squared_distance(i, j) == 3 {
            word |= 1 << p;
        }
    }
    Ok(word)
}
