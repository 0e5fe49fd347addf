//! Bitstring words and conventions shared across the crate.
//!
//! A measured bitstring over `n_q` qubits is packed into a `u64` with qubit
//! `j` stored at bit position `j` (qubit 0 is the least significant bit).
//! Text form prints qubit 0 first, so lexicographic order on the text equals
//! numeric order on [`lex_key`]. The spin convention is `s_j = 1 - 2*b_j`:
//! bit 0 corresponds to sigma_z = +1.

use crate::{Error, Result};

/// Bit value of qubit `j` in `word`.
#[inline]
pub fn bit(word: u64, j: usize) -> u8 {
    ((word >> j) & 1) as u8
}

/// Spin value `1 - 2*b_j` of qubit `j` in `word`.
#[inline]
pub fn spin(word: u64, j: usize) -> i64 {
    1 - 2 * i64::from(bit(word, j))
}

/// Key whose numeric order matches lexicographic order of the text form
/// (qubit 0 printed first). Used for deterministic tie-breaking.
#[inline]
pub fn lex_key(word: u64, n_q: usize) -> u64 {
    debug_assert!((1..=64).contains(&n_q));
    word.reverse_bits() >> (64 - n_q)
}

/// Text form of a bitstring, qubit 0 first.
pub fn to_text(word: u64, n_q: usize) -> String {
    (0..n_q).map(|j| if bit(word, j) == 1 { '1' } else { '0' }).collect()
}

/// Parse the text form produced by [`to_text`].
pub fn from_text(s: &str) -> Result<(u64, usize)> {
    let s = s.trim();
    if s.is_empty() || s.len() > 64 {
        return Err(Error::MalformedSamples(format!("bad bitstring '{s}'")));
    }
    let mut word = 0u64;
    for (j, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => word |= 1 << j,
            _ => return Err(Error::MalformedSamples(format!("bad bitstring '{s}'"))),
        }
    }
    Ok((word, s.len()))
}
