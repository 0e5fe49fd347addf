//! Symbolic Pauli-string algebra for the counterdiabatic construction.
//!
//! Strings are stored in symplectic form: two bitmasks (x, z) with
//! I=(0,0), X=(1,0), Z=(0,1), Y=(1,1) per qubit, plus a complex coefficient
//! on the canonical letter string. Products and commutators are O(1) per term
//! pair; term maps are kept in sorted (x, z) order so every result is
//! deterministic regardless of construction order.
//!
//! Frobenius norms are never computed densely here: canonical Pauli strings
//! are orthogonal, so `tr(M^dag M) = 2^n * sum |c|^2` and the common `2^n`
//! factor cancels inside the alpha_1 ratio. Dense matrices exist only as test
//! oracles.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

use crate::hamiltonian::SpinPolynomial;
use crate::{Error, Result};

/// Coefficients at or below this magnitude are dropped when merging.
const MERGE_EPS: f64 = 1e-12;

/// One weighted Pauli string in symplectic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub x: u64,
    pub z: u64,
    pub coeff: Complex64,
}

impl PauliTerm {
    /// Letter at qubit `j`.
    pub fn letter(&self, j: usize) -> char {
        match ((self.x >> j) & 1, (self.z >> j) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        }
    }

    /// Full letter string, qubit 0 first.
    pub fn letters(&self, n_q: usize) -> String {
        (0..n_q).map(|j| self.letter(j)).collect()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }
}

/// Sum of weighted Pauli strings, merged on canonical (x, z) keys.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_q: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
}

impl PauliSum {
    pub fn new(n_q: usize) -> Self {
        Self { n_q, terms: BTreeMap::new() }
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, x: u64, z: u64, coeff: Complex64) {
        debug_assert!(self.n_q == 64 || (x | z) >> self.n_q == 0);
        let entry = self.terms.entry((x, z)).or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff;
        if entry.norm_sqr() <= MERGE_EPS * MERGE_EPS {
            self.terms.remove(&(x, z));
        }
    }

    /// Terms in canonical (x, z) order.
    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms.iter().map(|(&(x, z), &coeff)| PauliTerm { x, z, coeff })
    }

    pub fn coeff(&self, x: u64, z: u64) -> Complex64 {
        self.terms.get(&(x, z)).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Scale every coefficient.
    pub fn scaled(&self, f: Complex64) -> PauliSum {
        let mut out = PauliSum::new(self.n_q);
        for (&k, &c) in &self.terms {
            let v = c * f;
            if v.norm_sqr() > MERGE_EPS * MERGE_EPS {
                out.terms.insert(k, v);
            }
        }
        out
    }

    /// Sum of |coeff|^2 over canonical terms; equals tr(M^dag M) / 2^n.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// True iff every canonical coefficient is real (letter strings are
    /// self-adjoint, so this is exactly Hermiticity of the sum).
    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|c| c.im.abs() <= 1e-12 * (1.0 + c.re.abs()))
    }

    /// Diagonal matrix element <b|M|b>: only x = 0 strings contribute.
    pub fn expectation_basis(&self, word: u64) -> Complex64 {
        let mut e = Complex64::new(0.0, 0.0);
        for (&(x, z), &c) in &self.terms {
            if x == 0 {
                if (z & word).count_ones() % 2 == 0 {
                    e += c;
                } else {
                    e -= c;
                }
            }
        }
        e
    }
}

impl fmt::Display for PauliSum {
    /// Debug dump, one line per term: "coeff letters".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.terms() {
            writeln!(f, "{:+.6}{:+.6}i {}", t.coeff.re, t.coeff.im, t.letters(self.n_q))?;
        }
        Ok(())
    }
}

/// Lift a diagonal spin polynomial to a Z-string sum (bijective on terms).
pub fn z_poly_to_pauli(poly: &SpinPolynomial) -> PauliSum {
    let mut out = PauliSum::new(poly.n_q());
    for &(mask, c) in poly.terms() {
        out.add_term(0, mask, Complex64::new(c, 0.0));
    }
    out
}

/// Biased transverse-field driver `sum_j (-X_j + h_j Z_j)`.
pub fn driver(h: &[f64]) -> PauliSum {
    let mut out = PauliSum::new(h.len());
    for (j, &hj) in h.iter().enumerate() {
        out.add_term(1 << j, 0, Complex64::new(-1.0, 0.0));
        if hj != 0.0 {
            out.add_term(0, 1 << j, Complex64::new(hj, 0.0));
        }
    }
    out
}

/// Phase exponent e in `P1 * P2 = i^e * P3` for canonical letter strings.
#[inline]
fn phase_exponent(x1: u64, z1: u64, x2: u64, z2: u64) -> u32 {
    let y1 = (x1 & z1).count_ones() as i32;
    let y2 = (x2 & z2).count_ones() as i32;
    let y3 = ((x1 ^ x2) & (z1 ^ z2)).count_ones() as i32;
    let swaps = (z1 & x2).count_ones() as i32;
    (y1 + y2 - y3 + 2 * swaps).rem_euclid(4) as u32
}

#[inline]
fn i_pow(e: u32) -> Complex64 {
    match e & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Symbolic commutator `[A, B]`. Canonical strings either commute or
/// anticommute, so each contributing pair yields `2 * cA * cB * (PA PB)`.
pub fn commutator(a: &PauliSum, b: &PauliSum) -> PauliSum {
    assert_eq!(a.n_q(), b.n_q(), "qubit count mismatch");
    let mut out = PauliSum::new(a.n_q());
    for ta in a.terms() {
        for tb in b.terms() {
            let anti = ((ta.x & tb.z).count_ones() + (ta.z & tb.x).count_ones()) % 2 == 1;
            if !anti {
                continue;
            }
            let phase = i_pow(phase_exponent(ta.x, ta.z, tb.x, tb.z));
            out.add_term(ta.x ^ tb.x, ta.z ^ tb.z, 2.0 * ta.coeff * tb.coeff * phase);
        }
    }
    out
}

/// First-order variational coefficient
/// `alpha_1(l) = -|C1|^2 / ((1-l)|[H_i,C1]|^2 + l|[H_f,C1]|^2)` with
/// `C1 = [H_i, H_f]`; norms are symbolic coefficient norms (the common 2^n
/// cancels in the ratio).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha1 {
    norm_c1: f64,
    norm_ii: f64,
    norm_ff: f64,
}

impl Alpha1 {
    pub fn from_norms(norm_c1: f64, norm_ii: f64, norm_ff: f64) -> Self {
        Self { norm_c1, norm_ii, norm_ff }
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        let denom = (1.0 - lambda) * self.norm_ii + lambda * self.norm_ff;
        if denom <= 0.0 {
            return Err(Error::DegenerateInstance);
        }
        Ok(-self.norm_c1 / denom)
    }
}

/// One rotation generator of the CD term: a Pauli string with a real weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdRotation {
    pub x: u64,
    pub z: u64,
    /// Real coefficient of this string in `i [H_i, H_f]`.
    pub coeff: f64,
}

impl CdRotation {
    /// Magnitude used by the pruning rule.
    pub fn r(&self) -> f64 {
        self.coeff.abs()
    }
}

/// First-order counterdiabatic term: the Hermitian operator `i [H_i, H_f]`
/// (the lambda-dependent scalar `alpha_1` is kept separate), its rotation
/// list in canonical order, and the precomputed alpha_1 norms.
#[derive(Debug, Clone)]
pub struct CDTerm {
    n_q: usize,
    rotations: Vec<CdRotation>,
    alpha1: Alpha1,
}

impl CDTerm {
    pub fn n_q(&self) -> usize {
        self.n_q
    }

    /// Rotation generators in canonical (x, z) order.
    pub fn rotations(&self) -> &[CdRotation] {
        &self.rotations
    }

    /// Coefficient magnitudes r_jk in rotation order.
    pub fn r_coeffs(&self) -> Vec<f64> {
        self.rotations.iter().map(|r| r.r()).collect()
    }

    pub fn alpha1(&self) -> Alpha1 {
        self.alpha1
    }

    /// The operator `i [H_i, H_f]` as a Pauli sum.
    pub fn as_pauli_sum(&self) -> PauliSum {
        let mut out = PauliSum::new(self.n_q);
        for r in &self.rotations {
            out.add_term(r.x, r.z, Complex64::new(r.coeff, 0.0));
        }
        out
    }
}

/// Build the first-order CD term for a (possibly biased) driver and a
/// diagonal problem Hamiltonian. Every resulting string carries exactly one
/// Y and otherwise only Z/I, with a real coefficient.
pub fn cd_term(h_i: &PauliSum, h_f: &SpinPolynomial) -> Result<CDTerm> {
    let h_f_pauli = z_poly_to_pauli(h_f);
    let c1 = commutator(h_i, &h_f_pauli);
    let b = c1.scaled(Complex64::new(0.0, 1.0)); // i [H_i, H_f], Hermitian

    let mut rotations = Vec::with_capacity(b.len());
    for t in b.terms() {
        // exactly one Y (x-bit set implies z-bit set), no bare X
        if t.x.count_ones() != 1 || t.x & t.z != t.x {
            return Err(Error::NonDiagonal);
        }
        debug_assert!(t.coeff.im.abs() <= 1e-12 * (1.0 + t.coeff.re.abs()));
        rotations.push(CdRotation { x: t.x, z: t.z, coeff: t.coeff.re });
    }

    let norm_c1 = c1.norm_sqr();
    let norm_ii = commutator(h_i, &c1).norm_sqr();
    let norm_ff = commutator(&h_f_pauli, &c1).norm_sqr();
    Ok(CDTerm {
        n_q: h_f.n_q(),
        rotations,
        alpha1: Alpha1::from_norms(norm_c1, norm_ii, norm_ff),
    })
}
