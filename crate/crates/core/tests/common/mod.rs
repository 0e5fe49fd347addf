//! Dense-matrix oracles shared by the integration suites. These rebuild the
//! operators as explicit 2^n x 2^n matrices and never touch the symbolic
//! production code paths they check.

use num_complex::Complex64;
use tetrafold::pauli::PauliSum;

pub type Mat = Vec<Vec<Complex64>>;

fn zero(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Matrix element <i|L|k> of the single-qubit letter with bits (x, z).
fn letter_element(x: u64, z: u64, i: u64, k: u64) -> Complex64 {
    match (x, z) {
        (0, 0) => {
            if i == k {
                zero(1.0)
            } else {
                zero(0.0)
            }
        }
        (1, 0) => {
            if i != k {
                zero(1.0)
            } else {
                zero(0.0)
            }
        }
        (0, 1) => {
            if i == k {
                zero(if i == 0 { 1.0 } else { -1.0 })
            } else {
                zero(0.0)
            }
        }
        _ => {
            // Y: <0|Y|1> = -i, <1|Y|0> = +i
            if i == k {
                zero(0.0)
            } else if i == 0 {
                Complex64::new(0.0, -1.0)
            } else {
                Complex64::new(0.0, 1.0)
            }
        }
    }
}

/// Dense matrix of a Pauli letter string (qubit j is bit j of the index).
pub fn pauli_matrix(x: u64, z: u64, n_q: usize) -> Mat {
    let dim = 1usize << n_q;
    let mut m = vec![vec![zero(0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            let mut v = zero(1.0);
            for q in 0..n_q {
                let e = letter_element(
                    (x >> q) & 1,
                    (z >> q) & 1,
                    (i >> q) as u64 & 1,
                    (k >> q) as u64 & 1,
                );
                v *= e;
                if v == zero(0.0) {
                    break;
                }
            }
            *slot = v;
        }
    }
    m
}

/// Dense matrix of a full Pauli sum.
pub fn sum_matrix(sum: &PauliSum) -> Mat {
    let dim = 1usize << sum.n_q();
    let mut m = vec![vec![zero(0.0); dim]; dim];
    for t in sum.terms() {
        let p = pauli_matrix(t.x, t.z, sum.n_q());
        for i in 0..dim {
            for k in 0..dim {
                m[i][k] += t.coeff * p[i][k];
            }
        }
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let dim = a.len();
    let mut out = vec![vec![zero(0.0); dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let mut acc = zero(0.0);
            for j in 0..dim {
                acc += a[i][j] * b[j][k];
            }
            out[i][k] = acc;
        }
    }
    out
}

/// Dense commutator AB - BA.
pub fn commutator_dense(a: &Mat, b: &Mat) -> Mat {
    let ab = matmul(a, b);
    let ba = matmul(b, a);
    let dim = a.len();
    let mut out = vec![vec![zero(0.0); dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            out[i][k] = ab[i][k] - ba[i][k];
        }
    }
    out
}

/// tr(M^dag M) = squared Frobenius norm.
pub fn frobenius_sqr(m: &Mat) -> f64 {
    m.iter().flatten().map(|c| c.norm_sqr()).sum()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    let mut worst = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        for (ca, cb) in ra.iter().zip(rb) {
            worst = worst.max((ca - cb).norm());
        }
    }
    worst
}

pub fn scaled(m: &Mat, f: Complex64) -> Mat {
    m.iter().map(|row| row.iter().map(|&c| c * f).collect()).collect()
}
