//! In-place amplitude kernels. Qubit 0 is the most significant bit of the
//! basis index, so qubit `q` of an `n`-qubit register has bit weight
//! `1 << (n - 1 - q)`.

use num_complex::Complex64;

pub type Matrix2 = [[Complex64; 2]; 2];

#[inline]
pub(crate) fn bit(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

pub(crate) fn apply_1q(amps: &mut [Complex64], n: usize, q: usize, m: &Matrix2) {
    let stride = bit(n, q);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
        }
        base += 2 * stride;
    }
}

/// Diagonal single-qubit gate, used for RZ.
pub(crate) fn apply_diag(amps: &mut [Complex64], n: usize, q: usize, d0: Complex64, d1: Complex64) {
    let mask = bit(n, q);
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & mask == 0 { d0 } else { d1 };
    }
}

pub(crate) fn apply_cnot(amps: &mut [Complex64], n: usize, control: usize, target: usize) {
    let c = bit(n, control);
    let t = bit(n, target);
    for i in 0..amps.len() {
        if i & c != 0 && i & t == 0 {
            amps.swap(i, i | t);
        }
    }
}

pub(crate) fn apply_cz(amps: &mut [Complex64], n: usize, a: usize, b: usize) {
    let mask = bit(n, a) | bit(n, b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

pub(crate) fn apply_cswap(amps: &mut [Complex64], n: usize, control: usize, a: usize, b: usize) {
    let c = bit(n, control);
    let ma = bit(n, a);
    let mb = bit(n, b);
    for i in 0..amps.len() {
        // visit each swapped pair once, from the |..1..0..> side
        if i & c != 0 && i & ma != 0 && i & mb == 0 {
            amps.swap(i, (i & !ma) | mb);
        }
    }
}
