//! Reduced-state purities computed from the amplitude vector without forming
//! density matrices.
//!
//! For a subset `α`, the amplitudes reshape into a `2^|α| × 2^(n-|α|)` matrix
//! `M` (rows indexed by the bits of `α`), and `Tr[ρ_α²] = ‖M M†‖_F²`. The
//! smaller side of the bipartition is always used as the row side; both sides
//! have the same purity for a pure state.

use num_complex::Complex64;

use super::state::StateVector;
use crate::error::{Error, Result};

/// Converts a qubit subset into a bit mask over basis indices.
pub fn subset_mask(n_qubits: usize, subset: &[usize]) -> Result<usize> {
    let mut mask = 0usize;
    for &q in subset {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        let b = 1usize << (n_qubits - 1 - q);
        if mask & b != 0 {
            return Err(Error::RepeatedQubit(q));
        }
        mask |= b;
    }
    Ok(mask)
}

/// `Tr[ρ_α²]` for the qubits in `subset`; the empty subset gives 1.
pub fn subset_purity(state: &StateVector, subset: &[usize]) -> Result<f64> {
    let mask = subset_mask(state.n_qubits(), subset)?;
    Ok(PurityWorkspace::new(state.n_qubits()).purity(state.amplitudes(), mask))
}

/// Index tables for scattering a bit mask `m` over the positions of `mask`:
/// entry `x` is the basis index carrying the bits of `x` at the set
/// positions of `mask`, in ascending order.
fn deposit_table(mask: usize) -> Vec<usize> {
    let k = mask.count_ones();
    let mut table = Vec::with_capacity(1 << k);
    // enumerate submasks of `mask` in increasing order of their compressed value
    let mut sub = 0usize;
    loop {
        table.push(sub);
        if sub == mask {
            break;
        }
        sub = (sub.wrapping_sub(mask)) & mask;
    }
    table
}

const LANES: usize = 8;

/// Upper triangle of `G = M M†` for the row-major split matrix `(re, im)`
/// with `nr` rows of length `nc`.
#[inline(always)]
fn gram_upper_body<const FUSED: bool>(re: &[f64], im: &[f64], nr: usize, nc: usize, gre: &mut [f64], gim: &mut [f64]) {
    let chunks = nc / LANES;
    for a in 0..nr {
        let (ar, ai) = (&re[a * nc..(a + 1) * nc], &im[a * nc..(a + 1) * nc]);
        for b in a..nr {
            let (br, bi) = (&re[b * nc..(b + 1) * nc], &im[b * nc..(b + 1) * nc]);
            let mut sr = [0.0; LANES];
            let mut si = [0.0; LANES];
            for c in 0..chunks {
                let o = c * LANES;
                let xr: &[f64; LANES] = ar[o..o + LANES].try_into().expect("lane chunk");
                let xi: &[f64; LANES] = ai[o..o + LANES].try_into().expect("lane chunk");
                let yr: &[f64; LANES] = br[o..o + LANES].try_into().expect("lane chunk");
                let yi: &[f64; LANES] = bi[o..o + LANES].try_into().expect("lane chunk");
                for l in 0..LANES {
                    if FUSED {
                        sr[l] = xr[l].mul_add(yr[l], xi[l].mul_add(yi[l], sr[l]));
                        si[l] = xi[l].mul_add(yr[l], (-xr[l]).mul_add(yi[l], si[l]));
                    } else {
                        sr[l] += xr[l] * yr[l] + xi[l] * yi[l];
                        si[l] += xi[l] * yr[l] - xr[l] * yi[l];
                    }
                }
            }
            let (mut r, mut i) = (sr.iter().sum::<f64>(), si.iter().sum::<f64>());
            for y in chunks * LANES..nc {
                r += ar[y] * br[y] + ai[y] * bi[y];
                i += ai[y] * br[y] - ar[y] * bi[y];
            }
            gre[a * nr + b] = r;
            gim[a * nr + b] = i;
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
fn gram_upper_avx2(re: &[f64], im: &[f64], nr: usize, nc: usize, gre: &mut [f64], gim: &mut [f64]) {
    gram_upper_body::<true>(re, im, nr, nc, gre, gim)
}

fn gram_upper(re: &[f64], im: &[f64], nr: usize, nc: usize, gre: &mut [f64], gim: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were detected at runtime.
        unsafe { gram_upper_avx2(re, im, nr, nc, gre, gim) };
        return;
    }
    gram_upper_body::<false>(re, im, nr, nc, gre, gim)
}

/// Extracts the bits of `mask` at the set positions of `within`, packed
/// from the least significant end.
fn compress(mask: usize, within: usize) -> usize {
    let mut out = 0;
    let mut j = 0;
    let mut w = within;
    while w != 0 {
        let low = w & w.wrapping_neg();
        if mask & low != 0 {
            out |= 1 << j;
        }
        j += 1;
        w ^= low;
    }
    out
}

/// Adds the missing qubits with the lowest indices until `h` are set.
fn fill_anchor(mask: usize, n: usize, h: usize) -> usize {
    let mut m = mask;
    let mut bit = 1usize << (n - 1);
    while (m.count_ones() as usize) < h {
        m |= bit;
        bit >>= 1;
    }
    m
}

/// Purity of the reduction of the `2^h`-dimensional `ρ` onto the compressed
/// bit mask `keep`.
fn reduced_purity(rho_re: &[f64], rho_im: &[f64], h: usize, keep: usize) -> f64 {
    let dim = 1usize << h;
    let kept = deposit_table(keep);
    let traced = deposit_table((dim - 1) & !keep);
    let mut purity = 0.0;
    for &u in &kept {
        for &v in &kept {
            let (mut r, mut i) = (0.0, 0.0);
            for &z in &traced {
                let k = (u | z) * dim + (v | z);
                r += rho_re[k];
                i += rho_im[k];
            }
            purity += r * r + i * i;
        }
    }
    purity
}

/// Scratch buffers reused across the subsets of one sweep.
pub(crate) struct PurityWorkspace {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    gram_re: Vec<f64>,
    gram_im: Vec<f64>,
}

impl PurityWorkspace {
    pub(crate) fn new(n: usize) -> Self {
        let dim = 1usize << n;
        let half = 1usize << (n / 2);
        Self {
            n,
            re: vec![0.0; dim],
            im: vec![0.0; dim],
            gram_re: vec![0.0; half * half],
            gram_im: vec![0.0; half * half],
        }
    }

    /// Gathers `M` for the smaller side of `mask` and fills the upper
    /// triangle of its Gram matrix. Returns `(row_table, col_table)`.
    fn gram(&mut self, amps: &[Complex64], mask: usize) -> (Vec<usize>, Vec<usize>) {
        let full = (1usize << self.n) - 1;
        let row_mask = if mask.count_ones() as usize * 2 <= self.n { mask } else { full & !mask };
        let rows = deposit_table(row_mask);
        let cols = deposit_table(full & !row_mask);
        let (nr, nc) = (rows.len(), cols.len());
        for (x, &ro) in rows.iter().enumerate() {
            let (re, im) = (&mut self.re[x * nc..(x + 1) * nc], &mut self.im[x * nc..(x + 1) * nc]);
            for (y, &co) in cols.iter().enumerate() {
                let a = amps[ro | co];
                re[y] = a.re;
                im[y] = a.im;
            }
        }
        if self.gram_re.len() < nr * nr {
            self.gram_re.resize(nr * nr, 0.0);
            self.gram_im.resize(nr * nr, 0.0);
        }
        gram_upper(&self.re, &self.im, nr, nc, &mut self.gram_re, &mut self.gram_im);
        (rows, cols)
    }

    fn gram_norm_sqr(&self, nr: usize) -> f64 {
        let mut diag = 0.0;
        let mut off = 0.0;
        for a in 0..nr {
            let d = self.gram_re[a * nr + a];
            diag += d * d;
            for b in a + 1..nr {
                let (r, i) = (self.gram_re[a * nr + b], self.gram_im[a * nr + b]);
                off += r * r + i * i;
            }
        }
        diag + 2.0 * off
    }

    /// `Σ_α Tr[ρ_α²]` over the whole power set.
    ///
    /// Only the reduced states of the `⌊n/2⌋`-qubit "anchor" subsets are
    /// built from the amplitudes (for even `n`, just the anchors holding
    /// qubit 0, since a subset and its complement share a purity). Every
    /// smaller subset is reduced from the anchor obtained by filling it up
    /// with the lowest-index qubits it lacks.
    pub(crate) fn power_set_purity_sum(&mut self, amps: &[Complex64]) -> f64 {
        let n = self.n;
        let h = n / 2;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if h == 0 {
            return 2.0 * norm * norm;
        }
        let top = 1usize << (n - 1);
        let dim = 1usize << h;
        let mut rho_re = vec![0.0; dim * dim];
        let mut rho_im = vec![0.0; dim * dim];
        let mut total = 0.0;
        for anchor in 0usize..1 << n {
            if anchor.count_ones() as usize != h || (n.is_multiple_of(2) && anchor & top == 0) {
                continue;
            }
            self.gram(amps, anchor);
            for a in 0..dim {
                for b in a..dim {
                    let (r, i) = (self.gram_re[a * dim + b], self.gram_im[a * dim + b]);
                    rho_re[a * dim + b] = r;
                    rho_im[a * dim + b] = i;
                    rho_re[b * dim + a] = r;
                    rho_im[b * dim + a] = -i;
                }
            }
            total += 2.0 * self.gram_norm_sqr(dim);
            for sub in deposit_table(anchor) {
                if sub.count_ones() as usize == h || fill_anchor(sub, n, h) != anchor {
                    continue;
                }
                total += 2.0 * reduced_purity(&rho_re, &rho_im, h, compress(sub, anchor));
            }
        }
        total
    }

    pub(crate) fn purity(&mut self, amps: &[Complex64], mask: usize) -> f64 {
        if mask == 0 || mask == (1usize << self.n) - 1 {
            return amps.iter().map(|a| a.norm_sqr()).sum::<f64>().powi(2);
        }
        let (rows, _) = self.gram(amps, mask);
        self.gram_norm_sqr(rows.len())
    }

    /// Returns `Tr[ρ_α²]` and adds `scale · (ρ_α ⊗ I) ψ` into `out`.
    ///
    /// `2 (ρ_α ⊗ I) ψ` is the derivative of the purity with respect to `ψ*`;
    /// for a pure state it is the same vector whichever side of the cut the
    /// reduced state is taken on.
    pub(crate) fn purity_with_cotangent(
        &mut self,
        amps: &[Complex64],
        mask: usize,
        scale: f64,
        out: &mut [Complex64],
    ) -> f64 {
        let full = (1usize << self.n) - 1;
        if mask == 0 || mask == full {
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            for (o, a) in out.iter_mut().zip(amps) {
                *o += scale * norm * a;
            }
            return norm * norm;
        }
        let (rows, cols) = self.gram(amps, mask);
        let (nr, nc) = (rows.len(), cols.len());
        let purity = self.gram_norm_sqr(nr);
        // (G M)(x, y) with G Hermitian, only its upper triangle stored
        for x in 0..nr {
            for (y, &co) in cols.iter().enumerate() {
                let (mut sr, mut si) = (0.0, 0.0);
                for xp in 0..nr {
                    let (gr, gi) = if xp >= x {
                        (self.gram_re[x * nr + xp], self.gram_im[x * nr + xp])
                    } else {
                        (self.gram_re[xp * nr + x], -self.gram_im[xp * nr + x])
                    };
                    let (mr, mi) = (self.re[xp * nc + y], self.im[xp * nc + y]);
                    sr += gr * mr - gi * mi;
                    si += gr * mi + gi * mr;
                }
                out[rows[x] | co] += Complex64::new(scale * sr, scale * si);
            }
        }
        purity
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deposit_table_orders_by_compressed_value() {
        // mask over bits 0b1010: compressed 0,1,2,3 -> 0b0000,0b0010,0b1000,0b1010
        assert_eq!(deposit_table(0b1010), vec![0b0000, 0b0010, 0b1000, 0b1010]);
        assert_eq!(deposit_table(0), vec![0]);
    }

    #[test]
    fn anchor_sum_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for n in 1..=9 {
            let amps: Vec<Complex64> =
                (0..1 << n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let s = StateVector::from_amplitudes_normalized(amps).unwrap();
            let mut ws = PurityWorkspace::new(n);
            let direct: f64 = (0..1usize << n).map(|m| ws.purity(s.amplitudes(), m)).sum();
            let fast = ws.power_set_purity_sum(s.amplitudes());
            assert!((direct - fast).abs() < 1e-11 * direct, "n={n}: {direct} vs {fast}");
        }
    }

    #[test]
    fn compress_and_fill() {
        assert_eq!(compress(0b1000, 0b1010), 0b10);
        assert_eq!(compress(0b0010, 0b1010), 0b01);
        assert_eq!(fill_anchor(0b0001, 4, 2), 0b1001);
        assert_eq!(fill_anchor(0b1000, 4, 2), 0b1100);
    }

    #[test]
    fn empty_and_full_subsets_are_pure() {
        let s = StateVector::ghz(3).unwrap();
        assert!((subset_purity(&s, &[]).unwrap() - 1.0).abs() < 1e-15);
        assert!((subset_purity(&s, &[0, 1, 2]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ghz_and_w_single_qubit_purities() {
        let ghz = StateVector::ghz(3).unwrap();
        assert!((subset_purity(&ghz, &[0]).unwrap() - 0.5).abs() < 1e-12);
        let w = StateVector::w(3).unwrap();
        assert!((subset_purity(&w, &[0]).unwrap() - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_subset_rejected() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(subset_purity(&s, &[2]), Err(Error::QubitOutOfRange { .. })));
        assert!(matches!(subset_purity(&s, &[1, 1]), Err(Error::RepeatedQubit(1))));
    }
}
