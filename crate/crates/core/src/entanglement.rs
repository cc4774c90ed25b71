//! Entanglement measures on pure states and two-qubit density matrices.
//!
//! The concentratable entanglement (CE) of an `n`-qubit pure state is
//! `1 - 2^{-n} Σ_α Tr[ρ_α²]` with `α` ranging over every subset of qubits
//! (including the empty set, whose purity is 1 by convention). Since
//! complementary subsets of a pure state have equal purity, the sweep only
//! visits subsets of size `≤ n/2` and reweights.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Circuit, DensityMatrix, Gate, PurityWorkspace, StateVector};

/// Largest register accepted by the CE sweep.
pub const MAX_CE_QUBITS: usize = 14;
/// Largest register accepted by the swap-test oracle (it simulates `3n` qubits).
pub const MAX_SWAP_TEST_QUBITS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeReport {
    pub ce: f64,
    /// Purity of every subset, keyed by the sorted qubit list.
    pub per_subset_purities: Option<BTreeMap<Vec<usize>, f64>>,
}

/// Ancilla outcome probabilities of the CE swap-test circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapTestResult {
    pub p_all_zero: f64,
    pub p_all_one: f64,
}

/// Masks visited by the CE sweep and their multiplicity in the full power-set
/// sum. A subset and its complement have equal purity, so each complementary
/// pair is visited once: the smaller side, or for balanced cuts the side
/// holding qubit 0.
fn sweep_weights(n: usize) -> impl Iterator<Item = (usize, f64)> {
    let top = 1usize << (n - 1);
    (0usize..1 << n).filter_map(move |mask| {
        let k = mask.count_ones() as usize;
        if 2 * k < n || (2 * k == n && mask & top != 0) {
            Some((mask, 2.0))
        } else {
            None
        }
    })
}

fn check_ce_size(n: usize) -> Result<()> {
    if n > MAX_CE_QUBITS {
        return Err(Error::TooLarge { n_qubits: n, limit: MAX_CE_QUBITS });
    }
    Ok(())
}

/// Concentratable entanglement of a pure state.
pub fn concentratable_entanglement(state: &StateVector) -> Result<f64> {
    let n = state.n_qubits();
    check_ce_size(n)?;
    let total = PurityWorkspace::new(n).power_set_purity_sum(state.amplitudes());
    Ok(1.0 - total / (1u64 << n) as f64)
}

/// CE together with `∂CE/∂ψ*`, for adjoint differentiation.
pub fn concentratable_entanglement_with_cotangent(state: &StateVector) -> Result<(f64, Vec<Complex64>)> {
    let n = state.n_qubits();
    check_ce_size(n)?;
    let mut ws = PurityWorkspace::new(n);
    let amps = state.amplitudes();
    let norm = (1u64 << n) as f64;
    let mut cot = vec![Complex64::new(0.0, 0.0); amps.len()];
    let mut total = 0.0;
    for (mask, w) in sweep_weights(n) {
        total += w * ws.purity_with_cotangent(amps, mask, -2.0 * w / norm, &mut cot);
    }
    Ok((1.0 - total / norm, cot))
}

/// CE plus, optionally, the purity of every subset of the power set.
pub fn ce_report(state: &StateVector, with_purities: bool) -> Result<CeReport> {
    let ce = concentratable_entanglement(state)?;
    let per_subset_purities = if with_purities {
        let n = state.n_qubits();
        let mut ws = PurityWorkspace::new(n);
        let map = (0usize..1 << n)
            .map(|mask| {
                let qubits: Vec<usize> = (0..n).filter(|q| mask >> (n - 1 - q) & 1 == 1).collect();
                (qubits, ws.purity(state.amplitudes(), mask))
            })
            .collect();
        Some(map)
    } else {
        None
    };
    Ok(CeReport { ce, per_subset_purities })
}

fn tangle_overlap(state: &StateVector) -> Result<Complex64> {
    let n = state.n_qubits();
    if !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("the n-tangle is defined for even qubit counts, got {n}")));
    }
    let a = state.amplitudes();
    let full = a.len() - 1;
    // σ_y^{⊗n}|j⟩ = i^n (-1)^{popcount(j)} |~j⟩ for even n, up to a global phase
    Ok(a.iter().enumerate().map(|(i, x)| sign(i) * x * a[full ^ i]).sum())
}

#[inline]
fn sign(i: usize) -> f64 {
    if i.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `τ_n = |⟨ψ|σ_y^{⊗n}|ψ*⟩|²`, even `n` only.
pub fn n_tangle(state: &StateVector) -> Result<f64> {
    Ok(tangle_overlap(state)?.norm_sqr())
}

/// n-tangle together with `∂τ/∂ψ*`.
pub fn n_tangle_with_cotangent(state: &StateVector) -> Result<(f64, Vec<Complex64>)> {
    let s = tangle_overlap(state)?;
    let a = state.amplitudes();
    let full = a.len() - 1;
    let cot = (0..a.len()).map(|k| 2.0 * sign(k) * s * a[full ^ k].conj()).collect();
    Ok((s.norm_sqr(), cot))
}

/// Simulates the `3n`-qubit controlled-swap test: `n` ancillas in `|+⟩`
/// controlling swaps between matching qubits of two copies of the state,
/// then Hadamards on the ancillas. Returns the exact probabilities of the
/// all-zero and all-one ancilla outcomes.
pub fn swap_test_oracle(state: &StateVector) -> Result<SwapTestResult> {
    let n = state.n_qubits();
    if n > MAX_SWAP_TEST_QUBITS {
        return Err(Error::TooLarge { n_qubits: n, limit: MAX_SWAP_TEST_QUBITS });
    }
    let input = StateVector::zero(n)?.tensor(state)?.tensor(state)?;
    let mut c = Circuit::new(3 * n);
    for a in 0..n {
        c.push(Gate::h(a))?;
    }
    for a in 0..n {
        c.push(Gate::cswap(a, n + a, 2 * n + a))?;
    }
    for a in 0..n {
        c.push(Gate::h(a))?;
    }
    let out = input.run(&c)?;
    // ancillas are the leading qubits: each outcome owns a contiguous block
    let block = 1usize << (2 * n);
    let amps = out.amplitudes();
    let p_all_zero = amps[..block].iter().map(|a| a.norm_sqr()).sum();
    let p_all_one = amps[amps.len() - block..].iter().map(|a| a.norm_sqr()).sum();
    Ok(SwapTestResult { p_all_zero, p_all_one })
}

fn sigma_yy() -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 3)] = Complex64::new(-1.0, 0.0);
    m[(1, 2)] = Complex64::new(1.0, 0.0);
    m[(2, 1)] = Complex64::new(1.0, 0.0);
    m[(3, 0)] = Complex64::new(-1.0, 0.0);
    m
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// With `ρ = Σ w_i w_i†` (`w_i = √p_i v_i`), the `λ_i` are the singular values
/// of `τ_ij = w_iᵀ (σ_y ⊗ σ_y) w_j`. Eigenvalues at the rounding floor are
/// dropped so their square roots do not leak into the result.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::InvalidArgument(format!("concurrence needs a 4x4 matrix, got {}x{}", rho.dim(), rho.dim())));
    }
    rho.validate(1e-8)?;
    let eig = SymmetricEigen::new(rho.to_matrix());
    let cutoff = 1e-13 * eig.eigenvalues.max().max(f64::MIN_POSITIVE);
    let columns: Vec<DVector<Complex64>> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .filter(|(p, _)| **p > cutoff)
        .map(|(p, v)| v.scale(p.sqrt()))
        .collect();
    if columns.is_empty() {
        return Ok(0.0);
    }
    let w = DMatrix::from_columns(&columns);
    let tau = w.transpose() * sigma_yy() * &w;
    let mut lambdas: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambdas.resize(4, 0.0);
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Lipschitz constant of CE in trace distance: `4 - 2^{3-n}`.
pub fn ce_continuity_bound(n_qubits: usize) -> f64 {
    4.0 - 2f64.powi(3 - n_qubits as i32)
}

/// Three-qubit witness: CE strictly above 1/4 rules out biseparability.
pub fn is_genuine_multipartite_3q(ce: f64) -> bool {
    ce > 0.25
}

/// `2^{n+1} / (1 + 2^{2n})`, the saturation value quoted for the half-chain
/// purity of deep random circuits.
pub fn haar_average_purity(n: usize) -> f64 {
    let n = n as i32;
    2f64.powi(n + 1) / (1.0 + 2f64.powi(2 * n))
}

/// Haar average of `Tr[ρ_A²]` for a random pure state on `d_a × d_b`:
/// `(d_a + d_b) / (d_a d_b + 1)`.
pub fn haar_average_subsystem_purity(dim_a: usize, dim_b: usize) -> f64 {
    let (a, b) = (dim_a as f64, dim_b as f64);
    (a + b) / (a * b + 1.0)
}
