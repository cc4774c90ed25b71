use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::state::StateVector;
use crate::error::{Error, Result};

/// Dense density matrix on `n_qubits`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    /// Wraps a row-major `2^n × 2^n` matrix after checking the density-matrix
    /// invariants within `tol`.
    pub fn from_entries(n_qubits: usize, entries: Vec<Complex64>, tol: f64) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!("{} entries do not form a {dim}x{dim} matrix", entries.len())));
        }
        let rho = Self { n_qubits, entries };
        rho.validate(tol)?;
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let mut entries = Vec::with_capacity(a.len() * a.len());
        for x in a {
            entries.extend(a.iter().map(|y| x * y.conj()));
        }
        Self { n_qubits: state.n_qubits(), entries }
    }

    /// Maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self { n_qubits, entries }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        // Tr[ρ²] = Σ |ρ_ij|² for Hermitian ρ
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.entries)
    }

    /// Eigenvalues in ascending order (Hermitian eigensolver).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_matrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Checks Hermiticity, unit trace and positive semidefiniteness within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return Err(Error::InvalidArgument(format!("density matrix is not Hermitian at ({i},{j})")));
                }
            }
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidArgument(format!("density matrix has trace {tr}")));
        }
        if let Some(&min) = self.eigenvalues().first() {
            if min < -tol {
                return Err(Error::InvalidArgument(format!("density matrix has negative eigenvalue {min}")));
            }
        }
        Ok(())
    }
}

/// Partial trace over the complement of `subset`. The reduced matrix keeps
/// the qubits in the order they are listed.
pub fn reduced_density(state: &StateVector, subset: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    let keep_mask = super::purity::subset_mask(n, subset)?;
    let k = subset.len();
    let dk = 1usize << k;
    let amps = state.amplitudes();
    // split each basis index into (kept bits in listed order, traced bits)
    let traced: Vec<usize> = (0..n).filter(|q| keep_mask >> (n - 1 - q) & 1 == 0).collect();
    let kept_offset = |x: usize| -> usize {
        subset.iter().enumerate().fold(0, |acc, (j, &q)| acc | ((x >> (k - 1 - j) & 1) << (n - 1 - q)))
    };
    let traced_offset = |y: usize| -> usize {
        let m = traced.len();
        traced.iter().enumerate().fold(0, |acc, (j, &q)| acc | ((y >> (m - 1 - j) & 1) << (n - 1 - q)))
    };
    let rows: Vec<usize> = (0..dk).map(kept_offset).collect();
    let cols: Vec<usize> = (0..1usize << traced.len()).map(traced_offset).collect();
    let mut entries = vec![Complex64::new(0.0, 0.0); dk * dk];
    for &c in &cols {
        for (x, &rx) in rows.iter().enumerate() {
            let ax = amps[rx | c];
            if ax == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (xp, &rxp) in rows.iter().enumerate() {
                entries[x * dk + xp] += ax * amps[rxp | c].conj();
            }
        }
    }
    Ok(DensityMatrix { n_qubits: k, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::state::basis_state;

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let bell = StateVector::ghz(2).unwrap();
        let rho = reduced_density(&bell, &[0]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1);
        for (a, b) in rho.entries().iter().zip(mixed.entries()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn product_marginal_is_pure() {
        let s = basis_state(2, "01").unwrap();
        let rho = reduced_density(&s, &[1]).unwrap();
        assert!((rho.get(1, 1).re - 1.0).abs() < 1e-15);
        assert!(rho.get(0, 0).norm() < 1e-15);
    }

    #[test]
    fn ghz4_two_qubit_marginal() {
        let rho = reduced_density(&StateVector::ghz(4).unwrap(), &[0, 1]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j && (i == 0 || i == 3) { 0.5 } else { 0.0 };
                assert!((rho.get(i, j) - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        rho.validate(1e-10).unwrap();
    }

    #[test]
    fn listed_order_is_kept() {
        let s = basis_state(3, "100").unwrap();
        let forward = reduced_density(&s, &[0, 2]).unwrap();
        let reversed = reduced_density(&s, &[2, 0]).unwrap();
        assert!((forward.get(2, 2).re - 1.0).abs() < 1e-15);
        assert!((reversed.get(1, 1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_density_matrix() {
        let bad = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(DensityMatrix::from_entries(1, bad, 1e-10).is_err());
    }
}
