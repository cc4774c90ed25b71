use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::circuit::Circuit;
use super::gate::Gate;
use crate::error::{Error, Result};

/// Largest register the dense simulator will allocate.
pub const MAX_QUBITS: usize = 26;

/// Pure `n`-qubit state stored as `2^n` amplitudes. Qubit 0 is the most
/// significant bit of the basis index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Serialized form: amplitudes as `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct StateRepr {
    n_qubits: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl From<StateVector> for StateRepr {
    fn from(s: StateVector) -> Self {
        Self { n_qubits: s.n_qubits, amplitudes: s.amps.iter().map(|a| [a.re, a.im]).collect() }
    }
}

impl TryFrom<StateRepr> for StateVector {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        let s = StateVector::from_amplitudes(r.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect())?;
        if s.n_qubits != r.n_qubits {
            return Err(Error::QubitCountMismatch { expected: r.n_qubits, actual: s.n_qubits });
        }
        Ok(s)
    }
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis_index(n_qubits, 0)
    }

    pub fn basis_index(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("a register needs at least one qubit".into()));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooLarge { n_qubits, limit: MAX_QUBITS });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps amplitudes whose length is a power of two and whose norm is 1
    /// within `1e-8`.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!("amplitudes have squared norm {norm}, expected 1")));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Wraps and rescales arbitrary non-zero amplitudes.
    pub fn from_amplitudes_normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n_qubits, amps })
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ghz(n_qubits: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let last = s.amps.len() - 1;
        s.amps[0] = h.into();
        s.amps[last] = h.into();
        Ok(s)
    }

    /// Equal superposition of the weight-1 basis states.
    pub fn w(n_qubits: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        let a = 1.0 / (n_qubits as f64).sqrt();
        s.amps[0] = 0.0.into();
        for q in 0..n_qubits {
            s.amps[1 << q] = a.into();
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_size(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Kronecker product, `self` on the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n_qubits = self.n_qubits + other.n_qubits;
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooLarge { n_qubits, limit: MAX_QUBITS });
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Relabels qubits: qubit `j` of the result is qubit `order[j]` of `self`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<StateVector> {
        let n = self.n_qubits;
        if order.len() != n {
            return Err(Error::QubitCountMismatch { expected: n, actual: order.len() });
        }
        let mut seen = vec![false; n];
        for &q in order {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n_qubits: n });
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::RepeatedQubit(q));
            }
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (old, a) in self.amps.iter().enumerate() {
            let mut new = 0usize;
            for (j, &q) in order.iter().enumerate() {
                if old >> (n - 1 - q) & 1 == 1 {
                    new |= 1 << (n - 1 - j);
                }
            }
            amps[new] = *a;
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Probability of each outcome on `measured` (first listed qubit is the
    /// most significant bit of the outcome index), marginalizing the rest.
    pub fn marginal_probabilities(&self, measured: &[usize]) -> Result<Vec<f64>> {
        let n = self.n_qubits;
        for (k, &q) in measured.iter().enumerate() {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n_qubits: n });
            }
            if measured[..k].contains(&q) {
                return Err(Error::RepeatedQubit(q));
            }
        }
        let r = measured.len();
        let mut probs = vec![0.0; 1 << r];
        for (i, a) in self.amps.iter().enumerate() {
            let mut z = 0usize;
            for (j, &q) in measured.iter().enumerate() {
                z |= (i >> (n - 1 - q) & 1) << (r - 1 - j);
            }
            probs[z] += a.norm_sqr();
        }
        Ok(probs)
    }

    pub fn apply(&self, gate: &Gate) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_mut(gate)?;
        Ok(out)
    }

    pub fn apply_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        gate.apply_unchecked(&mut self.amps, self.n_qubits);
        Ok(())
    }

    pub fn run(&self, circuit: &Circuit) -> Result<StateVector> {
        let mut out = self.clone();
        out.run_mut(circuit)?;
        Ok(out)
    }

    pub fn run_mut(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::QubitCountMismatch { expected: circuit.n_qubits(), actual: self.n_qubits });
        }
        // gates were validated when pushed onto the circuit
        for g in circuit.ops() {
            g.apply_unchecked(&mut self.amps, self.n_qubits);
        }
        Ok(())
    }

    fn check_same_size(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitCountMismatch { expected: self.n_qubits, actual: other.n_qubits });
        }
        Ok(())
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("amplitude count {len} is not a power of two >= 2")));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::TooLarge { n_qubits: n, limit: MAX_QUBITS });
    }
    Ok(n)
}

/// Computational basis state from a bitstring such as `"101"`; the first
/// character is qubit 0.
pub fn basis_state(n_qubits: usize, bits: &str) -> Result<StateVector> {
    let len = bits.chars().count();
    if len != n_qubits {
        return Err(Error::BitstringLength { len, n_qubits });
    }
    let mut index = 0usize;
    for c in bits.chars() {
        index = (index << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                other => return Err(Error::InvalidBit(other)),
            };
    }
    StateVector::basis_index(n_qubits, index)
}

pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)
}

pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    state.run(circuit)
}

/// Tensor product of single-qubit factors; factor 0 becomes qubit 0.
pub fn product_state(factors: &[StateVector]) -> Result<StateVector> {
    let (first, rest) =
        factors.split_first().ok_or_else(|| Error::InvalidArgument("product of zero factors".into()))?;
    for f in factors {
        if f.n_qubits() != 1 {
            return Err(Error::QubitCountMismatch { expected: 1, actual: f.n_qubits() });
        }
    }
    rest.iter().try_fold(first.clone(), |acc, f| acc.tensor(f))
}

/// Trace distance between two pure states, `sqrt(1 - |⟨a|b⟩|²)`.
pub fn trace_distance_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    let overlap = a.inner(b)?.norm_sqr();
    Ok((1.0 - overlap).max(0.0).sqrt())
}
