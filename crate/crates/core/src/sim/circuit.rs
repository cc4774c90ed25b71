use num_complex::Complex64;

use super::gate::Gate;
use super::kernels;
use super::state::StateVector;
use crate::error::{Error, Result};

/// Ordered gate sequence over a fixed register.
///
/// Circuits produced by the ansatz builders also record, for each gate
/// angle, which entry of the flat parameter vector it was read from. That
/// binding drives [`Circuit::adjoint_gradient`].
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<Gate>,
    bindings: Vec<[Option<usize>; 3]>,
    n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, ops: Vec::new(), bindings: Vec::new(), n_params: 0 }
    }

    /// Circuit bound to a parameter vector of length `n_params`.
    pub fn with_params(n_qubits: usize, n_params: usize) -> Self {
        Self { n_params, ..Self::new(n_qubits) }
    }

    pub fn from_gates(n_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Length of the parameter vector this circuit was built from.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Parameter index each angle of op `k` was read from.
    pub fn binding(&self, k: usize) -> [Option<usize>; 3] {
        self.bindings[k]
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.ops.push(gate);
        self.bindings.push([None; 3]);
        Ok(self)
    }

    /// Pushes a gate whose angles were read from `params[slots[k]]`.
    pub(crate) fn push_bound(&mut self, gate: Gate, slots: &[usize]) -> Result<&mut Self> {
        debug_assert_eq!(slots.len(), gate.n_angles());
        gate.validate(self.n_qubits)?;
        let mut b = [None; 3];
        for (k, &s) in slots.iter().enumerate() {
            debug_assert!(s < self.n_params);
            b[k] = Some(s);
        }
        self.ops.push(gate);
        self.bindings.push(b);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    /// Reversed sequence of inverted gates.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(Gate::inverse).collect(),
            bindings: vec![[None; 3]; self.ops.len()],
            n_params: 0,
        }
    }

    /// Gradient of a real loss `L(ψ_out)` with respect to the bound
    /// parameters, given the forward output and `g = ∂L/∂ψ_out*` so that
    /// `dL/dθ = 2 Re⟨g|∂ψ_out/∂θ⟩`.
    ///
    /// Walks the circuit backwards once, un-applying each gate to both the
    /// state and the cotangent.
    pub fn adjoint_gradient(&self, output: &StateVector, cotangent: &[Complex64]) -> Result<Vec<f64>> {
        if output.n_qubits() != self.n_qubits {
            return Err(Error::QubitCountMismatch { expected: self.n_qubits, actual: output.n_qubits() });
        }
        if cotangent.len() != output.dim() {
            return Err(Error::InvalidArgument(format!(
                "cotangent has length {}, state has dimension {}",
                cotangent.len(),
                output.dim()
            )));
        }
        let n = self.n_qubits;
        let mut grad = vec![0.0; self.n_params];
        let mut psi = output.amplitudes().to_vec();
        let mut lambda = cotangent.to_vec();
        let mut scratch = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (gate, binding) in self.ops.iter().zip(&self.bindings).rev() {
            let inv = gate.inverse();
            inv.apply_unchecked(&mut psi, n);
            if let Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } | Gate::U3 { qubit, .. } = *gate {
                for (k, slot) in binding.iter().enumerate() {
                    let Some(p) = *slot else { continue };
                    let d = gate.derivative_1q(k);
                    scratch.copy_from_slice(&psi);
                    kernels::apply_1q(&mut scratch, n, qubit, &d);
                    let dot: f64 = lambda.iter().zip(&scratch).map(|(l, s)| (l.conj() * s).re).sum();
                    grad[p] += 2.0 * dot;
                }
            }
            inv.apply_unchecked(&mut lambda, n);
        }
        Ok(grad)
    }
}
