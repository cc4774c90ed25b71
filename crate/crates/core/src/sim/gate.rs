use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernels::{self, Matrix2};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A gate of the simulator's fixed gate set.
///
/// Rotation conventions:
/// `RZ(θ) = diag(e^{-iθ/2}, e^{iθ/2})`,
/// `RY(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]` and
/// `U3(α, β, γ) = e^{i(β+γ)/2} RZ(β) RY(α) RZ(γ)`, global phase included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    H { qubit: usize },
    Ry { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    U3 { qubit: usize, alpha: f64, beta: f64, gamma: f64 },
    Cnot { control: usize, target: usize },
    Cz { a: usize, b: usize },
    Cswap { control: usize, a: usize, b: usize },
}

impl Gate {
    pub fn h(qubit: usize) -> Self {
        Gate::H { qubit }
    }

    pub fn ry(qubit: usize, theta: f64) -> Self {
        Gate::Ry { qubit, theta }
    }

    pub fn rz(qubit: usize, theta: f64) -> Self {
        Gate::Rz { qubit, theta }
    }

    pub fn u3(qubit: usize, alpha: f64, beta: f64, gamma: f64) -> Self {
        Gate::U3 { qubit, alpha, beta, gamma }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Gate::Cz { a, b }
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        Gate::Cswap { control, a, b }
    }

    /// Qubits touched by the gate, controls first.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H { qubit } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } | Gate::U3 { qubit, .. } => {
                vec![qubit]
            }
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Cz { a, b } => vec![a, b],
            Gate::Cswap { control, a, b } => vec![control, a, b],
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for (k, &q) in qs.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            if qs[..k].contains(&q) {
                return Err(Error::RepeatedQubit(q));
            }
        }
        Ok(())
    }

    /// Number of continuous angles carried by the gate.
    pub fn n_angles(&self) -> usize {
        match self {
            Gate::Ry { .. } | Gate::Rz { .. } => 1,
            Gate::U3 { .. } => 3,
            _ => 0,
        }
    }

    /// Copy of the gate with angle `k` replaced.
    pub fn with_angle(&self, k: usize, value: f64) -> Self {
        let mut g = *self;
        match &mut g {
            Gate::Ry { theta, .. } | Gate::Rz { theta, .. } if k == 0 => *theta = value,
            Gate::U3 { alpha, beta, gamma, .. } => match k {
                0 => *alpha = value,
                1 => *beta = value,
                2 => *gamma = value,
                _ => panic!("U3 has three angles, asked for {k}"),
            },
            _ => panic!("gate {self:?} has no angle {k}"),
        }
        g
    }

    /// 2x2 matrix of a single-qubit gate, `None` for multi-qubit gates.
    pub fn matrix_1q(&self) -> Option<Matrix2> {
        match *self {
            Gate::H { .. } => {
                let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
                Some([[s, s], [s, -s]])
            }
            Gate::Ry { theta, .. } => {
                let (s, c) = (theta / 2.0).sin_cos();
                Some([[c.into(), (-s).into()], [s.into(), c.into()]])
            }
            Gate::Rz { theta, .. } => Some([
                [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
            ]),
            Gate::U3 { alpha, beta, gamma, .. } => {
                let (s, c) = (alpha / 2.0).sin_cos();
                Some([
                    [c.into(), -Complex64::from_polar(s, gamma)],
                    [Complex64::from_polar(s, beta), Complex64::from_polar(c, beta + gamma)],
                ])
            }
            _ => None,
        }
    }

    /// Derivative of the single-qubit matrix with respect to angle `k`.
    pub fn derivative_1q(&self, k: usize) -> Matrix2 {
        let i = Complex64::i();
        match *self {
            Gate::Ry { theta, .. } => {
                let (s, c) = (theta / 2.0).sin_cos();
                [[(-s / 2.0).into(), (-c / 2.0).into()], [(c / 2.0).into(), (-s / 2.0).into()]]
            }
            Gate::Rz { theta, .. } => [
                [-0.5 * i * Complex64::from_polar(1.0, -theta / 2.0), ZERO],
                [ZERO, 0.5 * i * Complex64::from_polar(1.0, theta / 2.0)],
            ],
            Gate::U3 { alpha, beta, gamma, .. } => {
                let (s, c) = (alpha / 2.0).sin_cos();
                match k {
                    0 => [
                        [(-s / 2.0).into(), -Complex64::from_polar(c / 2.0, gamma)],
                        [Complex64::from_polar(c / 2.0, beta), -Complex64::from_polar(s / 2.0, beta + gamma)],
                    ],
                    1 => {
                        [[ZERO, ZERO], [i * Complex64::from_polar(s, beta), i * Complex64::from_polar(c, beta + gamma)]]
                    }
                    2 => [
                        [ZERO, -i * Complex64::from_polar(s, gamma)],
                        [ZERO, i * Complex64::from_polar(c, beta + gamma)],
                    ],
                    _ => panic!("U3 has three angles, asked for {k}"),
                }
            }
            _ => panic!("gate {self:?} has no angles"),
        }
    }

    /// Exact inverse; `U3(α,β,γ)† = U3(-α,-γ,-β)` under the phase convention above.
    pub fn inverse(&self) -> Self {
        match *self {
            Gate::Ry { qubit, theta } => Gate::Ry { qubit, theta: -theta },
            Gate::Rz { qubit, theta } => Gate::Rz { qubit, theta: -theta },
            Gate::U3 { qubit, alpha, beta, gamma } => Gate::U3 { qubit, alpha: -alpha, beta: -gamma, gamma: -beta },
            g => g,
        }
    }

    /// Applies the gate in place. Indices must already be validated.
    pub(crate) fn apply_unchecked(&self, amps: &mut [Complex64], n: usize) {
        match *self {
            Gate::Rz { qubit, theta } => kernels::apply_diag(
                amps,
                n,
                qubit,
                Complex64::from_polar(1.0, -theta / 2.0),
                Complex64::from_polar(1.0, theta / 2.0),
            ),
            Gate::H { qubit } | Gate::Ry { qubit, .. } | Gate::U3 { qubit, .. } => {
                let m = self.matrix_1q().expect("single-qubit gate");
                kernels::apply_1q(amps, n, qubit, &m);
            }
            Gate::Cnot { control, target } => kernels::apply_cnot(amps, n, control, target),
            Gate::Cz { a, b } => kernels::apply_cz(amps, n, a, b),
            Gate::Cswap { control, a, b } => kernels::apply_cswap(amps, n, control, a, b),
        }
    }
}
