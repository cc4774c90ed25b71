//! Dense statevector simulation: states, gates, circuits, reduced states.

mod circuit;
mod density;
mod gate;
pub(crate) mod kernels;
mod purity;
mod state;

pub use circuit::Circuit;
pub use density::{reduced_density, DensityMatrix};
pub use gate::Gate;
pub use kernels::Matrix2;
pub(crate) use purity::PurityWorkspace;
pub use purity::{subset_mask, subset_purity};
pub use state::{apply_circuit, apply_gate, basis_state, product_state, trace_distance_pure, StateVector, MAX_QUBITS};

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn basis_state_encoding() {
        let s = basis_state(2, "00").unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        let s = basis_state(3, "101").unwrap();
        assert_eq!(s.amplitudes()[5], Complex64::new(1.0, 0.0));
        assert_eq!(s.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
        let s = basis_state(1, "1").unwrap();
        assert_eq!(s.amplitudes(), &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(matches!(basis_state(3, "10"), Err(crate::Error::BitstringLength { len: 2, n_qubits: 3 })));
        assert!(matches!(basis_state(2, "1x"), Err(crate::Error::InvalidBit('x'))));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let s = basis_state(2, "10").unwrap();
        let out = apply_gate(&s, &Gate::cnot(0, 1)).unwrap();
        assert_eq!(out, basis_state(2, "11").unwrap());
    }

    #[test]
    fn u3_zero_is_identity() {
        let s = StateVector::w(3).unwrap();
        let out = apply_gate(&s, &Gate::u3(1, 0.0, 0.0, 0.0)).unwrap();
        assert!(close(&s, &out, 1e-15));
    }

    #[test]
    fn hadamard_on_zero() {
        let out = apply_gate(&StateVector::zero(1).unwrap(), &Gate::h(0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((out.amplitudes()[1].re - h).abs() < 1e-15);
    }

    #[test]
    fn bad_gate_indices_rejected() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(apply_gate(&s, &Gate::cnot(0, 2)), Err(crate::Error::QubitOutOfRange { index: 2, .. })));
        assert!(matches!(apply_gate(&s, &Gate::cz(1, 1)), Err(crate::Error::RepeatedQubit(1))));
        assert!(Circuit::new(2).push(Gate::h(5)).is_err());
    }

    #[test]
    fn bell_circuit() {
        let c = Circuit::from_gates(2, [Gate::h(0), Gate::cnot(0, 1)]).unwrap();
        let out = apply_circuit(&StateVector::zero(2).unwrap(), &c).unwrap();
        assert!(close(&out, &StateVector::ghz(2).unwrap(), 1e-15));
        let empty = Circuit::new(2);
        let s = basis_state(2, "01").unwrap();
        assert_eq!(apply_circuit(&s, &empty).unwrap(), s);
        assert!(matches!(
            apply_circuit(&StateVector::zero(3).unwrap(), &c),
            Err(crate::Error::QubitCountMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn product_state_ordering() {
        let z = basis_state(1, "0").unwrap();
        let o = basis_state(1, "1").unwrap();
        assert_eq!(product_state(&[z.clone(), o]).unwrap(), basis_state(2, "01").unwrap());
        let plus = apply_gate(&z, &Gate::h(0)).unwrap();
        let pp = product_state(&[plus.clone(), plus]).unwrap();
        assert!(pp.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-15 && a.im.abs() < 1e-15));
        assert!(product_state(&[]).is_err());
        assert!(product_state(&[StateVector::zero(2).unwrap()]).is_err());
    }

    #[test]
    fn cz_and_cswap_semantics() {
        let s = basis_state(2, "11").unwrap();
        let out = apply_gate(&s, &Gate::cz(0, 1)).unwrap();
        assert_eq!(out.amplitudes()[3], Complex64::new(-1.0, 0.0));
        let s = basis_state(3, "110").unwrap();
        assert_eq!(apply_gate(&s, &Gate::cswap(0, 1, 2)).unwrap(), basis_state(3, "101").unwrap());
        let s = basis_state(3, "010").unwrap();
        assert_eq!(apply_gate(&s, &Gate::cswap(0, 1, 2)).unwrap(), s);
    }

    #[test]
    fn trace_distance_edge_cases() {
        let a = basis_state(1, "0").unwrap();
        let b = basis_state(1, "1").unwrap();
        assert!(trace_distance_pure(&a, &a).unwrap().abs() < 1e-15);
        assert!((trace_distance_pure(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_distance_pure(&a, &StateVector::zero(2).unwrap()).is_err());
    }

    #[test]
    fn marginal_probabilities_order() {
        let s = basis_state(3, "011").unwrap();
        let p = s.marginal_probabilities(&[2, 0]).unwrap();
        // outcome index: qubit 2 is the high bit
        assert_eq!(p, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn permute_qubits_moves_bits() {
        let s = basis_state(3, "100").unwrap();
        assert_eq!(s.permute_qubits(&[1, 2, 0]).unwrap(), basis_state(3, "001").unwrap());
    }
}
