//! Seeded input-state distributions.
//!
//! All randomness derives from a single `u64` seed. Independent streams are
//! obtained as `ChaCha8(seed ^ index)` with the ChaCha stream id set to the
//! purpose tag ([`Stream`]), so restarts, training sets and test draws never
//! share a sequence.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{product_state, trace_distance_pure, Gate, StateVector, MAX_QUBITS};

/// Human-readable statement of the stream rule, stored in model files.
pub const SEED_RULE: &str = "ChaCha8Rng::seed_from_u64(seed ^ index) with stream id = purpose tag";

/// Purpose tags for derived random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    TrainSet = 2,
    TestSet = 3,
    Dataset = 4,
    DepthClass = 5,
    DepthSample = 6,
    Split = 7,
}

pub fn stream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index);
    rng.set_stream(purpose as u64);
    rng
}

/// Distribution of generator input states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDistribution {
    /// Computational basis states. Training sets of size `n + 1` are
    /// `|0…0⟩` plus the weight-1 strings unless `random_choice` is set.
    ComputationalBasis {
        #[serde(default)]
        random_choice: bool,
    },
    /// Tensor products of Haar-random single-qubit states.
    HaarProduct,
    /// Local perturbations of `reference` within trace distance `epsilon / 2`.
    EpsilonBall { epsilon: f64, reference: Vec<[f64; 2]> },
}

impl InputDistribution {
    pub fn basis() -> Self {
        InputDistribution::ComputationalBasis { random_choice: false }
    }

    pub fn epsilon_ball(reference: &StateVector, epsilon: f64) -> Self {
        InputDistribution::EpsilonBall {
            epsilon,
            reference: reference.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            InputDistribution::EpsilonBall { epsilon, reference } => {
                if !(*epsilon > 0.0) {
                    return Err(Error::Domain(format!("ball radius must be positive, got {epsilon}")));
                }
                if reference.len() != 1usize << n {
                    return Err(Error::QubitCountMismatch {
                        expected: n,
                        actual: reference.len().trailing_zeros() as usize,
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn reference_state(reference: &[[f64; 2]]) -> Result<StateVector> {
        StateVector::from_amplitudes_normalized(reference.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }

    /// Sampler over this distribution for `n` qubits.
    pub fn sampler(&self, n: usize, rng: ChaCha8Rng) -> Result<InputSampler> {
        self.validate(n)?;
        let reference = match self {
            InputDistribution::EpsilonBall { reference, .. } => Some(Self::reference_state(reference)?),
            _ => None,
        };
        Ok(InputSampler { dist: self.clone(), n, rng, reference })
    }

    /// Training inputs of the given size.
    pub fn training_set(&self, n: usize, size: usize, seed: u64) -> Result<Vec<StateVector>> {
        let mut rng = stream(seed, Stream::TrainSet, 0);
        match self {
            InputDistribution::ComputationalBasis { random_choice: false } => training_basis_set(n, size, &mut rng),
            InputDistribution::ComputationalBasis { random_choice: true } => random_basis_set(n, size, &mut rng),
            _ => {
                let mut s = self.sampler(n, rng)?;
                (0..size).map(|_| s.next_state()).collect()
            }
        }
    }
}

/// Stateful sampler; every draw advances its own stream.
pub struct InputSampler {
    dist: InputDistribution,
    n: usize,
    rng: ChaCha8Rng,
    reference: Option<StateVector>,
}

impl InputSampler {
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn next_state(&mut self) -> Result<StateVector> {
        match &self.dist {
            InputDistribution::ComputationalBasis { .. } => {
                let index = self.rng.random_range(0..1usize << self.n);
                StateVector::basis_index(self.n, index)
            }
            InputDistribution::HaarProduct => sample_haar_product(self.n, &mut self.rng),
            InputDistribution::EpsilonBall { epsilon, .. } => {
                let reference = self.reference.as_ref().expect("reference built with sampler");
                sample_epsilon_ball(reference, *epsilon, &mut self.rng)
            }
        }
    }

    pub fn take(&mut self, count: usize) -> Result<Vec<StateVector>> {
        (0..count).map(|_| self.next_state()).collect()
    }
}

/// Basis training set: for `size <= n + 1`, `|0…0⟩` followed by the
/// weight-1 strings `|10…0⟩, |010…0⟩, …`; larger sizes extend with distinct
/// uniformly drawn basis states.
pub fn training_basis_set<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Result<Vec<StateVector>> {
    if n > MAX_QUBITS || size > 1usize << n {
        return Err(Error::InvalidArgument(format!("cannot draw {size} distinct basis states on {n} qubits")));
    }
    let mut indices: Vec<usize> = std::iter::once(0).chain((0..n).map(|q| 1usize << (n - 1 - q))).take(size).collect();
    if size > indices.len() {
        let rest: Vec<usize> = (0..1usize << n).filter(|i| !indices.contains(i)).collect();
        let extra = sample(rng, rest.len(), size - indices.len());
        indices.extend(extra.iter().map(|k| rest[k]));
    }
    indices.into_iter().map(|i| StateVector::basis_index(n, i)).collect()
}

/// Distinct basis states drawn uniformly without replacement.
pub fn random_basis_set<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Result<Vec<StateVector>> {
    if n > MAX_QUBITS || size > 1usize << n {
        return Err(Error::InvalidArgument(format!("cannot draw {size} distinct basis states on {n} qubits")));
    }
    sample(rng, 1usize << n, size).iter().map(|i| StateVector::basis_index(n, i)).collect()
}

/// Haar-random single-qubit state from two complex Gaussians.
pub fn sample_haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> StateVector {
    loop {
        let mut g = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let amps = vec![g(), g()];
        if let Ok(s) = StateVector::from_amplitudes_normalized(amps) {
            return s;
        }
    }
}

/// Haar-random `n`-qubit pure state (normalized complex Gaussian vector).
pub fn sample_haar_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("cannot sample a {n}-qubit state")));
    }
    loop {
        let amps =
            (0..1usize << n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        if let Ok(s) = StateVector::from_amplitudes_normalized(amps) {
            return Ok(s);
        }
    }
}

/// Tensor product of `n` independent Haar-random qubits.
pub fn sample_haar_product<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    let factors: Vec<StateVector> = (0..n).map(|_| sample_haar_qubit(rng)).collect();
    product_state(&factors)
}

/// Random unit vector on the sphere.
fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-12 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

/// `exp(-i θ n̂·σ / 2)` as a U3 gate up to global phase.
fn axis_rotation(qubit: usize, axis: [f64; 3], theta: f64) -> Gate {
    // write the rotation as RZ(φ) RY(β) RZ(λ) by matching the matrix
    let (s, c) = (theta / 2.0).sin_cos();
    let [nx, ny, nz] = axis;
    let m00 = Complex64::new(c, -nz * s);
    let m10 = Complex64::new(ny * s, -nx * s);
    let alpha = 2.0 * m10.norm().atan2(m00.norm());
    // U3 = [[cos, -e^{iγ} sin], [e^{iβ} sin, e^{i(β+γ)} cos]] times a phase e^{-iarg(m00)}
    let phase = m00.arg();
    let beta = m10.arg() - phase;
    let m01 = Complex64::new(-ny * s, -nx * s);
    let gamma = (-m01).arg() - phase;
    Gate::u3(qubit, alpha, beta, gamma)
}

/// Sample within trace distance `epsilon / 2` of `reference`, so any two
/// samples are within `epsilon` of each other.
///
/// Each qubit gets a small rotation about a random axis; the angles are
/// halved until the distance bound holds.
pub fn sample_epsilon_ball<R: Rng + ?Sized>(reference: &StateVector, epsilon: f64, rng: &mut R) -> Result<StateVector> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("ball radius must be positive, got {epsilon}")));
    }
    let n = reference.n_qubits();
    let axes: Vec<[f64; 3]> = (0..n).map(|_| random_axis(rng)).collect();
    let mut thetas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..epsilon.min(std::f64::consts::PI))).collect();
    loop {
        let mut s = reference.clone();
        for (q, (&axis, &theta)) in axes.iter().zip(&thetas).enumerate() {
            s.apply_mut(&axis_rotation(q, axis, theta))?;
        }
        if trace_distance_pure(reference, &s)? <= epsilon / 2.0 {
            return Ok(s);
        }
        thetas.iter_mut().for_each(|t| *t *= 0.5);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::concentratable_entanglement;
    use crate::sim::{basis_state, subset_purity};

    #[test]
    fn basis_sets() {
        let mut rng = stream(0, Stream::TrainSet, 0);
        let s = training_basis_set(3, 4, &mut rng).unwrap();
        let want: Vec<StateVector> = ["000", "100", "010", "001"].iter().map(|b| basis_state(3, b).unwrap()).collect();
        assert_eq!(s, want);
        let all = training_basis_set(2, 4, &mut rng).unwrap();
        let mut idx: Vec<usize> =
            all.iter().map(|s| s.amplitudes().iter().position(|a| a.norm() > 0.5).unwrap()).collect();
        idx.sort();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert!(training_basis_set(3, 9, &mut rng).is_err());
        let big = training_basis_set(4, 10, &mut rng).unwrap();
        assert_eq!(big.len(), 10);
        for (i, a) in big.iter().enumerate() {
            for b in &big[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn haar_product_is_product_and_deterministic() {
        let mut a = stream(9, Stream::TestSet, 0);
        let mut b = stream(9, Stream::TestSet, 0);
        for _ in 0..20 {
            let s = sample_haar_product(4, &mut a).unwrap();
            assert_eq!(s, sample_haar_product(4, &mut b).unwrap());
            assert!(concentratable_entanglement(&s).unwrap() < 1e-10);
            for q in 0..4 {
                assert!((subset_purity(&s, &[q]).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_qubit_marginal_mean() {
        let mut rng = stream(3, Stream::TestSet, 0);
        let mean: f64 = (0..10_000).map(|_| sample_haar_qubit(&mut rng).amplitudes()[0].norm_sqr()).sum::<f64>() / 1e4;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn axis_rotation_matches_exponential() {
        let mut rng = stream(1, Stream::TestSet, 0);
        for _ in 0..50 {
            let axis = random_axis(&mut rng);
            let theta = rng.random_range(0.0..3.0);
            let m = axis_rotation(0, axis, theta).matrix_1q().unwrap();
            let (s, c) = (theta / 2.0).sin_cos();
            let i = Complex64::i();
            let want = [
                [c - i * axis[2] * s, (-i * axis[0] - axis[1]) * s],
                [(-i * axis[0] + axis[1]) * s, c + i * axis[2] * s],
            ];
            // equal up to a global phase
            let phase = if want[0][0].norm() > 1e-6 { m[0][0] / want[0][0] } else { m[0][1] / want[0][1] };
            for r in 0..2 {
                for k in 0..2 {
                    assert!((m[r][k] - phase * want[r][k]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn epsilon_ball_bounds() {
        let mut rng = stream(5, Stream::TestSet, 0);
        let reference = sample_haar_product(3, &mut rng).unwrap();
        let eps = 0.2;
        let samples: Vec<_> = (0..100).map(|_| sample_epsilon_ball(&reference, eps, &mut rng).unwrap()).collect();
        for (i, a) in samples.iter().enumerate() {
            assert!(trace_distance_pure(&reference, a).unwrap() <= eps / 2.0);
            for b in &samples[i + 1..] {
                assert!(trace_distance_pure(a, b).unwrap() <= eps + 1e-12);
            }
        }
        // radius 2 covers everything
        assert!(sample_epsilon_ball(&reference, 2.0, &mut rng).is_ok());
        assert!(matches!(sample_epsilon_ball(&reference, 0.0, &mut rng), Err(Error::Domain(_))));
    }
}
