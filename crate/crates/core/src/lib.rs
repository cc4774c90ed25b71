//! Statevector simulation and variational training toolkit for
//! multipartite-entangled quantum state datasets.
//!
//! The crate is organized bottom-up:
//!
//! - [`sim`]: dense statevectors, the gate set, circuits, reduced states.
//! - [`entanglement`]: concentratable entanglement, n-tangle, concurrence,
//!   the swap-test oracle and the continuity/witness bounds.
//! - [`ansatz`]: deterministic circuit builders (2QU, HWE, SEA, CONV,
//!   depth-learning HWE, QCNN).
//! - [`sampling`]: seeded input-state distributions.
//! - [`training`]: generator losses, gradients, ADAM and the restart harness.
//! - [`classifier`]: multi-copy QCNN classifier with a sigmoid head.
//! - [`datasets`]: model files, dataset factories and state exports.
//! - [`analysis`]: histograms, purity tables and concurrence profiles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ansatz;
pub mod classifier;
pub mod datasets;
pub mod entanglement;
pub mod error;
pub mod sampling;
pub mod sim;
pub mod training;

pub use ansatz::{AnsatzKind, AnsatzSpec};
pub use classifier::{ClassifierConfig, ClassifierModel, LabeledState, LabeledStateSet};
pub use datasets::{DepthDatasetSpec, GeneratorModelFile};
pub use entanglement::{concentratable_entanglement, concurrence, n_tangle, swap_test_oracle};
pub use error::{Error, Result};
pub use sampling::InputDistribution;
pub use sim::{Circuit, DensityMatrix, Gate, StateVector};
pub use training::{GenTrainConfig, Generator, TrainedGenerator};
