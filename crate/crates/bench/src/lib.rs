//! Criterion benchmarks for the simulator and entanglement kernels live in
//! `benches/`.
