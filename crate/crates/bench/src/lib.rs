//! Criterion benchmarks for the estimator, the simulator and the modal
//! analysis; see `benches/`.
