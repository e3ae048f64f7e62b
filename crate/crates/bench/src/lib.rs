//! Benchmarks for the estimator live under `benches/`.
