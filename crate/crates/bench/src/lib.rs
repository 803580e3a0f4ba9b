//! Criterion benchmarks for the solver and simulators; see `benches/`.
