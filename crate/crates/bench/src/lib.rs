//! Criterion benchmarks for the core toolkit; see `benches/`.
