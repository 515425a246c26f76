//! Criterion benchmarks for gibbsfit; see `benches/`.
