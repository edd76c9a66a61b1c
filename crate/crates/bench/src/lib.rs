//! Criterion benchmarks for the training loop; see `benches/`.
