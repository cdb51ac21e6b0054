//! Criterion benchmarks for calorix; see `benches/`.
