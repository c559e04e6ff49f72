//! Criterion benchmarks for the language model and evaluation metrics; see `benches/`.
