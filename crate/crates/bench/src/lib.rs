//! Criterion benchmarks for trialkit live in `benches/`.
