//! Criterion benchmarks for the feature, PCA and classifier stages; see `benches/`.
