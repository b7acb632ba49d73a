//! Criterion benchmarks for glottokit; see `benches/pipeline.rs`.
