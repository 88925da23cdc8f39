//! Criterion benchmarks for the `cocolab` kernels live in `benches/`.
