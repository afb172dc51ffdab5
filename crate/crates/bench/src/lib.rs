//! Criterion benchmarks for the `qcert` kernels; see `benches/`.
