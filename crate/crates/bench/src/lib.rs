//! Criterion benchmarks for the assembly, factorization, eigenvalue and
//! fractional-norm kernels; see `benches/kernels.rs`.
