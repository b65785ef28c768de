//! Criterion benchmarks for the integrand engine and face strata; see `benches/engine.rs`.
