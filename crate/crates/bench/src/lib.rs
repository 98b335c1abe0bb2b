//! Criterion benchmarks for the integrator, eigen solver and equilibrium
//! enumeration. Run with `cargo bench -p bivirus-bench`.
