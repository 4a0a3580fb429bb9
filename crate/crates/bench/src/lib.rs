//! Benchmark workloads for the clearing engine. See `benches/clearing.rs`.
