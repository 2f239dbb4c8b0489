//! Benchmark-only crate; see `benches/core.rs` for the criterion
//! suite covering the analytic kernels, the optimizer, and the
//! Monte Carlo sampler.
