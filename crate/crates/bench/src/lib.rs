//! Shared fixtures for the criterion benchmarks.

use birkhoff_core::{sample_wigner_pair, Plant, WignerPair};

/// Seeded instance with a random plant, so solvers cannot exploit `Π⋆ = I`.
pub fn instance(n: usize, sigma: f64) -> WignerPair {
    sample_wigner_pair(n, sigma, Plant::UniformRandom, 0xbe9c + n as u64)
        .expect("valid benchmark parameters")
}
