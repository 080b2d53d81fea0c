//! Shared fixtures for the pipeline benchmarks.

use localex::spiral::{generate_dataset, Dataset, GenerationConfig};

/// A reproducible spiral dataset at the requested size.
pub fn spiral_fixture(n: usize) -> Dataset {
    generate_dataset(&GenerationConfig {
        n,
        seed: 7,
        ..GenerationConfig::default()
    })
    .expect("valid generation config")
}
