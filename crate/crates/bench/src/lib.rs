//! Shared inputs for the benchmarks.

use handicap_lab::synthetic::{generate, SyntheticConfig};
use handicap_lab::Dataset;

/// A generated league of `seasons` seasons with 20 teams.
pub fn league(seasons: usize) -> Dataset {
    generate(&SyntheticConfig { seasons, seed: 17, ..SyntheticConfig::default() })
        .expect("valid config")
        .dataset
}
