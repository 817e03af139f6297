//! Fixtures shared by the benchmarks.

use stackedge_core::{profiles_from_block_sizes, MinerProfile};

/// `n` miners with block sizes spread evenly over `[150, 250]`.
pub fn spread_miners(n: usize) -> Vec<MinerProfile> {
    let sizes: Vec<f64> = (0..n)
        .map(|k| 150.0 + 100.0 * k as f64 / (n.max(2) - 1) as f64)
        .collect();
    profiles_from_block_sizes(&sizes).expect("valid block sizes")
}
