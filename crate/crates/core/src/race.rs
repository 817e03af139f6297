//! Monte Carlo simulation of the block race.
//!
//! Each trial draws the miner that solves the puzzle first with probability
//! proportional to its demand, then discards the block as orphaned with
//! probability `1 - exp(-lambda * z * t_i)`. The empirical win frequencies
//! estimate the analytic win probabilities of [`crate::model::win_probability`].

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{check_len, DemandProfile, MarketParams, MinerProfile};

/// Runs `trials` races and returns per-miner win counts divided by `trials`.
/// The same seed always produces the same frequencies.
pub fn simulate_mining_race(
    x: &DemandProfile,
    profiles: &[MinerProfile],
    params: &MarketParams,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    check_len("profiles", x.len(), profiles.len())?;
    let first =
        WeightedIndex::new(x.as_slice()).map_err(|e| Error::invalid("demands", e.to_string()))?;
    let survival: Vec<f64> = profiles
        .iter()
        .map(|m| params.survival(m.block_size))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wins = vec![0u64; x.len()];
    for _ in 0..trials {
        let i = first.sample(&mut rng);
        if rng.random::<f64>() < survival[i] {
            wins[i] += 1;
        }
    }
    Ok(wins.into_iter().map(|w| w as f64 / trials as f64).collect())
}
