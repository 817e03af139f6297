//! Randomized check that the best-response map behaves as a standard
//! function: positive, monotone in the rivals' demands and scalable
//! (`k F(x) > F(k x)` for `k > 1`).
//!
//! Positivity and monotonicity of the stationary expression
//! `sqrt(a_i S / p_i) - S` require the rivals' total `S` to stay below
//! `a_i / (4 p_i)`, where the expression is increasing in `S`. The probe
//! samples rival profiles inside that region; scalability holds everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{best_response, unconstrained_best_response};
use crate::error::{Error, Result};
use crate::model::{reward_coefficient, DemandProfile, MarketParams, MinerProfile, PriceSchedule};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StandardFunctionReport {
    pub states: usize,
    pub positivity_failures: usize,
    pub monotonicity_failures: usize,
    pub scalability_failures: usize,
    /// Description of the first failing state, if any.
    pub counterexample: Option<String>,
}

impl StandardFunctionReport {
    pub fn failures(&self) -> usize {
        self.positivity_failures + self.monotonicity_failures + self.scalability_failures
    }

    pub fn passed(&self) -> bool {
        self.states > 0 && self.failures() == 0
    }

    pub fn merge(&mut self, other: StandardFunctionReport) {
        self.states += other.states;
        self.positivity_failures += other.positivity_failures;
        self.monotonicity_failures += other.monotonicity_failures;
        self.scalability_failures += other.scalability_failures;
        if self.counterexample.is_none() {
            self.counterexample = other.counterexample;
        }
    }
}

/// Rivals' total below which miner `i`'s stationary response is increasing.
pub fn monotone_region_bound(
    i: usize,
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<f64> {
    let miner = profiles.get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: profiles.len(),
    })?;
    Ok(reward_coefficient(miner.block_size, params) / (4.0 * prices.price(i)?))
}

/// Samples `states` rival profiles for the listed miners (round robin) and
/// checks the three properties on each. Miners whose region is empty
/// because `(N - 1) * demand_min` already exceeds the bound are skipped.
pub fn probe_standard_function(
    profiles: &[MinerProfile],
    prices: &PriceSchedule,
    params: &MarketParams,
    miners: &[usize],
    states: usize,
    seed: u64,
) -> Result<StandardFunctionReport> {
    let n = profiles.len();
    if n < 2 {
        return Err(Error::TooFewMiners {
            required: 2,
            got: n,
        });
    }
    let floor = (n - 1) as f64 * params.demand_min;
    let mut eligible = Vec::new();
    for &i in miners {
        let bound = monotone_region_bound(i, prices, profiles, params)?;
        if bound > floor {
            eligible.push((i, bound));
        }
    }
    let mut report = StandardFunctionReport::default();
    if eligible.is_empty() {
        return Ok(report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..states {
        let (i, bound) = eligible[k % eligible.len()];
        let low = rng.random_range(floor..bound);
        let high = rng.random_range(low..bound);
        let x = rival_profile(&mut rng, i, n, low, params);
        let mut raised = x.clone();
        spread(&mut rng, &mut raised, i, high - low, params);

        let x = DemandProfile::new(x)?;
        let raised = DemandProfile::new(raised)?;
        let scale = rng.random_range(1.01..4.0);
        let scaled = DemandProfile::new(x.as_slice().iter().map(|v| v * scale).collect())?;

        let f = unconstrained_best_response(i, &x, prices, profiles, params)?;
        let f_raised = unconstrained_best_response(i, &raised, prices, profiles, params)?;
        let f_scaled = unconstrained_best_response(i, &scaled, prices, profiles, params)?;
        let c = best_response(i, &x, prices, profiles, params)?;
        let c_raised = best_response(i, &raised, prices, profiles, params)?;
        let c_scaled = best_response(i, &scaled, prices, profiles, params)?;

        report.states += 1;
        let slack = |v: f64| 1e-12 * v.abs().max(1.0);
        let mut failed = None;
        if !(f > 0.0 && c > 0.0) {
            report.positivity_failures += 1;
            failed = Some("positivity");
        }
        if f_raised < f - slack(f) || c_raised < c - slack(c) {
            report.monotonicity_failures += 1;
            failed = Some("monotonicity");
        }
        if !(scale * f > f_scaled && scale * c > c_scaled) {
            report.scalability_failures += 1;
            failed = Some("scalability");
        }
        if let (Some(what), None) = (failed, &report.counterexample) {
            report.counterexample = Some(format!(
                "{what} fails for miner {i}: rivals {:?}, raised {:?}, scale {scale}",
                x.as_slice(),
                raised.as_slice()
            ));
        }
    }
    Ok(report)
}

/// Rival demands summing to `total` (own demand at `demand_min`), each inside the box.
fn rival_profile(
    rng: &mut ChaCha8Rng,
    own: usize,
    n: usize,
    total: f64,
    params: &MarketParams,
) -> Vec<f64> {
    let mut x = vec![params.demand_min; n];
    let extra = total - (n - 1) as f64 * params.demand_min;
    spread(rng, &mut x, own, extra, params);
    x
}

/// Adds `extra` to the rivals of `own` in random shares, saturating at `demand_max`.
fn spread(rng: &mut ChaCha8Rng, x: &mut [f64], own: usize, extra: f64, params: &MarketParams) {
    let weights: Vec<f64> = (0..x.len())
        .map(|j| {
            if j == own {
                0.0
            } else {
                rng.sample::<f64, _>(Exp1)
            }
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    for (xj, wj) in x.iter_mut().zip(&weights) {
        *xj = (*xj + extra * wj / sum).min(params.demand_max);
    }
}
