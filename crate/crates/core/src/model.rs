//! Mining economics: relative computing power, orphaning, win probability,
//! miner utility and the provider's profit.
//!
//! A miner `i` buying `x_i` units of edge computing wins the block race with
//! probability
//!
//! ```text
//! P_i = x_i / sum_j x_j * exp(-lambda * z * t_i)
//! ```
//!
//! where `t_i` is the number of transactions in its block. The orphan
//! discount `exp(-lambda * z * t)` and the block reward `R + r * t` always
//! appear together, so most of the solver code works with the reward
//! coefficient `a_i = (R + r * t_i) * exp(-lambda * z * t_i)`.
//!
//! Miner indices are zero-based throughout the API; `MinerProfile::id` keeps
//! the one-based label used in reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Economy-wide constants shared by every miner and the provider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Fixed block reward `R` (tokens).
    pub fixed_reward: f64,
    /// Variable reward `r` per transaction in the block.
    pub variable_reward_factor: f64,
    /// Block arrival rate `lambda` (blocks per second).
    pub poisson_rate: f64,
    /// Propagation delay `z` per transaction (seconds).
    pub delay_factor: f64,
    /// Electricity cost `c` per demand unit per second.
    pub electricity_cost: f64,
    /// Mining time `T` charged in the provider's cost term (seconds).
    pub mining_time: f64,
    /// Lower bound on a miner's service demand.
    pub demand_min: f64,
    /// Upper bound on a miner's service demand.
    pub demand_max: f64,
    /// Maximum unit price the provider may charge.
    pub price_cap: f64,
}

impl Default for MarketParams {
    /// Default evaluation setting. The block rate is one block per 600 s and
    /// the mining time equals the mean inter-block time `1 / lambda`.
    fn default() -> Self {
        let poisson_rate = 1.0 / 600.0;
        MarketParams {
            fixed_reward: 1e4,
            variable_reward_factor: 20.0,
            poisson_rate,
            delay_factor: 5e-3,
            electricity_cost: 1e-3,
            mining_time: 1.0 / poisson_rate,
            demand_min: 1e-2,
            demand_max: 100.0,
            price_cap: 100.0,
        }
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("market.fixed_reward", self.fixed_reward),
            ("market.poisson_rate", self.poisson_rate),
            ("market.delay_factor", self.delay_factor),
            ("market.mining_time", self.mining_time),
            ("market.demand_min", self.demand_min),
            ("market.demand_max", self.demand_max),
            ("market.price_cap", self.price_cap),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        let non_negative = [
            ("market.variable_reward_factor", self.variable_reward_factor),
            ("market.electricity_cost", self.electricity_cost),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be non-negative and finite, got {value}"),
                ));
            }
        }
        if self.demand_min >= self.demand_max {
            return Err(Error::invalid(
                "market.demand_min",
                format!(
                    "must be below market.demand_max ({} >= {})",
                    self.demand_min, self.demand_max
                ),
            ));
        }
        Ok(())
    }

    /// Provider's cost per unit of demand, `c * T`.
    pub fn unit_cost(&self) -> f64 {
        self.electricity_cost * self.mining_time
    }

    /// Probability that a block with `t` transactions survives propagation.
    pub fn survival(&self, block_size: f64) -> f64 {
        (-self.poisson_rate * self.delay_factor * block_size).exp()
    }

    pub fn clamp_demand(&self, demand: f64) -> f64 {
        demand.clamp(self.demand_min, self.demand_max)
    }
}

/// One miner: a label and the size of the block it mines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinerProfile {
    pub id: usize,
    /// Number of transactions `t_i` in the miner's block.
    pub block_size: f64,
}

impl MinerProfile {
    pub fn new(id: usize, block_size: f64) -> Result<Self> {
        if !(block_size.is_finite() && block_size >= 0.0) {
            return Err(Error::invalid(
                "block_size",
                format!("must be finite and non-negative, got {block_size}"),
            ));
        }
        Ok(MinerProfile { id, block_size })
    }
}

/// Builds profiles labelled `1..=N` from block sizes.
pub fn profiles_from_block_sizes(block_sizes: &[f64]) -> Result<Vec<MinerProfile>> {
    block_sizes
        .iter()
        .enumerate()
        .map(|(i, &t)| MinerProfile::new(i + 1, t))
        .collect()
}

/// Service demands of all miners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandProfile(Vec<f64>);

impl DemandProfile {
    pub fn new(demands: Vec<f64>) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::invalid("demands", "at least one miner is required"));
        }
        if let Some(bad) = demands.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::invalid(
                "demands",
                format!("entries must be finite and non-negative, got {bad}"),
            ));
        }
        if demands.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroTotalDemand);
        }
        Ok(DemandProfile(demands))
    }

    /// Every miner at the same demand.
    pub fn constant(demand: f64, n: usize) -> Result<Self> {
        Self::new(vec![demand; n])
    }

    /// Checks the box `[demand_min, demand_max]`.
    pub fn check_bounds(&self, params: &MarketParams) -> Result<()> {
        for (i, &d) in self.0.iter().enumerate() {
            if d < params.demand_min || d > params.demand_max {
                return Err(Error::invalid(
                    "demands",
                    format!(
                        "demand of miner {i} is {d}, outside [{}, {}]",
                        params.demand_min, params.demand_max
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn get(&self, i: usize) -> Result<f64> {
        self.0.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.0.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PricingScheme {
    Uniform,
    Discriminatory,
}

impl fmt::Display for PricingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PricingScheme::Uniform => "uniform",
            PricingScheme::Discriminatory => "discriminatory",
        })
    }
}

impl FromStr for PricingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(PricingScheme::Uniform),
            "discriminatory" => Ok(PricingScheme::Discriminatory),
            other => Err(Error::invalid(
                "scheme",
                format!("expected `uniform` or `discriminatory`, got `{other}`"),
            )),
        }
    }
}

/// Unit prices charged to each miner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSchedule {
    prices: Vec<f64>,
    scheme: PricingScheme,
}

impl PriceSchedule {
    pub fn uniform(price: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("prices", "at least one miner is required"));
        }
        check_price(0, price)?;
        Ok(PriceSchedule {
            prices: vec![price; n],
            scheme: PricingScheme::Uniform,
        })
    }

    pub fn discriminatory(prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::invalid("prices", "at least one miner is required"));
        }
        for (i, &p) in prices.iter().enumerate() {
            check_price(i, p)?;
        }
        Ok(PriceSchedule {
            prices,
            scheme: PricingScheme::Discriminatory,
        })
    }

    /// Verifies `0 < p_i <= price_cap`.
    pub fn check_cap(&self, params: &MarketParams) -> Result<()> {
        for (i, &p) in self.prices.iter().enumerate() {
            if p > params.price_cap {
                return Err(Error::PriceOutOfRange {
                    index: i,
                    price: p,
                    min: 0.0,
                    max: params.price_cap,
                });
            }
        }
        Ok(())
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn scheme(&self) -> PricingScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn price(&self, i: usize) -> Result<f64> {
        self.prices.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.prices.len(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.prices.iter().sum::<f64>() / self.prices.len() as f64
    }
}

fn check_price(index: usize, price: f64) -> Result<()> {
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::PriceOutOfRange {
            index,
            price,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(())
}

/// Outcome of a Stage-II solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub demands: DemandProfile,
    pub utilities: Vec<f64>,
    pub esp_profit: f64,
    pub iterations: usize,
    pub converged: bool,
    pub uniqueness_condition_holds: bool,
    /// No demand sits on either bound.
    pub interior: bool,
    /// Sup-norm distance between the last iterate and its best response.
    pub residual: f64,
}

/// Share `x_i / sum_j x_j` of the total computing power.
pub fn relative_power(x: &DemandProfile, i: usize) -> Result<f64> {
    let xi = x.get(i)?;
    let total = x.total();
    if total <= 0.0 {
        return Err(Error::ZeroTotalDemand);
    }
    Ok(xi / total)
}

/// Probability `1 - exp(-lambda * z * t)` that a block of `t` transactions is orphaned.
pub fn orphan_probability(block_size: f64, params: &MarketParams) -> Result<f64> {
    if !(block_size >= 0.0) {
        return Err(Error::invalid(
            "block_size",
            format!("must be non-negative, got {block_size}"),
        ));
    }
    Ok(-(-params.poisson_rate * params.delay_factor * block_size).exp_m1())
}

pub fn win_probability(
    x: &DemandProfile,
    profiles: &[MinerProfile],
    i: usize,
    params: &MarketParams,
) -> Result<f64> {
    check_len("profiles", x.len(), profiles.len())?;
    let alpha = relative_power(x, i)?;
    Ok(alpha * params.survival(profiles[i].block_size))
}

/// Expected block reward net of the service payment, for miner `i`.
pub fn miner_utility(
    x: &DemandProfile,
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    i: usize,
    params: &MarketParams,
) -> Result<f64> {
    check_len("prices", x.len(), prices.len())?;
    let win = win_probability(x, profiles, i, params)?;
    let t = profiles[i].block_size;
    let reward = params.fixed_reward + params.variable_reward_factor * t;
    Ok(reward * win - prices.price(i)? * x.get(i)?)
}

/// Utilities of all miners.
pub fn utilities(
    x: &DemandProfile,
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<Vec<f64>> {
    (0..x.len())
        .map(|i| miner_utility(x, prices, profiles, i, params))
        .collect()
}

/// Revenue minus serving cost: `sum_i p_i x_i - sum_i c T x_i`.
pub fn esp_profit(x: &DemandProfile, prices: &PriceSchedule, params: &MarketParams) -> Result<f64> {
    check_len("prices", x.len(), prices.len())?;
    let unit_cost = params.unit_cost();
    let revenue: f64 = x
        .as_slice()
        .iter()
        .zip(prices.prices())
        .map(|(d, p)| p * d)
        .sum();
    let cost: f64 = x.as_slice().iter().map(|d| unit_cost * d).sum();
    Ok(revenue - cost)
}

/// Orphan-discounted block reward `a = (R + r t) exp(-lambda z t)`.
pub fn reward_coefficient(block_size: f64, params: &MarketParams) -> f64 {
    (params.fixed_reward + params.variable_reward_factor * block_size) * params.survival(block_size)
}

pub fn reward_coefficients(profiles: &[MinerProfile], params: &MarketParams) -> Vec<f64> {
    profiles
        .iter()
        .map(|m| reward_coefficient(m.block_size, params))
        .collect()
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
