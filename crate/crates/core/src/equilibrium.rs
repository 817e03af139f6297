//! Stage II: the miners' demand game.
//!
//! Given unit prices, every miner picks the demand that maximizes its
//! expected utility against the others. The first-order condition gives the
//! best response
//!
//! ```text
//! x_i = sqrt(a_i * S_i / p_i) - S_i,   S_i = sum_{j != i} x_j
//! ```
//!
//! clamped to `[demand_min, demand_max]`. At an interior equilibrium, with
//! `w_j = p_j / a_j` and `K = (N - 1) / sum_j w_j`, the demands are
//! `x_i = K - K^2 w_i` and sum to `K`.
//!
//! [`solve_mdg`] runs damped Jacobi best-response dynamics, which also covers
//! equilibria where some miners sit on a bound. The closed form is exposed
//! separately and [`verify_nash`] checks any profile against unilateral
//! deviations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_len, esp_profit, miner_utility, reward_coefficients, utilities, DemandProfile,
    EquilibriumReport, MarketParams, MinerProfile, PriceSchedule,
};

/// Stopping rule and relaxation for the best-response iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sup-norm bound on `|BR(x) - x|` at which the iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Upper limit on the weight given to the new best response.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-9,
            max_iterations: 10_000,
            damping: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(
                "solver.tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid(
                "solver.max_iterations",
                "must be at least 1",
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(
                "solver.damping",
                format!("must lie in (0, 1], got {}", self.damping),
            ));
        }
        Ok(())
    }
}

/// Evaluation of the uniqueness inequality
/// `2 (N - 1) w_i < sum_j w_j` with `w_j = p_j / a_j`.
///
/// For `N >= 2` the inequality cannot hold for every miner at once: summing
/// it over all miners gives `2 (N - 1) < N`. `per_miner` records which miners
/// satisfy it individually.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    /// Left-hand side for the worst miner.
    pub lhs: f64,
    pub rhs: f64,
    pub worst_miner: usize,
    pub per_miner: Vec<bool>,
}

impl ConditionCheck {
    pub fn holds_for(&self, i: usize) -> bool {
        self.per_miner.get(i).copied().unwrap_or(false)
    }

    fn from_ratios(ratios: &[f64]) -> Self {
        let n = ratios.len();
        let rhs: f64 = ratios.iter().sum();
        let factor = 2.0 * (n as f64 - 1.0);
        let per_miner: Vec<bool> = ratios.iter().map(|w| factor * w < rhs).collect();
        let (worst_miner, worst) =
            ratios
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc },
                );
        ConditionCheck {
            holds: per_miner.iter().all(|&h| h),
            lhs: factor * worst,
            rhs,
            worst_miner,
            per_miner,
        }
    }
}

/// Interior solution of the first-order conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub demands: Vec<f64>,
    /// `K = (N - 1) / sum_j w_j`, which equals the sum of the demands.
    pub total: f64,
    /// Every demand lies inside `[demand_min, demand_max]`. When false the
    /// closed form is not the equilibrium and [`solve_mdg`] should be used.
    pub interior: bool,
}

/// Price-to-reward ratios `w_i = p_i / a_i`.
pub fn cost_ratios(
    profiles: &[MinerProfile],
    prices: &PriceSchedule,
    params: &MarketParams,
) -> Result<Vec<f64>> {
    check_len("prices", profiles.len(), prices.len())?;
    Ok(reward_coefficients(profiles, params)
        .iter()
        .zip(prices.prices())
        .map(|(a, p)| p / a)
        .collect())
}

fn require_miners(n: usize, required: usize) -> Result<()> {
    if n < required {
        return Err(Error::TooFewMiners { required, got: n });
    }
    Ok(())
}

/// `sqrt(a_i S_i / p_i) - S_i` before clamping.
pub fn unconstrained_best_response(
    i: usize,
    x: &DemandProfile,
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<f64> {
    let n = x.len();
    require_miners(n, 2)?;
    check_len("profiles", n, profiles.len())?;
    check_len("prices", n, prices.len())?;
    let own = x.get(i)?;
    let others = x.total() - own;
    let a = crate::model::reward_coefficient(profiles[i].block_size, params);
    Ok(response_to(a, prices.price(i)?, others))
}

#[inline]
fn response_to(coefficient: f64, price: f64, others: f64) -> f64 {
    (coefficient * others / price).sqrt() - others
}

/// Best response of miner `i` to the others' demands in `x`.
pub fn best_response(
    i: usize,
    x: &DemandProfile,
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<f64> {
    unconstrained_best_response(i, x, prices, profiles, params).map(|v| params.clamp_demand(v))
}

/// Uniqueness check under a single price (the price cancels).
pub fn check_uniqueness_uniform(
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<ConditionCheck> {
    require_miners(profiles.len(), 1)?;
    let inverse: Vec<f64> = reward_coefficients(profiles, params)
        .iter()
        .map(|a| 1.0 / a)
        .collect();
    Ok(ConditionCheck::from_ratios(&inverse))
}

pub fn check_uniqueness_discriminatory(
    profiles: &[MinerProfile],
    prices: &PriceSchedule,
    params: &MarketParams,
) -> Result<ConditionCheck> {
    require_miners(profiles.len(), 1)?;
    Ok(ConditionCheck::from_ratios(&cost_ratios(
        profiles, prices, params,
    )?))
}

pub(crate) fn closed_form_from_ratios(ratios: &[f64]) -> (f64, Vec<f64>) {
    let n = ratios.len() as f64;
    let total = (n - 1.0) / ratios.iter().sum::<f64>();
    let demands = ratios.iter().map(|w| total - total * total * w).collect();
    (total, demands)
}

pub fn closed_form_uniform(
    profiles: &[MinerProfile],
    price: f64,
    params: &MarketParams,
) -> Result<ClosedForm> {
    let prices = PriceSchedule::uniform(price, profiles.len().max(1))?;
    closed_form_discriminatory(profiles, &prices, params)
}

pub fn closed_form_discriminatory(
    profiles: &[MinerProfile],
    prices: &PriceSchedule,
    params: &MarketParams,
) -> Result<ClosedForm> {
    require_miners(profiles.len(), 2)?;
    let ratios = cost_ratios(profiles, prices, params)?;
    let (total, demands) = closed_form_from_ratios(&ratios);
    let interior = demands
        .iter()
        .all(|&d| d >= params.demand_min && d <= params.demand_max);
    Ok(ClosedForm {
        demands,
        total,
        interior,
    })
}

/// Computes the Stage-II equilibrium by damped Jacobi best-response dynamics.
///
/// Starts from `x0` (default: every miner at `demand_min`). Each sweep moves
/// all miners simultaneously toward their best responses by the current
/// relaxation weight. The weight starts at `min(config.damping, 4 / (N + 1))`
/// and is halved whenever the residual fails to improve for
/// [`STALL_WINDOW`] sweeps, which damps the oscillation the simultaneous
/// update develops along the aggregate-demand direction.
///
/// A single miner faces no competition and its utility falls with demand, so
/// it buys `demand_min`.
///
/// Non-convergence is reported through `converged = false` with the last
/// iterate, not as an error.
pub fn solve_mdg(
    profiles: &[MinerProfile],
    prices: &PriceSchedule,
    params: &MarketParams,
    config: &SolverConfig,
    x0: Option<&DemandProfile>,
) -> Result<EquilibriumReport> {
    let n = profiles.len();
    require_miners(n, 1)?;
    check_len("prices", n, prices.len())?;
    config.validate()?;
    params.validate()?;
    prices.check_cap(params)?;

    if n == 1 {
        let demands = DemandProfile::constant(params.demand_min, 1)?;
        return finish(demands, profiles, prices, params, 0, true, 0.0);
    }

    let mut x = match x0 {
        Some(start) => {
            check_len("initial demands", n, start.len())?;
            start.check_bounds(params)?;
            start.as_slice().to_vec()
        }
        None => vec![params.demand_min; n],
    };
    let coefficients = reward_coefficients(profiles, params);
    let p = prices.prices();

    let mut weight = config.damping.min(4.0 / (n as f64 + 1.0));
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut response = vec![0.0; n];
    let mut iterations = 0;
    let mut residual;
    let mut just_snapped = false;
    loop {
        let total: f64 = x.iter().sum();
        residual = 0.0f64;
        for i in 0..n {
            let others = total - x[i];
            response[i] = params.clamp_demand(response_to(coefficients[i], p[i], others));
            residual = residual.max((response[i] - x[i]).abs());
        }
        if residual < config.tolerance && !just_snapped {
            // miners whose response sits on a bound take it exactly
            let mut snapped = false;
            for (xi, ri) in x.iter_mut().zip(&response) {
                if (*ri == params.demand_min || *ri == params.demand_max) && *xi != *ri {
                    *xi = *ri;
                    snapped = true;
                }
            }
            if snapped {
                just_snapped = true;
                continue;
            }
        }
        if residual < config.tolerance || iterations >= config.max_iterations {
            break;
        }
        just_snapped = false;
        if residual < best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                weight = (weight * 0.5).max(MIN_WEIGHT);
                best = residual;
                stalled = 0;
            }
        }
        for (xi, ri) in x.iter_mut().zip(&response) {
            *xi += weight * (ri - *xi);
        }
        iterations += 1;
    }
    let converged = residual < config.tolerance;
    if !converged {
        log::warn!(
            "best-response dynamics stopped after {iterations} sweeps, residual {residual:e}"
        );
    }
    finish(
        DemandProfile::new(x)?,
        profiles,
        prices,
        params,
        iterations,
        converged,
        residual,
    )
}

/// Sweeps without a new best residual before the relaxation weight is halved.
pub const STALL_WINDOW: usize = 20;
const MIN_WEIGHT: f64 = 1e-6;

fn finish(
    demands: DemandProfile,
    profiles: &[MinerProfile],
    prices: &PriceSchedule,
    params: &MarketParams,
    iterations: usize,
    converged: bool,
    residual: f64,
) -> Result<EquilibriumReport> {
    let condition = check_uniqueness_discriminatory(profiles, prices, params)?;
    let utilities = utilities(&demands, prices, profiles, params)?;
    let esp_profit = esp_profit(&demands, prices, params)?;
    let interior = demands
        .as_slice()
        .iter()
        .all(|&d| d > params.demand_min && d < params.demand_max);
    Ok(EquilibriumReport {
        demands,
        utilities,
        esp_profit,
        iterations,
        converged,
        uniqueness_condition_holds: condition.holds,
        interior,
        residual,
    })
}

/// Largest utility gain any single miner can obtain by deviating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub max_gain: f64,
    /// Gain scaled by `max(1, |u_i|)` of the deviating miner.
    pub max_relative_gain: f64,
    pub worst_miner: usize,
}

/// Deviation oracle: scans `grid_points` equally spaced demands over
/// `[demand_min, demand_max]` plus the clamped stationary point for each
/// miner, holding the others fixed.
pub fn verify_nash(
    x: &DemandProfile,
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
    grid_points: usize,
) -> Result<DeviationReport> {
    let n = x.len();
    check_len("profiles", n, profiles.len())?;
    check_len("prices", n, prices.len())?;
    let mut report = DeviationReport {
        max_gain: 0.0,
        max_relative_gain: 0.0,
        worst_miner: 0,
    };
    let coefficients = reward_coefficients(profiles, params);
    let mut trial = x.as_slice().to_vec();
    for i in 0..n {
        let base = miner_utility(x, prices, profiles, i, params)?;
        let others = x.total() - x.as_slice()[i];
        let stationary =
            params.clamp_demand(response_to(coefficients[i], prices.prices()[i], others));
        let span = params.demand_max - params.demand_min;
        let steps = grid_points.saturating_sub(1).max(1) as f64;
        let grid = (0..grid_points).map(|k| params.demand_min + span * k as f64 / steps);
        let mut best_gain = f64::NEG_INFINITY;
        for candidate in grid.chain(std::iter::once(stationary)) {
            trial[i] = candidate;
            let deviated = DemandProfile::new(trial.clone())?;
            let gain = miner_utility(&deviated, prices, profiles, i, params)? - base;
            best_gain = best_gain.max(gain);
        }
        trial[i] = x.as_slice()[i];
        let relative = best_gain / base.abs().max(1.0);
        if relative > report.max_relative_gain {
            report = DeviationReport {
                max_gain: best_gain,
                max_relative_gain: relative,
                worst_miner: i,
            };
        }
    }
    Ok(report)
}
