//! Stage I under a single unit price.
//!
//! Substituting the interior equilibrium, total demand is
//! `(N - 1) / (p * sum_j 1 / a_j)` and the provider's profit reduces to
//!
//! ```text
//! Pi(p) = (p - cT) / p * (N - 1) / sum_j (1 / a_j)
//! ```
//!
//! whose derivative `cT / p^2 * (N - 1) / sum_j (1 / a_j)` is positive, so
//! the optimum sits at the price cap.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{closed_form_uniform, solve_mdg, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{
    reward_coefficients, EquilibriumReport, MarketParams, MinerProfile, PriceSchedule,
};

/// Number of grid prices used to confirm the boundary optimum.
pub const GRID_POINTS: usize = 1000;

fn scale(profiles: &[MinerProfile], params: &MarketParams) -> Result<f64> {
    let n = profiles.len();
    if n < 2 {
        return Err(Error::TooFewMiners {
            required: 2,
            got: n,
        });
    }
    let inverse_sum: f64 = reward_coefficients(profiles, params)
        .iter()
        .map(|a| 1.0 / a)
        .sum();
    Ok((n as f64 - 1.0) / inverse_sum)
}

fn check_price(price: f64) -> Result<()> {
    if !(price.is_finite() && price > 0.0) {
        return Err(Error::PriceOutOfRange {
            index: 0,
            price,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(())
}

/// Provider profit at the interior equilibrium induced by price `p`.
pub fn reduced_profit_uniform(
    price: f64,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<f64> {
    check_price(price)?;
    Ok((price - params.unit_cost()) / price * scale(profiles, params)?)
}

pub fn profit_derivative_uniform(
    price: f64,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<f64> {
    check_price(price)?;
    Ok(params.unit_cost() / (price * price) * scale(profiles, params)?)
}

/// `-2 cT / p^3 * (N - 1) / sum_j (1 / a_j)`.
pub fn profit_second_derivative_uniform(
    price: f64,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<f64> {
    check_price(price)?;
    Ok(-2.0 * params.unit_cost() / (price * price * price) * scale(profiles, params)?)
}

/// How the reported profit was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfitPath {
    /// Closed-form equilibrium is interior; the reduced profit applies.
    ReducedForm,
    /// Some demand hits a bound; profit comes from the dynamics.
    Dynamics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformOptimum {
    pub price: f64,
    pub profit: f64,
    /// Reduced-form profit at `price`, reported even when it does not apply.
    pub reduced_profit: f64,
    pub path: ProfitPath,
    /// Best profit found on the price grid.
    pub grid_best_profit: f64,
    pub grid_best_price: f64,
    /// No grid price beats `price`.
    pub grid_check_passed: bool,
    pub equilibrium: EquilibriumReport,
}

/// Returns the price cap as the optimal uniform price along with its profit
/// and the induced Stage-II equilibrium, and confirms on a grid of
/// [`GRID_POINTS`] prices over `(0, price_cap]` that nothing does better.
pub fn optimize_uniform(
    profiles: &[MinerProfile],
    params: &MarketParams,
    solver: &SolverConfig,
) -> Result<UniformOptimum> {
    params.validate()?;
    let n = profiles.len();
    let cap = params.price_cap;
    let reduced_profit = reduced_profit_uniform(cap, profiles, params)?;
    let prices = PriceSchedule::uniform(cap, n)?;
    let equilibrium = solve_mdg(profiles, &prices, params, solver, None)?;
    let path = if closed_form_uniform(profiles, cap, params)?.interior {
        ProfitPath::ReducedForm
    } else {
        ProfitPath::Dynamics
    };

    let profit = match path {
        ProfitPath::ReducedForm => reduced_profit,
        ProfitPath::Dynamics => equilibrium.esp_profit,
    };

    // grid from the cap downwards; the dynamics path warm-starts each solve
    // from the equilibrium at the neighbouring grid price
    let mut grid_best_price = cap;
    let mut grid_best_profit = f64::NEG_INFINITY;
    let mut previous = equilibrium.demands.clone();
    for k in (1..=GRID_POINTS).rev() {
        let price = cap * k as f64 / GRID_POINTS as f64;
        let value = match path {
            ProfitPath::ReducedForm => reduced_profit_uniform(price, profiles, params)?,
            ProfitPath::Dynamics => {
                let prices = PriceSchedule::uniform(price, n)?;
                let eq = solve_mdg(profiles, &prices, params, solver, Some(&previous))?;
                previous = eq.demands;
                eq.esp_profit
            }
        };
        if value > grid_best_profit {
            grid_best_profit = value;
            grid_best_price = price;
        }
    }
    let grid_check_passed = grid_best_profit <= profit + 1e-12 * profit.abs().max(1.0);
    if path == ProfitPath::Dynamics {
        log::info!(
            "uniform equilibrium at the cap is not interior; dynamics profit {profit}, reduced form {reduced_profit}"
        );
    }

    Ok(UniformOptimum {
        price: cap,
        profit,
        reduced_profit,
        path,
        grid_best_profit,
        grid_best_price,
        grid_check_passed,
        equilibrium,
    })
}
