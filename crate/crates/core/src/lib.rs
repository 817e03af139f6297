//! Stackelberg pricing of edge computing services for proof-of-work mining.
//!
//! An edge service provider sells computing units to miners. Stage II is
//! the miners' demand game at given prices ([`solve_mdg`]); Stage I picks
//! the provider's prices, either one price for everyone
//! ([`optimize_uniform`]) or one per miner ([`optimize_discriminatory`]).
//! The [`experiments`] module runs randomized scenarios and sweeps.
//!
//! ```
//! use stackedge_core::{profiles_from_block_sizes, solve_mdg, MarketParams, PriceSchedule, SolverConfig};
//!
//! let params = MarketParams::default();
//! let miners = profiles_from_block_sizes(&[200.0, 200.0]).unwrap();
//! let prices = PriceSchedule::uniform(100.0, 2).unwrap();
//! let eq = solve_mdg(&miners, &prices, &params, &SolverConfig::default(), None).unwrap();
//! assert!(eq.converged);
//! ```

pub mod discriminatory;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod model;
pub mod race;
pub mod standard;
pub mod uniform;

pub use discriminatory::{
    cost_gradient, cost_hessian, optimize_discriminatory, profit_discriminatory, profit_gradient,
    profit_parts, regime_check, sample_concave_region, vi_monotonicity_probe,
    DiscriminatoryOptimum, DiscriminatoryOptions, MonotonicityProbe, ProfitParts, RegimeCheck,
    RegionSample,
};
pub use equilibrium::{
    best_response, check_uniqueness_discriminatory, check_uniqueness_uniform,
    closed_form_discriminatory, closed_form_uniform, cost_ratios, solve_mdg,
    unconstrained_best_response, verify_nash, ClosedForm, ConditionCheck, DeviationReport,
    SolverConfig,
};
pub use error::{Error, Result};
pub use experiments::{
    run_scenario, sample_profiles, sweep, ExperimentOptions, ScenarioReport, ScenarioSpec,
    SweepAxis, SweepResult,
};
pub use model::{
    esp_profit, miner_utility, orphan_probability, profiles_from_block_sizes, relative_power,
    reward_coefficient, reward_coefficients, utilities, win_probability, DemandProfile,
    EquilibriumReport, MarketParams, MinerProfile, PriceSchedule, PricingScheme,
};
pub use race::simulate_mining_race;
pub use standard::{probe_standard_function, StandardFunctionReport};
pub use uniform::{optimize_uniform, reduced_profit_uniform, UniformOptimum};
