//! Random scenarios and one-dimensional parameter sweeps.
//!
//! Block sizes are drawn from a normal distribution truncated below at 1 by
//! redrawing. Replication `k` of a scenario uses seed `seed + k`, so every
//! point of a sweep sees the same random stream (common random numbers) and
//! the output does not depend on thread scheduling.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminatory::{optimize_discriminatory, DiscriminatoryOptions};
use crate::equilibrium::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{profiles_from_block_sizes, MarketParams, MinerProfile, PricingScheme};
use crate::uniform::optimize_uniform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_miners: usize,
    /// Mean block size `mu_t`.
    pub block_mean: f64,
    /// Block size variance `sigma^2`.
    pub block_var: f64,
    pub market: MarketParams,
    pub seed: u64,
    pub replications: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            n_miners: 100,
            block_mean: 200.0,
            block_var: 5.0,
            market: MarketParams::default(),
            seed: 0,
            replications: 20,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_miners == 0 {
            return Err(Error::invalid("scenario.n_miners", "must be at least 1"));
        }
        if !(self.block_mean.is_finite() && self.block_mean >= 1.0) {
            return Err(Error::invalid(
                "scenario.block_mean",
                format!("must be at least 1, got {}", self.block_mean),
            ));
        }
        if !(self.block_var.is_finite() && self.block_var >= 0.0) {
            return Err(Error::invalid(
                "scenario.block_var",
                format!("must be non-negative, got {}", self.block_var),
            ));
        }
        if self.replications == 0 {
            return Err(Error::invalid(
                "scenario.replications",
                "must be at least 1",
            ));
        }
        self.market.validate()
    }
}

/// Draws `n_miners` block sizes for `spec.seed`.
pub fn sample_profiles(spec: &ScenarioSpec) -> Result<Vec<MinerProfile>> {
    spec.validate()?;
    let sizes = if spec.block_var == 0.0 {
        vec![spec.block_mean; spec.n_miners]
    } else {
        let normal = Normal::new(spec.block_mean, spec.block_var.sqrt())
            .map_err(|e| Error::invalid("scenario.block_var", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        (0..spec.n_miners)
            .map(|_| loop {
                let t = normal.sample(&mut rng);
                if t >= 1.0 {
                    break t;
                }
            })
            .collect()
    };
    profiles_from_block_sizes(&sizes)
}

/// Solver settings shared by every replication.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub solver: SolverConfig,
    pub pricing: DiscriminatoryOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub prices: Vec<f64>,
    pub mean_price: f64,
    pub profit: f64,
    pub total_demand: f64,
    pub demands: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub replication: usize,
    pub seed: u64,
    /// Solver failures and non-convergence are kept as messages.
    pub result: std::result::Result<ReplicationRecord, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Successful replications entering the statistics.
    pub replications: usize,
    pub failures: usize,
    pub mean_total_demand: f64,
    pub sd_total_demand: f64,
    pub mean_profit: f64,
    pub sd_profit: f64,
    pub mean_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scheme: PricingScheme,
    pub outcomes: Vec<ReplicationOutcome>,
    pub summary: Summary,
}

fn replicate(
    spec: &ScenarioSpec,
    scheme: PricingScheme,
    opts: &ExperimentOptions,
) -> Result<ReplicationRecord> {
    let profiles = sample_profiles(spec)?;
    let (prices, equilibrium) = match scheme {
        PricingScheme::Uniform => {
            let opt = optimize_uniform(&profiles, &spec.market, &opts.solver)?;
            (vec![opt.price; profiles.len()], opt.equilibrium)
        }
        PricingScheme::Discriminatory => {
            let opt =
                optimize_discriminatory(&profiles, &spec.market, &opts.pricing, &opts.solver)?;
            if !opt.converged {
                return Err(Error::invalid(
                    "pricing",
                    format!(
                        "no convergence after {} steps (projected gradient {:e})",
                        opt.steps, opt.projected_gradient_norm
                    ),
                ));
            }
            (opt.prices.prices().to_vec(), opt.equilibrium)
        }
    };
    if !equilibrium.converged {
        return Err(Error::invalid(
            "solver",
            format!(
                "demand game did not converge in {} iterations (residual {:e})",
                equilibrium.iterations, equilibrium.residual
            ),
        ));
    }
    Ok(ReplicationRecord {
        mean_price: prices.iter().sum::<f64>() / prices.len() as f64,
        prices,
        profit: equilibrium.esp_profit,
        total_demand: equilibrium.demands.total(),
        demands: equilibrium.demands.into_inner(),
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(outcomes: &[ReplicationOutcome]) -> Summary {
    let ok: Vec<&ReplicationRecord> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .collect();
    let column = |f: fn(&ReplicationRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
    let (mean_total_demand, sd_total_demand) = mean_sd(&column(|r| r.total_demand));
    let (mean_profit, sd_profit) = mean_sd(&column(|r| r.profit));
    let (mean_price, _) = mean_sd(&column(|r| r.mean_price));
    Summary {
        replications: ok.len(),
        failures: outcomes.len() - ok.len(),
        mean_total_demand,
        sd_total_demand,
        mean_profit,
        sd_profit,
        mean_price,
    }
}

/// Runs every replication of `spec` under `scheme`. Only an invalid spec is
/// an error; failures inside a replication are recorded in its outcome.
pub fn run_scenario(
    spec: &ScenarioSpec,
    scheme: PricingScheme,
    opts: &ExperimentOptions,
) -> Result<ScenarioReport> {
    spec.validate()?;
    let outcomes: Vec<ReplicationOutcome> = (0..spec.replications)
        .into_par_iter()
        .map(|k| {
            let seed = spec.seed.wrapping_add(k as u64);
            let single = ScenarioSpec { seed, ..*spec };
            let result = replicate(&single, scheme, opts).map_err(|e| e.to_string());
            if let Err(message) = &result {
                log::warn!("{scheme} replication {k} (seed {seed}) failed: {message}");
            }
            ReplicationOutcome {
                replication: k,
                seed,
                result,
            }
        })
        .collect();
    Ok(ScenarioReport {
        scheme,
        summary: summarize(&outcomes),
        outcomes,
    })
}

/// Scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NMiners,
    VariableRewardFactor,
    FixedReward,
    BlockMean,
    BlockVar,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::NMiners,
        SweepAxis::VariableRewardFactor,
        SweepAxis::FixedReward,
        SweepAxis::BlockMean,
        SweepAxis::BlockVar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NMiners => "n_miners",
            SweepAxis::VariableRewardFactor => "variable_reward_factor",
            SweepAxis::FixedReward => "fixed_reward",
            SweepAxis::BlockMean => "block_mean",
            SweepAxis::BlockVar => "block_var",
        }
    }

    /// Copy of `spec` with this parameter set to `value`.
    pub fn apply(self, spec: &ScenarioSpec, value: f64) -> Result<ScenarioSpec> {
        let mut out = *spec;
        match self {
            SweepAxis::NMiners => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64) {
                    return Err(Error::invalid(
                        "sweep.values",
                        format!("n_miners must be a positive integer, got {value}"),
                    ));
                }
                out.n_miners = value as usize;
            }
            SweepAxis::VariableRewardFactor => out.market.variable_reward_factor = value,
            SweepAxis::FixedReward => out.market.fixed_reward = value,
            SweepAxis::BlockMean => out.block_mean = value,
            SweepAxis::BlockVar => out.block_var = value,
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    /// Accepts the long names and the short symbols `N`/`n`, `r`, `R`,
    /// `mu_t` and `sigma2`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "n_miners" | "n" | "N" => SweepAxis::NMiners,
            "variable_reward_factor" | "r" => SweepAxis::VariableRewardFactor,
            "fixed_reward" | "R" => SweepAxis::FixedReward,
            "block_mean" | "mu_t" => SweepAxis::BlockMean,
            "block_var" | "sigma2" => SweepAxis::BlockVar,
            other => {
                return Err(Error::invalid(
                    "sweep.axis",
                    format!(
                        "unknown axis {other:?}; expected one of n_miners, variable_reward_factor, fixed_reward, block_mean, block_var"
                    ),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub scheme: PricingScheme,
    pub value: f64,
    pub mean_total_demand: f64,
    pub sd_total_demand: f64,
    pub mean_profit: f64,
    pub sd_profit: f64,
    /// Never normalized.
    pub mean_price: f64,
    pub replications: usize,
    pub failures: usize,
}

/// Runs `run_scenario` for every value and scheme. Rows come out value-major
/// in the order given. With `normalize`, demand and profit columns (means and
/// standard deviations) are divided by the largest mean in the whole table.
pub fn sweep(
    spec: &ScenarioSpec,
    schemes: &[PricingScheme],
    axis: SweepAxis,
    values: &[f64],
    opts: &ExperimentOptions,
    normalize: bool,
) -> Result<Vec<SweepResult>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep.values", "must not be empty"));
    }
    if schemes.is_empty() {
        return Err(Error::invalid("sweep.schemes", "must not be empty"));
    }
    let cells: Vec<(f64, PricingScheme, ScenarioSpec)> = values
        .iter()
        .flat_map(|&v| schemes.iter().map(move |&s| (v, s)))
        .map(|(v, s)| Ok((v, s, axis.apply(spec, v)?)))
        .collect::<Result<_>>()?;
    let mut rows: Vec<SweepResult> = cells
        .par_iter()
        .map(|(value, scheme, cell)| {
            let report = run_scenario(cell, *scheme, opts)?;
            let s = report.summary;
            Ok(SweepResult {
                axis,
                scheme: *scheme,
                value: *value,
                mean_total_demand: s.mean_total_demand,
                sd_total_demand: s.sd_total_demand,
                mean_profit: s.mean_profit,
                sd_profit: s.sd_profit,
                mean_price: s.mean_price,
                replications: s.replications,
                failures: s.failures,
            })
        })
        .collect::<Result<_>>()?;
    if normalize {
        normalize_rows(&mut rows);
    }
    Ok(rows)
}

/// Divides demand and profit columns by their largest mean across `rows`.
pub fn normalize_rows(rows: &mut [SweepResult]) {
    let top = |f: fn(&SweepResult) -> f64| {
        rows.iter()
            .map(f)
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let demand = top(|r| r.mean_total_demand);
    let profit = top(|r| r.mean_profit);
    for row in rows.iter_mut() {
        if demand.is_finite() && demand != 0.0 {
            row.mean_total_demand /= demand;
            row.sd_total_demand /= demand;
        }
        if profit.is_finite() && profit != 0.0 {
            row.mean_profit /= profit;
            row.sd_profit /= profit.abs();
        }
    }
}

pub const CSV_HEADER: &str =
    "axis,scheme,value,mean_total_demand,sd_total_demand,mean_profit,sd_profit,mean_price,replications";

/// Formats like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_fraction(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(mut out: W, rows: &[SweepResult]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.axis,
            r.scheme,
            format_g12(r.value),
            format_g12(r.mean_total_demand),
            format_g12(r.sd_total_demand),
            format_g12(r.mean_profit),
            format_g12(r.sd_profit),
            format_g12(r.mean_price),
            r.replications
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_gives_mean() {
        let spec = ScenarioSpec {
            n_miners: 7,
            block_var: 0.0,
            block_mean: 123.5,
            ..ScenarioSpec::default()
        };
        let profiles = sample_profiles(&spec).unwrap();
        assert!(profiles.iter().all(|m| m.block_size == 123.5));
        assert_eq!(profiles.last().unwrap().id, 7);
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let spec = ScenarioSpec {
            n_miners: 10_000,
            seed: 42,
            ..ScenarioSpec::default()
        };
        let profiles = sample_profiles(&spec).unwrap();
        let mean = profiles.iter().map(|m| m.block_size).sum::<f64>() / 1e4;
        assert!((mean - 200.0).abs() < 3.0 * (5.0f64 / 1e4).sqrt(), "{mean}");
        assert_eq!(profiles, sample_profiles(&spec).unwrap());
    }

    #[test]
    fn truncation_keeps_sizes_at_least_one() {
        let spec = ScenarioSpec {
            n_miners: 500,
            block_mean: 1.5,
            block_var: 4.0,
            ..ScenarioSpec::default()
        };
        assert!(sample_profiles(&spec)
            .unwrap()
            .iter()
            .all(|m| m.block_size >= 1.0));
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = ScenarioSpec::default();
        for bad in [
            ScenarioSpec {
                block_var: -1.0,
                ..base
            },
            ScenarioSpec {
                n_miners: 0,
                ..base
            },
            ScenarioSpec {
                replications: 0,
                ..base
            },
            ScenarioSpec {
                block_mean: 0.5,
                ..base
            },
        ] {
            assert!(sample_profiles(&bad).is_err());
        }
    }

    #[test]
    fn single_miner_failures_are_recorded() {
        let spec = ScenarioSpec {
            n_miners: 1,
            replications: 3,
            ..ScenarioSpec::default()
        };
        let report =
            run_scenario(&spec, PricingScheme::Uniform, &ExperimentOptions::default()).unwrap();
        assert_eq!(report.summary.failures, 3);
        assert_eq!(report.summary.replications, 0);
        assert!(report.outcomes.iter().all(|o| o.result.is_err()));
    }

    #[test]
    fn uniform_scenario_prices_at_cap() {
        let spec = ScenarioSpec {
            n_miners: 20,
            replications: 4,
            seed: 9,
            ..ScenarioSpec::default()
        };
        let report =
            run_scenario(&spec, PricingScheme::Uniform, &ExperimentOptions::default()).unwrap();
        assert_eq!(report.summary.replications, 4);
        for o in &report.outcomes {
            let r = o.result.as_ref().unwrap();
            assert!(r.prices.iter().all(|&p| p == 100.0));
        }
        assert_eq!(report.outcomes[2].seed, 11);
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in SweepAxis::ALL {
            assert_eq!(axis.name().parse::<SweepAxis>().unwrap(), axis);
        }
        assert_eq!("R".parse::<SweepAxis>().unwrap(), SweepAxis::FixedReward);
        assert_eq!(
            "r".parse::<SweepAxis>().unwrap(),
            SweepAxis::VariableRewardFactor
        );
        assert!("q".parse::<SweepAxis>().is_err());
        let spec = ScenarioSpec::default();
        assert!(SweepAxis::NMiners.apply(&spec, 2.5).is_err());
        assert_eq!(SweepAxis::NMiners.apply(&spec, 40.0).unwrap().n_miners, 40);
    }

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (1.0, "1"),
            (100.0, "100"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0 * 1e5, "66666.6666667"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (0.0, "0"),
            (999999999999.5, "1e+12"),
        ];
        for (x, expected) in cases {
            assert_eq!(format_g12(x), expected, "{x}");
        }
    }

    #[test]
    fn csv_layout() {
        let spec = ScenarioSpec {
            n_miners: 5,
            replications: 2,
            ..ScenarioSpec::default()
        };
        let rows = sweep(
            &spec,
            &[PricingScheme::Uniform, PricingScheme::Discriminatory],
            SweepAxis::NMiners,
            &[3.0, 5.0],
            &ExperimentOptions::default(),
            true,
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        let top = rows.iter().map(|r| r.mean_profit).fold(0.0, f64::max);
        assert_eq!(top, 1.0);
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("n_miners,uniform,3,"));
        assert!(lines[2].starts_with("n_miners,discriminatory,3,"));
        assert!(lines[4].ends_with(",2"));
    }
}
