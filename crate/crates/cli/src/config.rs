//! Flat `key = value` run configuration.
//!
//! Keys are dotted (`market.fixed_reward = 10000`), `#` starts a comment and
//! blank lines are ignored. Lists are comma separated. Every key is optional;
//! missing keys keep their defaults.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use stackedge_core::{
    profiles_from_block_sizes, sample_profiles, DiscriminatoryOptions, MarketParams, MinerProfile,
    PriceSchedule, PricingScheme, ScenarioSpec, SolverConfig, SweepAxis,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            field: field.into(),
            message: message.into(),
        }
    }

    fn at(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: Option<SweepAxis>,
    pub values: Vec<f64>,
    pub schemes: Vec<PricingScheme>,
    pub normalize: bool,
    /// Second parameter; one output file per value.
    pub series_axis: Option<SweepAxis>,
    pub series_values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: None,
            values: Vec::new(),
            schemes: vec![PricingScheme::Uniform, PricingScheme::Discriminatory],
            normalize: true,
            series_axis: None,
            series_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub grid_points: usize,
    pub mc_trials: u64,
    /// Below this many trials the race check is inconclusive.
    pub mc_min_trials: u64,
    pub states: usize,
    pub vi_samples: usize,
    /// Relative change applied to the first miner's equilibrium demand
    /// before the deviation check.
    pub perturb: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            grid_points: 1000,
            mc_trials: 1_000_000,
            mc_min_trials: 100_000,
            states: 1000,
            vi_samples: 200,
            perturb: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MinersConfig {
    pub block_sizes: Option<Vec<f64>>,
    /// One entry means the same price for every miner.
    pub prices: Option<Vec<f64>>,
    /// Text file with `block_size[,price]` per line.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub solver: SolverConfig,
    pub pricing: DiscriminatoryOptions,
    pub miners: MinersConfig,
    pub sweep: SweepConfig,
    pub verify: VerifyConfig,
    pub output: Option<PathBuf>,
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| ConfigError::at(line, key, format!("expected a number, got `{value}`")))
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| {
        ConfigError::at(
            line,
            key,
            format!("expected a non-negative integer, got `{value}`"),
        )
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| parse_f64(line, key, v.trim()))
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::at(
            line,
            key,
            format!("expected true or false, got `{value}`"),
        )),
    }
}

fn parse_axis(line: usize, key: &str, value: &str) -> Result<SweepAxis, ConfigError> {
    value
        .parse()
        .map_err(|e: stackedge_core::Error| ConfigError::at(line, key, e.to_string()))
}

fn parse_schemes(line: usize, key: &str, value: &str) -> Result<Vec<PricingScheme>, ConfigError> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|e: stackedge_core::Error| ConfigError::at(line, key, e.to_string()))
        })
        .collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, content, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(line, key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::field("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        RunConfig::parse(&text)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let f = |v: &str| parse_f64(line, key, v);
        let m = &mut self.scenario.market;
        match key {
            "market.fixed_reward" => m.fixed_reward = f(value)?,
            "market.variable_reward_factor" => m.variable_reward_factor = f(value)?,
            "market.poisson_rate" => m.poisson_rate = f(value)?,
            "market.delay_factor" => m.delay_factor = f(value)?,
            "market.electricity_cost" => m.electricity_cost = f(value)?,
            "market.mining_time" => m.mining_time = f(value)?,
            "market.demand_min" => m.demand_min = f(value)?,
            "market.demand_max" => m.demand_max = f(value)?,
            "market.price_cap" => m.price_cap = f(value)?,
            "scenario.n_miners" => self.scenario.n_miners = parse_int(line, key, value)?,
            "scenario.block_mean" => self.scenario.block_mean = f(value)?,
            "scenario.block_var" => self.scenario.block_var = f(value)?,
            "scenario.seed" => self.scenario.seed = parse_int(line, key, value)?,
            "scenario.replications" => self.scenario.replications = parse_int(line, key, value)?,
            "solver.tolerance" => self.solver.tolerance = f(value)?,
            "solver.max_iterations" => self.solver.max_iterations = parse_int(line, key, value)?,
            "solver.damping" => self.solver.damping = f(value)?,
            "pricing.min_price" => self.pricing.min_price = f(value)?,
            "pricing.tolerance" => self.pricing.tolerance = f(value)?,
            "pricing.max_steps" => self.pricing.max_steps = parse_int(line, key, value)?,
            "miners.block_sizes" => self.miners.block_sizes = Some(parse_list(line, key, value)?),
            "miners.prices" => self.miners.prices = Some(parse_list(line, key, value)?),
            "miners.file" => self.miners.file = Some(PathBuf::from(value)),
            "sweep.axis" => self.sweep.axis = Some(parse_axis(line, key, value)?),
            "sweep.values" => self.sweep.values = parse_list(line, key, value)?,
            "sweep.schemes" => self.sweep.schemes = parse_schemes(line, key, value)?,
            "sweep.normalize" => self.sweep.normalize = parse_bool(line, key, value)?,
            "sweep.series_axis" => self.sweep.series_axis = Some(parse_axis(line, key, value)?),
            "sweep.series_values" => self.sweep.series_values = parse_list(line, key, value)?,
            "verify.grid_points" => self.verify.grid_points = parse_int(line, key, value)?,
            "verify.mc_trials" => self.verify.mc_trials = parse_int(line, key, value)?,
            "verify.mc_min_trials" => self.verify.mc_min_trials = parse_int(line, key, value)?,
            "verify.states" => self.verify.states = parse_int(line, key, value)?,
            "verify.vi_samples" => self.verify.vi_samples = parse_int(line, key, value)?,
            "verify.perturb" => self.verify.perturb = f(value)?,
            "output.path" => self.output = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::at(line, key, "unknown key")),
        }
        Ok(())
    }

    /// Writes every field in the format accepted by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.scenario.market;
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        put("market.fixed_reward", m.fixed_reward.to_string());
        put(
            "market.variable_reward_factor",
            m.variable_reward_factor.to_string(),
        );
        put("market.poisson_rate", m.poisson_rate.to_string());
        put("market.delay_factor", m.delay_factor.to_string());
        put("market.electricity_cost", m.electricity_cost.to_string());
        put("market.mining_time", m.mining_time.to_string());
        put("market.demand_min", m.demand_min.to_string());
        put("market.demand_max", m.demand_max.to_string());
        put("market.price_cap", m.price_cap.to_string());
        put("scenario.n_miners", self.scenario.n_miners.to_string());
        put("scenario.block_mean", self.scenario.block_mean.to_string());
        put("scenario.block_var", self.scenario.block_var.to_string());
        put("scenario.seed", self.scenario.seed.to_string());
        put(
            "scenario.replications",
            self.scenario.replications.to_string(),
        );
        put("solver.tolerance", self.solver.tolerance.to_string());
        put(
            "solver.max_iterations",
            self.solver.max_iterations.to_string(),
        );
        put("solver.damping", self.solver.damping.to_string());
        put("pricing.min_price", self.pricing.min_price.to_string());
        put("pricing.tolerance", self.pricing.tolerance.to_string());
        put("pricing.max_steps", self.pricing.max_steps.to_string());
        if let Some(sizes) = &self.miners.block_sizes {
            put("miners.block_sizes", join(sizes));
        }
        if let Some(prices) = &self.miners.prices {
            put("miners.prices", join(prices));
        }
        if let Some(file) = &self.miners.file {
            put("miners.file", file.display().to_string());
        }
        if let Some(axis) = self.sweep.axis {
            put("sweep.axis", axis.to_string());
        }
        put("sweep.values", join(&self.sweep.values));
        let schemes: Vec<String> = self.sweep.schemes.iter().map(|s| s.to_string()).collect();
        put("sweep.schemes", schemes.join(", "));
        put("sweep.normalize", self.sweep.normalize.to_string());
        if let Some(axis) = self.sweep.series_axis {
            put("sweep.series_axis", axis.to_string());
        }
        put("sweep.series_values", join(&self.sweep.series_values));
        put("verify.grid_points", self.verify.grid_points.to_string());
        put("verify.mc_trials", self.verify.mc_trials.to_string());
        put(
            "verify.mc_min_trials",
            self.verify.mc_min_trials.to_string(),
        );
        put("verify.states", self.verify.states.to_string());
        put("verify.vi_samples", self.verify.vi_samples.to_string());
        put("verify.perturb", self.verify.perturb.to_string());
        if let Some(path) = &self.output {
            put("output.path", path.display().to_string());
        }
        out
    }

    /// Checks every numeric field against the invariants of its target.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let core = |e: stackedge_core::Error| match &e {
            stackedge_core::Error::InvalidParameter { name, reason } => {
                ConfigError::field(*name, reason.clone())
            }
            _ => ConfigError::field("config", e.to_string()),
        };
        self.scenario.validate().map_err(core)?;
        self.solver.validate().map_err(core)?;
        self.pricing.validate(&self.scenario.market).map_err(core)?;
        if self.sweep.schemes.is_empty() {
            return Err(ConfigError::field(
                "sweep.schemes",
                "must name at least one scheme",
            ));
        }
        if self.verify.grid_points < 2 {
            return Err(ConfigError::field(
                "verify.grid_points",
                "must be at least 2",
            ));
        }
        if !self.verify.perturb.is_finite() || self.verify.perturb <= -1.0 {
            return Err(ConfigError::field(
                "verify.perturb",
                "must be finite and above -1",
            ));
        }
        Ok(())
    }

    /// Block sizes and optional prices from the file or inline keys.
    fn explicit_miners(&self) -> Result<Option<(Vec<f64>, Option<Vec<f64>>)>, ConfigError> {
        if let Some(path) = &self.miners.file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::field(
                    "miners.file",
                    format!("cannot read {}: {e}", path.display()),
                )
            })?;
            let mut sizes = Vec::new();
            let mut prices = Vec::new();
            for (index, raw) in text.lines().enumerate() {
                let content = raw.split('#').next().unwrap_or("").trim();
                if content.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = content.split(',').map(str::trim).collect();
                let number = |v: &str| {
                    v.parse::<f64>().map_err(|_| {
                        ConfigError::at(
                            index + 1,
                            "miners.file",
                            format!("expected a number, got `{v}`"),
                        )
                    })
                };
                match fields.as_slice() {
                    [t] => sizes.push(number(t)?),
                    [t, p] => {
                        sizes.push(number(t)?);
                        prices.push(number(p)?);
                    }
                    _ => {
                        return Err(ConfigError::at(
                            index + 1,
                            "miners.file",
                            "expected `block_size[, price]`",
                        ));
                    }
                }
            }
            if !prices.is_empty() && prices.len() != sizes.len() {
                return Err(ConfigError::field(
                    "miners.file",
                    "either every line or no line must carry a price",
                ));
            }
            let prices = if prices.is_empty() {
                self.miners.prices.clone()
            } else {
                Some(prices)
            };
            return Ok(Some((sizes, prices)));
        }
        Ok(self
            .miners
            .block_sizes
            .clone()
            .map(|s| (s, self.miners.prices.clone())))
    }

    /// Miner profiles from the explicit list, or sampled from the scenario.
    pub fn profiles(&self) -> Result<Vec<MinerProfile>, ConfigError> {
        match self.explicit_miners()? {
            Some((sizes, _)) => {
                if sizes.is_empty() {
                    return Err(ConfigError::field(
                        "miners.block_sizes",
                        "must list at least one miner",
                    ));
                }
                if let Some((i, t)) = sizes
                    .iter()
                    .enumerate()
                    .find(|(_, t)| !(t.is_finite() && **t >= 0.0))
                {
                    return Err(ConfigError::field(
                        "miners.block_sizes",
                        format!(
                            "block size of miner {} is {t}, must be finite and non-negative",
                            i + 1
                        ),
                    ));
                }
                profiles_from_block_sizes(&sizes)
                    .map_err(|e| ConfigError::field("miners.block_sizes", e.to_string()))
            }
            None => sample_profiles(&self.scenario)
                .map_err(|e| ConfigError::field("scenario", e.to_string())),
        }
    }

    /// The configured price schedule for `n` miners, if any.
    pub fn prices(&self, n: usize) -> Result<Option<PriceSchedule>, ConfigError> {
        let prices = match self.explicit_miners()? {
            Some((_, prices)) => prices,
            None => self.miners.prices.clone(),
        };
        let Some(prices) = prices else {
            return Ok(None);
        };
        let cap = self.scenario.market.price_cap;
        for (i, &p) in prices.iter().enumerate() {
            if !(p.is_finite() && p > 0.0 && p <= cap) {
                return Err(ConfigError::field(
                    "miners.prices",
                    format!("price of miner {} is {p}, must lie in (0, {cap}]", i + 1),
                ));
            }
        }
        let schedule = match prices.as_slice() {
            [] => return Err(ConfigError::field("miners.prices", "must not be empty")),
            [single] => PriceSchedule::uniform(*single, n),
            _ if prices.len() != n => {
                return Err(ConfigError::field(
                    "miners.prices",
                    format!("has {} entries for {n} miners", prices.len()),
                ))
            }
            _ => PriceSchedule::discriminatory(prices),
        };
        schedule
            .map(Some)
            .map_err(|e| ConfigError::field("miners.prices", e.to_string()))
    }

    pub fn market(&self) -> &MarketParams {
        &self.scenario.market
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nmarket.fixed_reward = 5000 # inline\n  scenario.n_miners=7\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.scenario.market.fixed_reward, 5000.0);
        assert_eq!(cfg.scenario.n_miners, 7);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = RunConfig::parse("\nmarket.price_cap = abc\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert_eq!(err.field, "market.price_cap");
        let err = RunConfig::parse("market.nope = 1").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        let err = RunConfig::parse("just text").unwrap_err();
        assert!(err.to_string().contains("key = value"));
    }

    #[test]
    fn negative_price_rejected() {
        let cfg =
            RunConfig::parse("miners.block_sizes = 200, 200\nminers.prices = -5, 10").unwrap();
        let err = cfg.prices(2).unwrap_err();
        assert_eq!(err.field, "miners.prices");
    }

    #[test]
    fn single_price_is_uniform() {
        let cfg =
            RunConfig::parse("miners.block_sizes = 200, 210, 220\nminers.prices = 50").unwrap();
        let p = cfg.prices(3).unwrap().unwrap();
        assert_eq!(p.prices(), &[50.0, 50.0, 50.0]);
        assert_eq!(p.scheme(), PricingScheme::Uniform);
    }
}
