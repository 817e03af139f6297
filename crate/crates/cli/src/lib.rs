//! Command-line front end: argument parsing, commands and exit codes.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver did not converge,
//! 3 a verification check failed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stackedge_core::experiments::{format_g12, write_csv};
use stackedge_core::uniform::ProfitPath;
use stackedge_core::{
    optimize_discriminatory, optimize_uniform, regime_check, solve_mdg, sweep, EquilibriumReport,
    ExperimentOptions, PricingScheme, RegimeCheck, SweepAxis,
};

pub mod config;
pub mod verify;

pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "stackedge",
    version,
    about = "Edge computing pricing for blockchain mining"
)]
pub struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `scenario.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (JSON for solve-mdg/optimize, CSV for sweep).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides `scenario.replications`.
    #[arg(long, global = true)]
    pub replications: Option<usize>,
    /// Debug logging on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Uniform,
    Discriminatory,
}

impl From<SchemeArg> for PricingScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Uniform => PricingScheme::Uniform,
            SchemeArg::Discriminatory => PricingScheme::Discriminatory,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Miners' equilibrium demands at the configured prices.
    SolveMdg,
    /// Provider's optimal prices under one scheme.
    Optimize {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
    },
    /// Parameter sweep written as CSV.
    Sweep {
        /// n_miners, variable_reward_factor (r), fixed_reward (R), block_mean (mu_t) or block_var (sigma2).
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_enum)]
        schemes: Option<Vec<SchemeArg>>,
        /// Second parameter; writes one file per value.
        #[arg(long)]
        series_axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        series_values: Option<Vec<f64>>,
        /// Keep raw demand and profit columns.
        #[arg(long)]
        no_normalize: bool,
    },
    /// Runs the invariant checks on the configured scenario.
    Verify {
        /// Relative change applied to one equilibrium demand before the deviation check.
        #[arg(long)]
        perturb: Option<f64>,
        /// Monte Carlo trials for the race check.
        #[arg(long)]
        trials: Option<u64>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    NotConverged(String),
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            CliError::VerifyFailed(_) => EXIT_VERIFY_FAILED,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::NotConverged(m) | CliError::VerifyFailed(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<stackedge_core::Error> for CliError {
    fn from(e: stackedge_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

/// Loads the config file and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(r) = cli.replications {
        cfg.scenario.replications = r;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    match &cli.command {
        Command::Sweep {
            axis,
            values,
            schemes,
            series_axis,
            series_values,
            no_normalize,
        } => {
            let parse_axis = |name: &str, flag: &str| {
                name.parse::<SweepAxis>()
                    .map_err(|e| CliError::Invalid(format!("{flag}: {e}")))
            };
            if let Some(axis) = axis {
                cfg.sweep.axis = Some(parse_axis(axis, "--axis")?);
            }
            if let Some(values) = values {
                cfg.sweep.values = values.clone();
            }
            if let Some(schemes) = schemes {
                cfg.sweep.schemes = schemes.iter().map(|&s| s.into()).collect();
            }
            if let Some(axis) = series_axis {
                cfg.sweep.series_axis = Some(parse_axis(axis, "--series-axis")?);
            }
            if let Some(values) = series_values {
                cfg.sweep.series_values = values.clone();
            }
            if *no_normalize {
                cfg.sweep.normalize = false;
            }
        }
        Command::Verify { perturb, trials } => {
            if let Some(p) = perturb {
                cfg.verify.perturb = *p;
            }
            if let Some(t) = trials {
                cfg.verify.mc_trials = *t;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Sets the global thread pool size from `STACKEDGE_THREADS` (0 or unset: automatic).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("STACKEDGE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        CliError::Invalid(format!(
            "STACKEDGE_THREADS: expected a non-negative integer, got `{raw}`"
        ))
    })?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("STACKEDGE_THREADS: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::SolveMdg => cmd_solve_mdg(&cfg),
        Command::Optimize { scheme } => cmd_optimize(&cfg, (*scheme).into()),
        Command::Sweep { .. } => cmd_sweep(&cfg),
        Command::Verify { .. } => verify::cmd_verify(&cfg),
    }
}

/// Writes one line to stdout; a closed pipe is not an error.
pub(crate) fn print_line(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    print_line(&text);
    if let Some(path) = out {
        std::fs::write(path, format!("{text}\n"))
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn cmd_solve_mdg(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.miners.block_sizes.is_none() && cfg.miners.file.is_none() {
        return Err(CliError::Invalid(
            "miners.block_sizes: solve-mdg needs explicit miners (miners.block_sizes or miners.file)".into(),
        ));
    }
    let profiles = cfg.profiles()?;
    let prices = cfg.prices(profiles.len())?.ok_or_else(|| {
        CliError::Invalid("miners.prices: solve-mdg needs explicit prices".into())
    })?;
    let report = solve_mdg(&profiles, &prices, cfg.market(), &cfg.solver, None)?;
    emit_json(&report, cfg.output.as_deref())?;
    if !report.converged {
        return Err(CliError::NotConverged(format!(
            "best-response dynamics did not converge in {} iterations (residual {:e})",
            report.iterations, report.residual
        )));
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(untagged)]
enum OptimizeDetails {
    Uniform {
        profit_path: ProfitPath,
        reduced_profit: f64,
        grid_best_price: f64,
        grid_best_profit: f64,
        grid_check_passed: bool,
    },
    Discriminatory {
        converged: bool,
        steps: usize,
        projected_gradient_norm: f64,
        at_cap: usize,
    },
}

#[derive(Serialize)]
struct OptimizeOutput {
    scheme: PricingScheme,
    prices: Vec<f64>,
    profit: f64,
    equilibrium: EquilibriumReport,
    regime: RegimeCheck,
    details: OptimizeDetails,
}

pub fn cmd_optimize(cfg: &RunConfig, scheme: PricingScheme) -> Result<(), CliError> {
    let profiles = cfg.profiles()?;
    let params = cfg.market();
    let output = match scheme {
        PricingScheme::Uniform => {
            let opt = optimize_uniform(&profiles, params, &cfg.solver)?;
            let prices = stackedge_core::PriceSchedule::uniform(opt.price, profiles.len())?;
            OptimizeOutput {
                scheme,
                regime: regime_check(&prices, &profiles, params)?,
                prices: prices.prices().to_vec(),
                profit: opt.profit,
                equilibrium: opt.equilibrium,
                details: OptimizeDetails::Uniform {
                    profit_path: opt.path,
                    reduced_profit: opt.reduced_profit,
                    grid_best_price: opt.grid_best_price,
                    grid_best_profit: opt.grid_best_profit,
                    grid_check_passed: opt.grid_check_passed,
                },
            }
        }
        PricingScheme::Discriminatory => {
            let opts = stackedge_core::DiscriminatoryOptions {
                verbose: log::log_enabled!(log::Level::Info),
                ..cfg.pricing
            };
            let opt = optimize_discriminatory(&profiles, params, &opts, &cfg.solver)?;
            OptimizeOutput {
                scheme,
                prices: opt.prices.prices().to_vec(),
                profit: opt.profit,
                equilibrium: opt.equilibrium,
                regime: opt.regime,
                details: OptimizeDetails::Discriminatory {
                    converged: opt.converged,
                    steps: opt.steps,
                    projected_gradient_norm: opt.projected_gradient_norm,
                    at_cap: opt.at_cap,
                },
            }
        }
    };
    emit_json(&output, cfg.output.as_deref())?;
    if let OptimizeDetails::Discriminatory {
        converged: false,
        steps,
        projected_gradient_norm,
        ..
    } = output.details
    {
        return Err(CliError::NotConverged(format!(
            "projected gradient ascent stopped after {steps} steps at {projected_gradient_norm:e}"
        )));
    }
    if !output.equilibrium.converged {
        return Err(CliError::NotConverged(format!(
            "demand game did not converge in {} iterations",
            output.equilibrium.iterations
        )));
    }
    Ok(())
}

/// `dir/stem-axis-value.ext` for one member of a series.
fn series_path(base: &Path, axis: SweepAxis, value: f64) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let name = match base.extension() {
        Some(ext) => format!(
            "{stem}-{axis}-{}.{}",
            format_g12(value),
            ext.to_string_lossy()
        ),
        None => format!("{stem}-{axis}-{}", format_g12(value)),
    };
    base.with_file_name(name)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let axis = cfg.sweep.axis.ok_or_else(|| {
        CliError::Invalid("sweep.axis: missing (use --axis or sweep.axis)".into())
    })?;
    if cfg.sweep.values.is_empty() {
        return Err(CliError::Invalid(
            "sweep.values: missing (use --values or sweep.values)".into(),
        ));
    }
    let base = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("sweep-{axis}.csv")));
    let opts = ExperimentOptions {
        solver: cfg.solver,
        pricing: cfg.pricing,
    };

    let runs: Vec<(PathBuf, stackedge_core::ScenarioSpec)> = match cfg.sweep.series_axis {
        Some(series) => {
            if cfg.sweep.series_values.is_empty() {
                return Err(CliError::Invalid(
                    "sweep.series_values: missing for the series axis".into(),
                ));
            }
            cfg.sweep
                .series_values
                .iter()
                .map(|&v| {
                    Ok((
                        series_path(&base, series, v),
                        series.apply(&cfg.scenario, v)?,
                    ))
                })
                .collect::<Result<_, CliError>>()?
        }
        None => vec![(base, cfg.scenario)],
    };

    for (path, spec) in runs {
        let rows = sweep(
            &spec,
            &cfg.sweep.schemes,
            axis,
            &cfg.sweep.values,
            &opts,
            cfg.sweep.normalize,
        )?;
        let failures: usize = rows.iter().map(|r| r.failures).sum();
        if failures > 0 {
            log::warn!("{failures} replications failed; see the replications column");
            eprintln!("warning: {failures} replications failed and were left out of the means");
        }
        let file = File::create(&path)
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
        let mut writer = BufWriter::new(file);
        write_csv(&mut writer, &rows)
            .and_then(|_| writer.flush())
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))?;
        print_line(&path.display().to_string());
    }
    Ok(())
}
