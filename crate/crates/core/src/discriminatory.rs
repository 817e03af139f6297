//! Stage I with one price per miner.
//!
//! Everything here is expressed through the ratios `w_i = p_i / a_i`. With
//! `S = sum_j w_j` and `K = (N - 1) / S` the induced interior demands are
//! `x_i = K (1 - K w_i)` and the provider's profit is
//!
//! ```text
//! Pi(p) = sum_i (p_i - cT) x_i = g(p) + f(p)
//! g(p)  = sum_i p_i x_i          (revenue)
//! f(p)  = -cT sum_i x_i = -cT K  (serving cost)
//! ```
//!
//! The revenue is invariant under a common rescaling of all prices while the
//! cost term falls, so the optimizer is pushed against the price cap and only
//! the relative prices are interior. Optimization is projected gradient
//! ascent over the box `[min_price, price_cap]^N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{closed_form_from_ratios, cost_ratios, solve_mdg, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{
    reward_coefficients, EquilibriumReport, MarketParams, MinerProfile, PriceSchedule,
};

/// Revenue and cost components of the provider's profit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitParts {
    pub revenue: f64,
    /// `-cT` times the total induced demand (non-positive).
    pub cost: f64,
    pub total: f64,
}

struct Induced {
    coefficients: Vec<f64>,
    ratios: Vec<f64>,
    total: f64,
    demands: Vec<f64>,
}

fn induced(
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<Induced> {
    let n = profiles.len();
    if n < 2 {
        return Err(Error::TooFewMiners {
            required: 2,
            got: n,
        });
    }
    let ratios = cost_ratios(profiles, prices, params)?;
    let (total, demands) = closed_form_from_ratios(&ratios);
    Ok(Induced {
        coefficients: reward_coefficients(profiles, params),
        ratios,
        total,
        demands,
    })
}

/// Provider profit at the interior equilibrium induced by `prices`.
pub fn profit_discriminatory(
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<f64> {
    Ok(profit_parts(prices, profiles, params)?.total)
}

pub fn profit_parts(
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<ProfitParts> {
    let state = induced(prices, profiles, params)?;
    let unit_cost = params.unit_cost();
    let mut revenue = 0.0;
    let mut cost = 0.0;
    let mut total = 0.0;
    for (p, x) in prices.prices().iter().zip(&state.demands) {
        revenue += p * x;
        cost -= unit_cost * x;
        total += (p - unit_cost) * x;
    }
    Ok(ProfitParts {
        revenue,
        cost,
        total,
    })
}

/// Analytic gradient of [`profit_discriminatory`].
pub fn profit_gradient(
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<Vec<f64>> {
    let state = induced(prices, profiles, params)?;
    let unit_cost = params.unit_cost();
    let n = profiles.len() as f64;
    let k = state.total;
    let p = prices.prices();
    // d x_j / d p_i = dK_i (1 - 2 K w_j) - [i == j] K^2 / a_i, dK_i = -K^2 / ((N - 1) a_i)
    let spread: f64 = p
        .iter()
        .zip(&state.ratios)
        .map(|(pj, wj)| (pj - unit_cost) * (1.0 - 2.0 * k * wj))
        .sum();
    Ok((0..p.len())
        .map(|i| {
            let a = state.coefficients[i];
            let d_total = -k * k / ((n - 1.0) * a);
            state.demands[i] + d_total * spread - k * k * (p[i] - unit_cost) / a
        })
        .collect())
}

/// Gradient of the cost term alone: `(N - 1) cT / (a_i S^2)`.
pub fn cost_gradient(
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<Vec<f64>> {
    let state = induced(prices, profiles, params)?;
    let s: f64 = state.ratios.iter().sum();
    let n = profiles.len() as f64;
    let scale = (n - 1.0) * params.unit_cost() / (s * s);
    Ok(state.coefficients.iter().map(|a| scale / a).collect())
}

/// Hessian of the cost term: `-2 (N - 1) cT / (a_i a_j S^3)`, a negative
/// multiple of a rank-one matrix.
pub fn cost_hessian(
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<Vec<Vec<f64>>> {
    let state = induced(prices, profiles, params)?;
    let s: f64 = state.ratios.iter().sum();
    let n = profiles.len() as f64;
    let scale = -2.0 * (n - 1.0) * params.unit_cost() / (s * s * s);
    Ok(state
        .coefficients
        .iter()
        .map(|ai| {
            state
                .coefficients
                .iter()
                .map(|aj| scale / (ai * aj))
                .collect()
        })
        .collect())
}

/// Sign regime of the profit surface at a price vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    /// `delta_i = sum_{j != i} (a_i + a_j) (1 - N w_j / S)`, with values
    /// within rounding of zero stored as exactly zero.
    pub delta: Vec<f64>,
    /// Every `delta_i <= 0`.
    pub concave_region: bool,
    /// Every `w_i >= S / (N - 1)^2`.
    pub ratio_floor_holds: bool,
}

pub fn regime_check(
    prices: &PriceSchedule,
    profiles: &[MinerProfile],
    params: &MarketParams,
) -> Result<RegimeCheck> {
    let state = induced(prices, profiles, params)?;
    let n = profiles.len() as f64;
    let s: f64 = state.ratios.iter().sum();
    let excess: Vec<f64> = state.ratios.iter().map(|w| 1.0 - n * w / s).collect();
    // sum_j excess_j = 0, so sum_{j != i} (a_i + a_j) e_j = sum_j a_j e_j - 2 a_i e_i
    let weighted: f64 = state
        .coefficients
        .iter()
        .zip(&excess)
        .map(|(a, e)| a * e)
        .sum();
    let largest = state.coefficients.iter().cloned().fold(0.0, f64::max);
    let noise = 1e-12 * n * largest;
    let delta: Vec<f64> = state
        .coefficients
        .iter()
        .zip(&excess)
        .map(|(a, e)| {
            let d = weighted - 2.0 * a * e;
            if d.abs() <= noise {
                0.0
            } else {
                d
            }
        })
        .collect();
    let floor = s / ((n - 1.0) * (n - 1.0));
    Ok(RegimeCheck {
        concave_region: delta.iter().all(|&d| d <= 0.0),
        ratio_floor_holds: state.ratios.iter().all(|&w| w >= floor),
        delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatoryOptions {
    /// Lower edge of the price box.
    pub min_price: f64,
    /// Sup-norm bound on the projected gradient at convergence.
    pub tolerance: f64,
    pub max_steps: usize,
    /// Log the regime at every accepted step.
    pub verbose: bool,
}

impl Default for DiscriminatoryOptions {
    fn default() -> Self {
        DiscriminatoryOptions {
            min_price: 1e-9,
            tolerance: 1e-8,
            max_steps: 50_000,
            verbose: false,
        }
    }
}

impl DiscriminatoryOptions {
    pub fn validate(&self, params: &MarketParams) -> Result<()> {
        if !(self.min_price > 0.0 && self.min_price < params.price_cap) {
            return Err(Error::invalid(
                "pricing.min_price",
                format!("must lie in (0, price_cap), got {}", self.min_price),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(
                "pricing.tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("pricing.max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatoryOptimum {
    pub prices: PriceSchedule,
    pub profit: f64,
    pub equilibrium: EquilibriumReport,
    pub regime: RegimeCheck,
    pub converged: bool,
    pub steps: usize,
    pub projected_gradient_norm: f64,
    /// Number of miners charged the price cap.
    pub at_cap: usize,
}

/// Relative size below which profit differences are treated as rounding.
const ROUNDOFF: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;

/// Projected gradient ascent from the all-cap corner.
///
/// Trial steps use the Barzilai-Borwein length from the previous step and
/// are halved until the increase is at least `ARMIJO` times the linear
/// prediction. Near the optimum, profit changes drop below double-precision
/// resolution, so increases smaller than `ROUNDOFF * |profit|` are estimated
/// from the trapezoid rule on the gradients at both ends instead.
pub fn optimize_discriminatory(
    profiles: &[MinerProfile],
    params: &MarketParams,
    opts: &DiscriminatoryOptions,
    solver: &SolverConfig,
) -> Result<DiscriminatoryOptimum> {
    params.validate()?;
    opts.validate(params)?;
    let n = profiles.len();
    if n < 2 {
        return Err(Error::TooFewMiners {
            required: 2,
            got: n,
        });
    }
    let (lo, hi) = (opts.min_price, params.price_cap);
    let project = |v: f64| v.clamp(lo, hi);
    let evaluate = |p: &[f64]| -> Result<(f64, Vec<f64>)> {
        let schedule = PriceSchedule::discriminatory(p.to_vec())?;
        Ok((
            profit_discriminatory(&schedule, profiles, params)?,
            profit_gradient(&schedule, profiles, params)?,
        ))
    };
    let projected_norm = |p: &[f64], g: &[f64]| {
        p.iter()
            .zip(g)
            .map(|(pi, gi)| (project(pi + gi) - pi).abs())
            .fold(0.0, f64::max)
    };

    let mut p = vec![hi; n];
    let (mut f, mut g) = evaluate(&p)?;
    let mut step = 1.0;
    let mut steps = 0;
    let mut pg_norm = projected_norm(&p, &g);
    let mut stalled = false;
    while pg_norm >= opts.tolerance && steps < opts.max_steps {
        let (trial, f_trial, g_trial) = loop {
            let trial: Vec<f64> = p
                .iter()
                .zip(&g)
                .map(|(pi, gi)| project(pi + step * gi))
                .collect();
            let moved: Vec<f64> = trial.iter().zip(&p).map(|(t, pi)| t - pi).collect();
            if moved.iter().all(|&d| d == 0.0) {
                stalled = true;
                break (trial, f, g.clone());
            }
            let (f_trial, g_trial) = evaluate(&trial)?;
            let predicted: f64 = g.iter().zip(&moved).map(|(gi, d)| gi * d).sum();
            let mut increase = f_trial - f;
            if increase.abs() <= ROUNDOFF * f.abs().max(1.0) {
                increase = 0.5
                    * g.iter()
                        .zip(&g_trial)
                        .zip(&moved)
                        .map(|((a, b), d)| (a + b) * d)
                        .sum::<f64>();
            }
            if increase >= ARMIJO * predicted {
                break (trial, f_trial, g_trial);
            }
            step *= 0.5;
        };
        if stalled {
            break;
        }
        let s: Vec<f64> = trial.iter().zip(&p).map(|(t, pi)| t - pi).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s
            .iter()
            .zip(g_trial.iter().zip(&g))
            .map(|(si, (gt, go))| si * (gt - go))
            .sum();
        // ascent: curvature along s is sy / ss < 0 for a concave profile
        step = if sy < 0.0 { ss / -sy } else { step * 4.0 };
        step = step.clamp(1e-12, 1e12);

        p = trial;
        f = f_trial;
        g = g_trial;
        steps += 1;
        pg_norm = projected_norm(&p, &g);
        if opts.verbose {
            let schedule = PriceSchedule::discriminatory(p.clone())?;
            let regime = regime_check(&schedule, profiles, params)?;
            log::info!(
                "step {steps}: profit {f:.12e}, projected gradient {pg_norm:.3e}, concave region {}, ratio floor {}",
                regime.concave_region,
                regime.ratio_floor_holds
            );
        }
    }

    let converged = pg_norm < opts.tolerance;
    if !converged {
        log::warn!("projected gradient ascent stopped after {steps} steps at {pg_norm:e}");
    }
    let prices = PriceSchedule::discriminatory(p)?;
    let equilibrium = solve_mdg(profiles, &prices, params, solver, None)?;
    let regime = regime_check(&prices, profiles, params)?;
    let at_cap = prices.prices().iter().filter(|&&v| v >= hi).count();
    Ok(DiscriminatoryOptimum {
        profit: f,
        prices,
        equilibrium,
        regime,
        converged,
        steps,
        projected_gradient_norm: pg_norm,
        at_cap,
    })
}

/// Result of sampling `(F(p) - F(p')) . (p - p')` with `F = -grad Pi` over
/// pairs inside the concave region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityProbe {
    pub pairs: usize,
    pub min_inner_product: f64,
    /// Minimum of the inner product divided by `|p - p'|^2`.
    pub min_normalized: f64,
    /// The region degenerates to the ray `p = s a`, where all ratios are equal.
    pub ray_only: bool,
    /// Candidate points discarded by the regime check.
    pub rejected: usize,
}

impl MonotonicityProbe {
    pub fn strictly_monotone(&self) -> bool {
        self.pairs > 0 && self.min_inner_product > 0.0
    }
}

/// Price vectors drawn from the concave region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub points: Vec<PriceSchedule>,
    /// The region degenerates to the ray `p = s a`, where all ratios are equal.
    pub ray_only: bool,
    /// Candidates discarded by the final regime check.
    pub rejected: usize,
}

/// Draws up to `count` price vectors where every `delta_i <= 0`, the ratio
/// floor holds and all induced demands are positive.
///
/// Points are built from the excess `c_j = 1 - N w_j / S`. The region
/// requires `sum_j a_j c_j = -m <= 0` and `c_j >= -m / (2 a_j)`. Writing
/// `c_j = m (e_j - 1 / (2 a_j))` with `e >= 0`, the two linear constraints
/// `sum e = H / 2` and `sum a e = (N - 2) / 2` (with `H = sum 1 / a`) cut out
/// a polytope whose vertices have two non-zero entries. Directions are random
/// convex combinations of such vertices; the magnitude `m` is drawn up to the
/// limits set by the ratio floor and positive demand, and the overall price
/// level is drawn so that the largest price lies in `[0.05, 1]` times the
/// cap. When the polytope is empty, as for nearly identical miners, only the
/// ray of equal ratios remains. With two miners the ratio floor cannot hold
/// and no point is returned. Every point is confirmed with [`regime_check`].
pub fn sample_concave_region(
    profiles: &[MinerProfile],
    params: &MarketParams,
    count: usize,
    seed: u64,
) -> Result<RegionSample> {
    let n = profiles.len();
    if n < 2 {
        return Err(Error::TooFewMiners {
            required: 2,
            got: n,
        });
    }
    let a = reward_coefficients(profiles, params);
    let harmonic: f64 = a.iter().map(|v| 1.0 / v).sum();
    let target = (n as f64 - 2.0) / harmonic;
    let below: Vec<usize> = (0..n).filter(|&j| a[j] <= target).collect();
    let above: Vec<usize> = (0..n).filter(|&j| a[j] >= target).collect();
    let ray_only = n < 3 || below.is_empty() || above.is_empty();
    let mut sample = RegionSample {
        points: Vec::with_capacity(count),
        ray_only,
        rejected: 0,
    };
    if n < 3 {
        return Ok(sample);
    }
    let nf = n as f64;
    let excess_cap = 1.0 - nf / ((nf - 1.0) * (nf - 1.0));
    let excess_floor = -1.0 / (nf - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let max_attempts = 20 * count;
    let mut attempts = 0;
    while sample.points.len() < count && attempts < max_attempts {
        attempts += 1;
        let mut direction = vec![0.0; n];
        if !ray_only {
            let weights: Vec<f64> = (0..4).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = weights.iter().sum();
            for w in weights {
                let j = below[rng.random_range(0..below.len())];
                let k = above[rng.random_range(0..above.len())];
                let (ej, ek) = if a[k] == a[j] {
                    (harmonic / 2.0, 0.0)
                } else {
                    let ek = ((nf - 2.0) / 2.0 - a[j] * harmonic / 2.0) / (a[k] - a[j]);
                    (harmonic / 2.0 - ek, ek)
                };
                direction[j] += w / total * ej;
                direction[k] += w / total * ek;
            }
            for (d, aj) in direction.iter_mut().zip(&a) {
                *d -= 1.0 / (2.0 * aj);
            }
        }
        let limit = direction.iter().fold(f64::INFINITY, |acc, &d| {
            if d > 0.0 {
                acc.min(excess_cap / d)
            } else if d < 0.0 {
                acc.min(excess_floor / d)
            } else {
                acc
            }
        });
        let m = if limit.is_finite() {
            rng.random_range(0.0..limit)
        } else {
            0.0
        };
        let mut p: Vec<f64> = a
            .iter()
            .zip(&direction)
            .map(|(aj, d)| aj * (1.0 - m * d))
            .collect();
        let top = p.iter().cloned().fold(0.0, f64::max);
        let level = rng.random_range(0.05..=1.0) * params.price_cap / top;
        p.iter_mut()
            .for_each(|v| *v = (*v * level).min(params.price_cap));

        let schedule = PriceSchedule::discriminatory(p)?;
        let regime = regime_check(&schedule, profiles, params)?;
        let ratios = cost_ratios(profiles, &schedule, params)?;
        let s: f64 = ratios.iter().sum();
        let positive = ratios.iter().all(|w| (nf - 1.0) * w < s);
        if regime.concave_region && regime.ratio_floor_holds && positive {
            sample.points.push(schedule);
        } else {
            sample.rejected += 1;
        }
    }
    Ok(sample)
}

/// Evaluates `(F(p) - F(p')) . (p - p')` on `samples` pairs of points from
/// [`sample_concave_region`].
pub fn vi_monotonicity_probe(
    profiles: &[MinerProfile],
    params: &MarketParams,
    samples: usize,
    seed: u64,
) -> Result<MonotonicityProbe> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let region = sample_concave_region(profiles, params, 2 * samples, seed)?;
    let mut probe = MonotonicityProbe {
        pairs: 0,
        min_inner_product: f64::INFINITY,
        min_normalized: f64::INFINITY,
        ray_only: region.ray_only,
        rejected: region.rejected,
    };
    for pair in region.points.chunks_exact(2) {
        let (p, q) = (&pair[0], &pair[1]);
        let gp = profit_gradient(p, profiles, params)?;
        let gq = profit_gradient(q, profiles, params)?;
        let mut inner = 0.0;
        let mut dist = 0.0;
        for i in 0..p.len() {
            let d = p.prices()[i] - q.prices()[i];
            inner += -(gp[i] - gq[i]) * d;
            dist += d * d;
        }
        probe.pairs += 1;
        probe.min_inner_product = probe.min_inner_product.min(inner);
        if dist > 0.0 {
            probe.min_normalized = probe.min_normalized.min(inner / dist);
        }
    }
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::profiles_from_block_sizes;
    use crate::uniform::reduced_profit_uniform;

    fn mixed() -> Vec<MinerProfile> {
        profiles_from_block_sizes(&[120.0, 190.0, 200.0, 260.0, 330.0]).unwrap()
    }

    #[test]
    fn constant_prices_match_uniform_profit() {
        let params = MarketParams::default();
        for price in [3.0, 40.0, 100.0] {
            let p = PriceSchedule::discriminatory(vec![price; 5]).unwrap();
            let d = profit_discriminatory(&p, &mixed(), &params).unwrap();
            let u = reduced_profit_uniform(price, &mixed(), &params).unwrap();
            assert!((d - u).abs() <= 1e-12 * u.abs(), "{d} {u}");
        }
    }

    #[test]
    fn free_electricity_leaves_revenue_only() {
        let params = MarketParams {
            electricity_cost: 0.0,
            ..MarketParams::default()
        };
        let p = PriceSchedule::discriminatory(vec![50.0, 60.0, 70.0, 80.0, 90.0]).unwrap();
        let parts = profit_parts(&p, &mixed(), &params).unwrap();
        assert_eq!(parts.cost, 0.0);
        assert_eq!(parts.total, parts.revenue);
    }

    #[test]
    fn symmetric_gradient_components_equal() {
        let params = MarketParams::default();
        let profiles = profiles_from_block_sizes(&[200.0; 6]).unwrap();
        let p = PriceSchedule::uniform(70.0, 6).unwrap();
        let g = profit_gradient(&p, &profiles, &params).unwrap();
        for gi in &g {
            assert!((gi - g[0]).abs() <= 1e-12 * g[0].abs().max(1e-9));
        }
        // revenue is scale free, so the symmetric gradient is the cost gradient
        let c = cost_gradient(&p, &profiles, &params).unwrap();
        assert!((g[0] - c[0]).abs() < 1e-10);
    }

    #[test]
    fn cost_gradient_positive() {
        let params = MarketParams::default();
        let p = PriceSchedule::discriminatory(vec![10.0, 20.0, 30.0, 40.0, 50.0]).unwrap();
        assert!(cost_gradient(&p, &mixed(), &params)
            .unwrap()
            .iter()
            .all(|&v| v > 0.0));
    }

    #[test]
    fn symmetric_ratios_sit_on_region_boundary() {
        let params = MarketParams::default();
        let a = reward_coefficients(&mixed(), &params);
        let p = PriceSchedule::discriminatory(a.iter().map(|v| v / 200.0).collect()).unwrap();
        let regime = regime_check(&p, &mixed(), &params).unwrap();
        assert!(regime.delta.iter().all(|&d| d == 0.0), "{:?}", regime.delta);
        assert!(regime.concave_region);
        // (N - 1)^2 >= N for N >= 3
        assert!(regime.ratio_floor_holds);
    }

    #[test]
    fn identical_miners_stay_at_cap() {
        let params = MarketParams::default();
        let profiles = profiles_from_block_sizes(&[200.0; 10]).unwrap();
        let opt = optimize_discriminatory(
            &profiles,
            &params,
            &DiscriminatoryOptions::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(opt.converged);
        assert_eq!(opt.at_cap, 10);
        let u = reduced_profit_uniform(100.0, &profiles, &params).unwrap();
        assert!((opt.profit - u).abs() <= 1e-12 * u);
    }

    #[test]
    fn heterogeneous_miners_get_lower_prices() {
        let params = MarketParams::default();
        let sizes: Vec<f64> = (0..30).map(|k| 150.0 + 4.0 * k as f64).collect();
        let profiles = profiles_from_block_sizes(&sizes).unwrap();
        let opt = optimize_discriminatory(
            &profiles,
            &params,
            &DiscriminatoryOptions::default(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(
            opt.converged,
            "{} {}",
            opt.steps, opt.projected_gradient_norm
        );
        let u = reduced_profit_uniform(100.0, &profiles, &params).unwrap();
        assert!(opt.profit > u);
        assert!(opt.prices.mean() < 100.0);
        assert!(opt.at_cap >= 1);
        assert!(opt.equilibrium.converged);
    }

    #[test]
    fn options_validated() {
        let params = MarketParams::default();
        let bad = DiscriminatoryOptions {
            min_price: 0.0,
            ..DiscriminatoryOptions::default()
        };
        assert!(bad.validate(&params).is_err());
        let one = profiles_from_block_sizes(&[200.0]).unwrap();
        assert!(optimize_discriminatory(
            &one,
            &params,
            &DiscriminatoryOptions::default(),
            &SolverConfig::default()
        )
        .is_err());
    }

    #[test]
    fn probe_samples_the_ray_for_near_identical_miners() {
        let params = MarketParams::default();
        let profiles = profiles_from_block_sizes(&[199.0, 200.0, 201.0, 200.5]).unwrap();
        let probe = vi_monotonicity_probe(&profiles, &params, 50, 3).unwrap();
        assert!(probe.ray_only);
        assert_eq!(probe.pairs, 50);
        assert!(probe.strictly_monotone(), "{probe:?}");
        assert!(vi_monotonicity_probe(&profiles, &params, 0, 1).is_err());
    }

    #[test]
    fn probe_on_two_miners_finds_nothing() {
        let params = MarketParams::default();
        let profiles = profiles_from_block_sizes(&[100.0, 300.0]).unwrap();
        let probe = vi_monotonicity_probe(&profiles, &params, 10, 1).unwrap();
        assert_eq!(probe.pairs, 0);
        assert!(!probe.strictly_monotone());
    }
}
