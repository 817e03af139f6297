//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stackedge_core::{
    check_uniqueness_discriminatory, closed_form_discriminatory, cost_hessian,
    optimize_discriminatory, optimize_uniform, probe_standard_function, profiles_from_block_sizes,
    profit_discriminatory, profit_gradient, reduced_profit_uniform, sample_profiles,
    simulate_mining_race, solve_mdg, sweep, verify_nash, win_probability, DemandProfile,
    DiscriminatoryOptions, ExperimentOptions, MarketParams, MinerProfile, PriceSchedule,
    PricingScheme, ScenarioSpec, SolverConfig, StandardFunctionReport, SweepAxis, SweepResult,
};

const BOTH: [PricingScheme; 2] = [PricingScheme::Uniform, PricingScheme::Discriminatory];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    n_range: std::ops::RangeInclusive<usize>,
) -> (Vec<MinerProfile>, PriceSchedule) {
    let n = rng.random_range(n_range);
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(50.0..=400.0)).collect();
    let p: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=100.0)).collect();
    (
        profiles_from_block_sizes(&t).unwrap(),
        PriceSchedule::discriminatory(p).unwrap(),
    )
}

fn default_profiles(seed: u64) -> Vec<MinerProfile> {
    sample_profiles(&ScenarioSpec {
        seed,
        ..ScenarioSpec::default()
    })
    .unwrap()
}

fn uniform_at_cap() -> Outcome {
    let params = MarketParams::default();
    let profiles = default_profiles(1);
    let start = Instant::now();
    let opt = optimize_uniform(&profiles, &params, &SolverConfig::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        opt.price == 100.0 && opt.grid_check_passed && elapsed < 1.0,
        format!(
            "p* = {}, profit {:.6}, best grid profit {:.6} at p = {}, {:.3} s",
            opt.price, opt.profit, opt.grid_best_profit, opt.grid_best_price, elapsed
        ),
    )
}

fn closed_form_vs_dynamics() -> Outcome {
    let params = MarketParams::default();
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let (mut accepted, mut drawn, mut condition_held) = (0, 0, 0);
    let mut worst = 0.0f64;
    let mut all_converged = true;
    while accepted < 100 && drawn < 1_000_000 {
        drawn += 1;
        let (profiles, prices) = random_instance(&mut rng, 2..=20);
        if check_uniqueness_discriminatory(&profiles, &prices, &params)
            .unwrap()
            .holds
        {
            condition_held += 1;
        }
        let cf = closed_form_discriminatory(&profiles, &prices, &params).unwrap();
        if !cf.interior {
            continue;
        }
        accepted += 1;
        let eq = solve_mdg(&profiles, &prices, &params, &config, None).unwrap();
        all_converged &= eq.converged;
        for (x, y) in eq.demands.as_slice().iter().zip(&cf.demands) {
            worst = worst.max((x - y).abs() / y.abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        accepted == 100 && all_converged && worst < 1e-6 && elapsed < 10.0,
        format!(
            "{accepted} interior instances out of {drawn} draws, all-miner uniqueness inequality held in {condition_held}; max relative difference {worst:.2e}, {elapsed:.3} s"
        ),
    )
}

fn deviation_oracle() -> Outcome {
    let params = MarketParams::default();
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases: Vec<(Vec<MinerProfile>, PriceSchedule)> = (0..200)
        .map(|_| random_instance(&mut rng, 2..=20))
        .collect();
    let profiles = default_profiles(3);
    cases.push((
        profiles.clone(),
        PriceSchedule::uniform(100.0, profiles.len()).unwrap(),
    ));
    let disc = optimize_discriminatory(
        &profiles,
        &params,
        &DiscriminatoryOptions::default(),
        &config,
    )
    .unwrap();
    cases.push((profiles, disc.prices));

    let (mut checked, mut failed) = (0, 0);
    let mut worst = 0.0f64;
    for (profiles, prices) in &cases {
        let eq = solve_mdg(profiles, prices, &params, &config, None).unwrap();
        if !eq.converged {
            continue;
        }
        checked += 1;
        let report = verify_nash(&eq.demands, prices, profiles, &params, 1000).unwrap();
        worst = worst.max(report.max_relative_gain);
        if report.max_relative_gain > 1e-8 {
            failed += 1;
        }
    }
    outcome(
        failed == 0 && checked == cases.len(),
        format!("{checked} of {} equilibria converged; {failed} admit a profitable deviation; max relative gain {worst:.2e}", cases.len()),
    )
}

fn symmetric_equivalence() -> Outcome {
    let params = MarketParams::default();
    let profiles = sample_profiles(&ScenarioSpec {
        block_var: 0.0,
        ..ScenarioSpec::default()
    })
    .unwrap();
    let opt = optimize_discriminatory(
        &profiles,
        &params,
        &DiscriminatoryOptions::default(),
        &SolverConfig::default(),
    )
    .unwrap();
    let p = opt.prices.prices();
    let (lo, hi) = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let uniform = reduced_profit_uniform(params.price_cap, &profiles, &params).unwrap();
    let gap = (opt.profit - uniform).abs() / uniform;
    outcome(
        opt.converged && hi - lo <= 1e-9 * hi && gap <= 1e-3,
        format!("prices in [{lo}, {hi}], relative profit gap {gap:.2e}"),
    )
}

fn scheme_dominance() -> Outcome {
    let opts = ExperimentOptions::default();
    let mut cells = 0;
    let mut violations = Vec::new();
    for n in [20.0, 40.0, 60.0, 80.0, 100.0] {
        let spec = ScenarioSpec {
            n_miners: n as usize,
            block_var: 5.0,
            replications: 20,
            seed: 5,
            ..ScenarioSpec::default()
        };
        let rows = sweep(
            &spec,
            &BOTH,
            SweepAxis::VariableRewardFactor,
            &[10.0, 20.0, 30.0, 40.0, 50.0],
            &opts,
            false,
        )
        .unwrap();
        for pair in rows.chunks(2) {
            let (u, d) = (&pair[0], &pair[1]);
            cells += 1;
            let ok = u.failures == 0
                && d.failures == 0
                && d.mean_profit >= u.mean_profit * (1.0 - 1e-6)
                && d.mean_price < 100.0;
            if !ok {
                violations.push(format!(
                    "N={n} r={}: profit {} vs {}, price {}",
                    u.value, d.mean_profit, u.mean_profit, d.mean_price
                ));
            }
        }
    }
    outcome(
        violations.is_empty(),
        if violations.is_empty() {
            format!("{cells} cells, discriminatory profit never below uniform, mean price below 100 in all")
        } else {
            violations.join("; ")
        },
    )
}

fn non_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

fn monotone_trends() -> Outcome {
    let opts = ExperimentOptions::default();
    let spec = ScenarioSpec {
        replications: 20,
        seed: 6,
        ..ScenarioSpec::default()
    };
    let axes: [(SweepAxis, [f64; 5]); 4] = [
        (SweepAxis::NMiners, [20.0, 40.0, 60.0, 80.0, 100.0]),
        (
            SweepAxis::VariableRewardFactor,
            [10.0, 20.0, 30.0, 40.0, 50.0],
        ),
        (SweepAxis::FixedReward, [5e3, 7.5e3, 1e4, 1.25e4, 1.5e4]),
        (SweepAxis::BlockMean, [100.0, 150.0, 200.0, 250.0, 300.0]),
    ];
    let mut problems = Vec::new();
    let mut increments_note = String::new();
    for (axis, values) in axes {
        let rows = sweep(&spec, &BOTH, axis, &values, &opts, true).unwrap();
        for scheme in BOTH {
            let curve: Vec<&SweepResult> = rows.iter().filter(|r| r.scheme == scheme).collect();
            let demand: Vec<f64> = curve.iter().map(|r| r.mean_total_demand).collect();
            let profit: Vec<f64> = curve.iter().map(|r| r.mean_profit).collect();
            if !non_decreasing(&demand) || !non_decreasing(&profit) {
                problems.push(format!("{axis}/{scheme} not monotone"));
            }
            if axis == SweepAxis::NMiners {
                let inc: Vec<f64> = demand.windows(2).map(|w| w[1] - w[0]).collect();
                // the tail of the increment sequence, from the largest increment on
                let start = inc
                    .iter()
                    .enumerate()
                    .fold(0, |best, (k, v)| if *v > inc[best] { k } else { best });
                let damped =
                    start + 2 < inc.len() + 1 && inc[start..].windows(2).all(|w| w[1] <= w[0]);
                if !damped {
                    problems.push(format!("{scheme} demand increments {inc:?}"));
                }
                increments_note.push_str(&format!(
                    " {scheme} increments {:?};",
                    inc.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
                ));
            }
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!("demand and profit non-decreasing on 4 axes x 2 schemes;{increments_note}")
        } else {
            problems.join("; ")
        },
    )
}

fn gradient_fidelity() -> Outcome {
    let params = MarketParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_grad = 0.0f64;
    let mut worst_form = f64::NEG_INFINITY;
    for _ in 0..50 {
        let (profiles, prices) = random_instance(&mut rng, 2..=20);
        let p = prices.prices().to_vec();
        let g = profit_gradient(&prices, &profiles, &params).unwrap();
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let f = |q: &[f64]| {
            profit_discriminatory(
                &PriceSchedule::discriminatory(q.to_vec()).unwrap(),
                &profiles,
                &params,
            )
            .unwrap()
        };
        for i in 0..p.len() {
            let h = 1e-5 * p[i];
            let (mut up, mut down) = (p.clone(), p.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            worst_grad = worst_grad.max((fd - g[i]).abs() / scale);
        }
        let h = cost_hessian(&prices, &profiles, &params).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..p.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: f64 = (0..p.len())
                .map(|i| (0..p.len()).map(|j| v[i] * h[i][j] * v[j]).sum::<f64>())
                .sum();
            worst_form = worst_form.max(q);
        }
    }
    outcome(
        worst_grad < 1e-5 && worst_form <= 1e-10,
        format!("max gradient error {worst_grad:.2e} (relative to the gradient sup-norm), max v.H.v {worst_form:.2e}"),
    )
}

fn standard_function_suite() -> Outcome {
    let params = MarketParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = StandardFunctionReport::default();
    let mut instances = 0;
    while total.states < 1000 {
        let (profiles, prices) = random_instance(&mut rng, 2..=20);
        let check = check_uniqueness_discriminatory(&profiles, &prices, &params).unwrap();
        let miners: Vec<usize> = (0..profiles.len())
            .filter(|&i| check.holds_for(i))
            .collect();
        if miners.is_empty() {
            continue;
        }
        let want = (1000 - total.states).min(25);
        let report =
            probe_standard_function(&profiles, &prices, &params, &miners, want, rng.random())
                .unwrap();
        if report.states > 0 {
            instances += 1;
        }
        total.merge(report);
    }
    outcome(
        total.passed(),
        match &total.counterexample {
            Some(c) => c.clone(),
            None => format!(
                "{} states on {instances} instances, miners restricted to those satisfying their own inequality; no failures",
                total.states
            ),
        },
    )
}

fn monte_carlo() -> Outcome {
    let params = MarketParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let trials = 1_000_000u64;
    let start = Instant::now();
    let (mut compared, mut outside) = (0, 0);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let n = rng.random_range(2..=5);
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(50.0..=400.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..=100.0)).collect();
        let profiles = profiles_from_block_sizes(&t).unwrap();
        let x = DemandProfile::new(x).unwrap();
        let freq = simulate_mining_race(&x, &profiles, &params, trials, 2026 + k).unwrap();
        for (i, f) in freq.iter().enumerate() {
            let p = win_probability(&x, &profiles, i, &params).unwrap();
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let z = (f - p).abs() / sigma;
            worst = worst.max(z);
            compared += 1;
            if z > 3.0 {
                outside += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        outside == 0 && elapsed < 30.0,
        format!(
            "{compared} frequencies, {outside} outside 3 sigma, max |z| {worst:.2}, {elapsed:.2} s"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("uniform optimum at the price cap", uniform_at_cap),
        (
            "closed form matches best-response dynamics",
            closed_form_vs_dynamics,
        ),
        ("no profitable unilateral deviation", deviation_oracle),
        (
            "identical miners: discriminatory equals uniform",
            symmetric_equivalence,
        ),
        ("discriminatory pricing dominates uniform", scheme_dominance),
        ("monotone sweep trends", monotone_trends),
        ("profit gradient and cost Hessian", gradient_fidelity),
        (
            "best response is a standard function",
            standard_function_suite,
        ),
        ("Monte Carlo win frequencies", monte_carlo),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let status = if result.passed { "PASS" } else { "FAIL" };
        if !result.passed {
            failures += 1;
        }
        println!(
            "criterion {}: {status} [{name}] {} ({:.2} s)",
            k + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        println!("all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
