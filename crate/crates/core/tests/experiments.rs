use stackedge_core::experiments::write_csv;
use stackedge_core::{
    run_scenario, sweep, ExperimentOptions, PricingScheme, ScenarioSpec, SweepAxis, SweepResult,
};

const BOTH: [PricingScheme; 2] = [PricingScheme::Uniform, PricingScheme::Discriminatory];

fn csv(rows: &[SweepResult]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).unwrap();
    buf
}

#[test]
fn same_seed_gives_identical_tables() {
    let spec = ScenarioSpec {
        n_miners: 10,
        replications: 6,
        seed: 31,
        ..ScenarioSpec::default()
    };
    let opts = ExperimentOptions::default();
    let run = || {
        sweep(
            &spec,
            &BOTH,
            SweepAxis::FixedReward,
            &[5e3, 1e4],
            &opts,
            true,
        )
        .unwrap()
    };
    let first = csv(&run());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let serial = pool.install(|| csv(&run()));
    assert_eq!(first, serial);
    assert_eq!(first, csv(&run()));
}

#[test]
fn scheme_gap_shrinks_with_variance() {
    let spec = ScenarioSpec {
        n_miners: 20,
        replications: 20,
        seed: 5,
        ..ScenarioSpec::default()
    };
    let variances = [20.0, 10.0, 5.0, 1.0, 0.0];
    let rows = sweep(
        &spec,
        &BOTH,
        SweepAxis::BlockVar,
        &variances,
        &ExperimentOptions::default(),
        false,
    )
    .unwrap();
    let gaps: Vec<f64> = rows
        .chunks(2)
        .map(|pair| (pair[1].mean_profit - pair[0].mean_profit).abs())
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] <= w[0], "{gaps:?}");
    }
    assert!(gaps[4] <= 1e-6 * rows[8].mean_profit);
}

#[test]
fn discriminatory_dominates_per_replication() {
    let spec = ScenarioSpec {
        n_miners: 30,
        replications: 8,
        seed: 17,
        ..ScenarioSpec::default()
    };
    let opts = ExperimentOptions::default();
    let u = run_scenario(&spec, PricingScheme::Uniform, &opts).unwrap();
    let d = run_scenario(&spec, PricingScheme::Discriminatory, &opts).unwrap();
    for (a, b) in u.outcomes.iter().zip(&d.outcomes) {
        let (a, b) = (a.result.as_ref().unwrap(), b.result.as_ref().unwrap());
        assert_eq!(a.mean_price, 100.0);
        assert!(
            b.profit >= a.profit * (1.0 - 1e-9),
            "{} < {}",
            b.profit,
            a.profit
        );
    }
    assert!(d.summary.mean_price < 100.0);
}
