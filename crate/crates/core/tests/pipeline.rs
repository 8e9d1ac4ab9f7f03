use symbandit::bandit::AlgorithmKind;
use symbandit::harness::{run_seed, summarize, sweep, ExperimentConfig};
use symbandit::PartitionClass;

fn config(algorithm: AlgorithmKind) -> ExperimentConfig {
    ExperimentConfig {
        d: 12,
        d0: 3,
        sigma: 0.1,
        horizon: 600,
        algorithm,
        partition_class: PartitionClass::NonCrossing,
        t2: Some(120),
        ..ExperimentConfig::default()
    }
}

#[test]
fn every_algorithm_produces_a_monotone_regret_curve() {
    for algorithm in [
        AlgorithmKind::Emc,
        AlgorithmKind::EmcWs,
        AlgorithmKind::OfulFull,
        AlgorithmKind::EstcLasso,
    ] {
        let record = run_seed(&config(algorithm), 5).unwrap();
        assert_eq!(record.algorithm, algorithm);
        assert_eq!(*record.t.last().unwrap(), 600);
        assert!(
            record.cumulative_regret.windows(2).all(|w| w[1] >= w[0] - 1e-9),
            "{algorithm:?}"
        );
        assert!(record.final_regret().is_finite());
    }
}

#[test]
fn same_seed_same_environment_across_algorithms() {
    let a = run_seed(&config(AlgorithmKind::Emc), 11).unwrap();
    let b = run_seed(&config(AlgorithmKind::EstcLasso), 11).unwrap();
    assert_eq!(a.true_partition, b.true_partition);
    assert_eq!(a.env_snapshot, b.env_snapshot);
    let again = run_seed(&config(AlgorithmKind::Emc), 11).unwrap();
    assert_eq!(a.cumulative_regret, again.cumulative_regret);
}

#[test]
fn config_text_round_trips_through_the_parser() {
    let mut cfg = config(AlgorithmKind::EmcWs);
    cfg.selector_class = Some(PartitionClass::All);
    cfg.eps0 = Some(0.2);
    let parsed = ExperimentConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(parsed, cfg);
}

#[test]
fn sweeps_are_thread_count_invariant_and_summarised_per_algorithm() {
    let cfg = config(AlgorithmKind::Emc);
    let seeds: Vec<u64> = (0..6).collect();
    let serial = sweep(&cfg, &seeds, 1).unwrap();
    let pooled = sweep(&cfg, &seeds, 3).unwrap();
    assert!(serial.failures.is_empty());
    let strip = |r: &symbandit::harness::SweepResult| -> Vec<Vec<f64>> {
        r.records.iter().map(|x| x.cumulative_regret.clone()).collect()
    };
    assert_eq!(strip(&serial), strip(&pooled));
    let summary = summarize(&serial.records);
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0].runs, 6);
    assert!(summary[0].final_q25 <= summary[0].final_median && summary[0].final_median <= summary[0].final_q75);
}
