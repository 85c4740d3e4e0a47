use jumpvol::{run_cell, CellConfig, Target};

// paired: the same seeds give the short path as a prefix of the long one.
// model 3 has a non-constant sigma^2, so the risk has a bias part that n
// can shrink
#[test]
fn sigma2_risk_falls_with_n_in_most_paired_experiments() {
    let mut wins = 0;
    for experiment in 0..10u64 {
        let cell = |n| CellConfig {
            replications: 3,
            base_seed: 1000 * experiment,
            ..CellConfig::new(3, n, 1e-3)
        };
        let small = run_cell(&cell(2_000)).unwrap();
        let large = run_cell(&cell(50_000)).unwrap();
        assert_eq!(small[1].target, Target::Sigma2);
        if large[1].risk < small[1].risk {
            wins += 1;
        }
    }
    assert!(wins >= 9, "risk decreased in only {wins} of 10 experiments");
}

#[test]
fn oracle_ratio_is_at_least_one() {
    let reports = run_cell(&CellConfig {
        replications: 4,
        ..CellConfig::new(3, 5_000, 1e-2)
    })
    .unwrap();
    for report in reports {
        assert!(report.oracle >= 1.0, "{}: {}", report.target, report.oracle);
        for rep in &report.per_replication {
            assert!(rep.err_min <= rep.err);
        }
        assert_eq!(report.per_replication.len(), 4);
    }
}
