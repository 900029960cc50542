use gridfuse::eval::{run_experiment1, run_experiment2, EvalOptions};
use gridfuse::fusion::Method;
use gridfuse::numfmt::to_canonical_json;
use gridfuse::simgen::{generate_scenario, ScenarioConfig};

fn small_options(n: usize) -> EvalOptions {
    EvalOptions { sizes: vec![n / 2, n], ..EvalOptions::for_observations(n) }
}

#[test]
fn default_skew_is_removed_by_normalization() {
    let scenario = generate_scenario(&ScenarioConfig::with_classes(1000, 3, 42)).unwrap();
    let tables: Vec<_> = scenario.tables().into_iter().cloned().collect();
    let exp = run_experiment1(&tables, &Default::default(), 11).unwrap();
    let before = exp.summary.iter().map(|c| c.before.skewness.abs()).fold(0.0, f64::max);
    let after = exp.summary.iter().map(|c| c.after.skewness.abs()).fold(0.0, f64::max);
    assert!(before > 1.0, "max |skew| before {before}");
    assert!(after < 0.3, "max |skew| after {after}");
    assert_eq!(exp.excerpt.rows.len(), 10);
}

#[test]
fn clean_scenarios_have_low_conflict_and_agreeing_methods() {
    for seed in [1, 2, 3] {
        let cfg = ScenarioConfig::with_classes(300, 3, seed);
        let result = run_experiment2(&cfg, &small_options(300)).unwrap();
        for p in &result.mean_conflict {
            assert!(p.mean_conflict < 0.05, "seed {seed}: conflict {}", p.mean_conflict);
        }
        let ds = &result.predictions.iter().find(|(m, _)| *m == Method::Ds).unwrap().1;
        let pca = &result.predictions.iter().find(|(m, _)| *m == Method::PcaDs).unwrap().1;
        assert_eq!(ds, pca, "seed {seed}");
        assert_eq!(result.agreement, 1.0);
    }
}

#[test]
fn conflicted_scenario_reports_every_size_and_method() {
    let cfg = ScenarioConfig { conflict_rate: 0.3, ..ScenarioConfig::with_classes(200, 4, 5) };
    let opts = small_options(200);
    let result = run_experiment2(&cfg, &opts).unwrap();
    assert_eq!(result.series.len(), opts.sizes.len() * opts.methods.len());
    for p in &result.series {
        assert!((0.0..=1.0).contains(&p.accuracy));
        assert_eq!(p.n_test, p.size - (p.size as f64 * opts.train_fraction).round() as usize);
    }
    let csv = result.accuracy_csv();
    assert_eq!(csv.lines().count(), 1 + result.series.len());
    for row in &result.trace {
        assert!(row.bel <= row.pl + 1e-12);
        assert!(row.mu >= -1e-12);
    }
}

#[test]
fn experiment_json_is_deterministic() {
    let cfg = ScenarioConfig { conflict_rate: 0.2, ..ScenarioConfig::with_classes(120, 3, 8) };
    let a = to_canonical_json(&run_experiment2(&cfg, &small_options(120)).unwrap()).unwrap();
    let b = to_canonical_json(&run_experiment2(&cfg, &small_options(120)).unwrap()).unwrap();
    assert_eq!(a, b);
}
