use spi_core::harness::{run_experiment, summarize};
use spi_core::verify::{
    default_inner_solver, inner_equivalence, verify_with, EQUIVALENCE_SEED, EQUIVALENCE_TRIALS,
};
use spi_core::{Domain, ExperimentConfig, Method, Sampling};

fn config(domain: Domain, samples: Vec<u64>, trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(domain);
    cfg.sample_counts = samples;
    cfg.trials = trials;
    cfg
}

#[test]
fn no_data_means_every_safe_method_keeps_the_baseline() {
    for domain in [Domain::Grid, Domain::Random] {
        let records = run_experiment(&config(domain, vec![0], 3)).unwrap();
        for r in records
            .iter()
            .filter(|r| r.method != Method::Exp.to_string())
        {
            assert!(r.fell_back, "{domain} {}", r.method);
            assert!(
                r.improvement_pct.abs() < 1e-9,
                "{domain} {} {}",
                r.method,
                r.improvement_pct
            );
        }
    }
}

#[test]
fn abundant_data_approaches_the_optimum() {
    let mut cfg = config(Domain::Random, vec![100_000_000_000], 4);
    cfg.sampling = Sampling::PerPair;
    let rows = summarize(&run_experiment(&cfg).unwrap());
    for r in rows {
        assert!(
            r.mean_improvement >= 95.0,
            "{} at {}: {}",
            r.method,
            r.samples,
            r.mean_improvement
        );
    }
}

#[test]
fn experiments_are_reproducible() {
    let cfg = config(Domain::Random, vec![50, 500], 3);
    assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
}

#[test]
fn containment_implies_safety_for_robust_methods() {
    let mut cfg = config(Domain::Random, vec![20, 200, 2000], 10);
    cfg.sampling = Sampling::PerPair;
    let records = run_experiment(&cfg).unwrap();
    let mut contained = 0;
    for r in &records {
        if r.contained == Some(true) && (r.method == "ROB" || r.method == "RWA") {
            contained += 1;
            assert!(r.is_safe, "{} at {} trial {}", r.method, r.samples, r.trial);
        }
    }
    assert!(contained > 0);
}

#[test]
fn corrupted_inner_solver_is_caught() {
    // drop the clamp at the nominal row: mass moves past what the row holds
    let unclamped = |p: &[f64], budget: f64, v: &[f64]| -> spi_core::Result<f64> {
        let lo = (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        let hi = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        let nominal: f64 = p.iter().zip(v).map(|(a, b)| a * b).sum();
        Ok(nominal - budget / 2.0 * (v[hi] - v[lo]))
    };
    let honest =
        inner_equivalence(EQUIVALENCE_TRIALS, EQUIVALENCE_SEED, &default_inner_solver).unwrap();
    assert_eq!(honest.mismatches, 0);
    let faulty = inner_equivalence(EQUIVALENCE_TRIALS, EQUIVALENCE_SEED, &unclamped).unwrap();
    assert!(faulty.mismatches > 0);
    let table = verify_with(&unclamped);
    assert!(table.iter().any(|c| !c.passed));
}
