//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use spi_core::harness::{run_experiment, summarize, Problem, SummaryRow};
use spi_core::verify::{
    corpus_compliance, default_inner_solver, inner_equivalence, reference_value_checks,
    render_table, weissman_coverage, CORPUS_SEED, CORPUS_SIZE, COVERAGE_DELTA, COVERAGE_PER_PAIR,
    COVERAGE_REPLICATIONS, COVERAGE_SEED, COVERAGE_THRESHOLD, EQUIVALENCE_SEED, EQUIVALENCE_TRIALS,
};
use spi_core::{Domain, ExperimentConfig, Method, Sampling, UncertaintySet};

/// Preregistered base seeds for the grid sweep.
const GRID_SEEDS: [u64; 3] = [7, 8, 9];
/// Per-pair sample counts of the grid sweep.
const GRID_COUNTS: [u64; 5] = [3_000, 10_000, 100_000, 10_000_000, 100_000_000_000];
const GRID_TRIALS: usize = 40;
/// Price transitions observed along uniform-policy episodes.
const ENERGY_COUNTS: [u64; 5] = [1_000, 3_000, 10_000, 30_000, 100_000];
const ENERGY_TRIALS: usize = 5;

struct Line {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report(lines: &[Line]) -> bool {
    for l in lines {
        let tag = if l.passed { "PASS" } else { "FAIL" };
        println!("ACCEPTANCE {tag}  {}: {}", l.name, l.detail);
    }
    lines.iter().all(|l| l.passed)
}

fn mean(rows: &[SummaryRow], method: Method, samples: u64) -> f64 {
    rows.iter()
        .find(|r| r.method == method.to_string() && r.samples == samples)
        .map_or(f64::NAN, |r| r.mean_improvement)
}

fn micro_examples() -> Line {
    let start = Instant::now();
    let checks = reference_value_checks();
    let secs = start.elapsed().as_secs_f64();
    let ok = checks.iter().all(|c| c.passed);
    if !ok {
        print!("{}", render_table(&checks));
    }
    Line {
        name: "reference micro-examples",
        passed: ok && secs < 1.0,
        detail: format!(
            "{}/{} values exact, {secs:.3}s (limit 1s)",
            checks.iter().filter(|c| c.passed).count(),
            checks.len()
        ),
    }
}

fn inner_solver() -> Line {
    let start = Instant::now();
    let res = inner_equivalence(EQUIVALENCE_TRIALS, EQUIVALENCE_SEED, &default_inner_solver);
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(s) => Line {
            name: "inner-solver oracle equivalence",
            passed: s.mismatches == 0 && secs < 5.0,
            detail: format!(
                "{} triples, {} mismatches, max |diff| {:.2e}, {secs:.3}s (limit 5s)",
                s.trials, s.mismatches, s.max_abs_diff
            ),
        },
        Err(e) => Line {
            name: "inner-solver oracle equivalence",
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn corpus() -> Line {
    let start = Instant::now();
    let res = corpus_compliance(CORPUS_SEED, CORPUS_SIZE);
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(s) => Line {
            name: "loss-bound compliance corpus",
            passed: s.passed() && secs < 120.0,
            detail: format!(
                "{} models; bound violations EXP/ROB/RWA {}/{}/{}; unsafe ROB/RWA/RBC {}/{}/{}; \
                 certificate violations {}; chain violations {}/{}; errors {}; {secs:.2}s (limit 120s)",
                s.instances,
                s.exp_bound_violations,
                s.rob_bound_violations,
                s.rwa_bound_violations,
                s.rob_unsafe,
                s.rwa_unsafe,
                s.rbc_unsafe,
                s.rbc_certificate_violations,
                s.chain_violations,
                s.chain_checks,
                s.errors.len()
            ),
        },
        Err(e) => Line {
            name: "loss-bound compliance corpus",
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn coverage() -> Line {
    let start = Instant::now();
    let res = weissman_coverage(
        COVERAGE_REPLICATIONS,
        COVERAGE_PER_PAIR,
        COVERAGE_DELTA,
        COVERAGE_SEED,
    );
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(s) => Line {
            name: "error-function coverage",
            passed: s.rate() >= COVERAGE_THRESHOLD && secs < 60.0,
            detail: format!(
                "{}/{} contained ({:.1}%, need {:.0}%), {secs:.2}s (limit 60s)",
                s.contained,
                s.replications,
                100.0 * s.rate(),
                100.0 * COVERAGE_THRESHOLD
            ),
        },
        Err(e) => Line {
            name: "error-function coverage",
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn grid() -> Line {
    let start = Instant::now();
    let safe = [Method::Rob, Method::Rwa, Method::Rbc];
    let (lo0, lo1, hi) = (
        GRID_COUNTS[0],
        GRID_COUNTS[1],
        GRID_COUNTS[GRID_COUNTS.len() - 1],
    );
    let (mut a, mut b, mut c, mut d) = (true, true, false, true);
    let mut notes = Vec::new();
    for seed in GRID_SEEDS {
        let mut cfg = ExperimentConfig::new(Domain::Grid);
        cfg.sample_counts = GRID_COUNTS.to_vec();
        cfg.trials = GRID_TRIALS;
        cfg.base_seed = seed;
        cfg.sampling = Sampling::PerPair;
        let rows = match run_experiment(&cfg) {
            Ok(r) => summarize(&r),
            Err(e) => {
                return Line {
                    name: "grid experiment",
                    passed: false,
                    detail: format!("seed {seed}: {e}"),
                }
            }
        };
        let failed: usize = rows.iter().map(|r| r.failed).sum();
        a &= failed == 0
            && GRID_COUNTS
                .iter()
                .all(|&n| safe.iter().all(|&m| mean(&rows, m, n) >= -1.0));
        b &= [lo0, lo1].iter().all(|&n| {
            let rbc = mean(&rows, Method::Rbc, n);
            rbc > mean(&rows, Method::Rob, n) && rbc > mean(&rows, Method::Rwa, n)
        });
        c |= mean(&rows, Method::Exp, lo0) < 0.0;
        d &= Method::ALL.iter().all(|&m| mean(&rows, m, hi) >= 90.0);
        notes.push(format!(
            "seed {seed}: EXP@{lo0} {:.1}%, RBC@{lo0} {:.1}%, RBC@{lo1} {:.1}%, ROB@{lo0} {:.1}%, min@{hi} {:.1}%",
            mean(&rows, Method::Exp, lo0),
            mean(&rows, Method::Rbc, lo0),
            mean(&rows, Method::Rbc, lo1),
            mean(&rows, Method::Rob, lo0),
            Method::ALL.iter().map(|&m| mean(&rows, m, hi)).fold(f64::INFINITY, f64::min),
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    let tag = |ok: bool| if ok { "pass" } else { "FAIL" };
    Line {
        name: "grid experiment",
        passed: a && b && c && d && secs < 600.0,
        detail: format!(
            "(a) safe means >= -1%: {}; (b) RBC beats ROB/RWA at two smallest counts: {}; \
             (c) EXP negative at smallest count in a seed: {}; (d) all >= 90% at largest: {}; \
             {secs:.1}s (limit 600s) [{}]",
            tag(a),
            tag(b),
            tag(c),
            tag(d),
            notes.join("; ")
        ),
    }
}

fn energy() -> Line {
    let start = Instant::now();
    let confined = (|| -> spi_core::Result<bool> {
        let problem = Problem::build(Domain::Energy, None, 7)?;
        let (_, _, set) = problem.estimate(ENERGY_COUNTS[0], Sampling::Uniform, 0.05, 7)?;
        let UncertaintySet::L1(l1) = set else {
            return Ok(false);
        };
        let (n, m) = (l1.nominal().n_states(), l1.nominal().n_actions());
        let levels = 10;
        Ok((0..n).all(|x| {
            (0..m).all(|a| {
                l1.support(x, a).is_some_and(|s| {
                    s.len() == levels && s.iter().all(|&y| y / levels == s[0] / levels)
                }) && l1.budget().get(x, a) == l1.budget().get(x % levels, 0)
            })
        }))
    })()
    .unwrap_or(false);
    let mut cfg = ExperimentConfig::new(Domain::Energy);
    cfg.sample_counts = ENERGY_COUNTS.to_vec();
    cfg.trials = ENERGY_TRIALS;
    let records = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            return Line {
                name: "energy experiment",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let rows = summarize(&records);
    let lo = ENERGY_COUNTS[0];
    let (rbc, rob) = (mean(&rows, Method::Rbc, lo), mean(&rows, Method::Rob, lo));
    let worst_safe = records
        .iter()
        .filter(|r| r.method != Method::Exp.to_string())
        .map(|r| r.improvement_pct)
        .fold(f64::INFINITY, |acc, v| {
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                acc.min(v)
            }
        });
    let secs = start.elapsed().as_secs_f64();
    Line {
        name: "energy experiment",
        passed: confined && rbc >= rob && worst_safe >= -1.0 && secs < 900.0,
        detail: format!(
            "uncertainty confined to price chain: {confined}; RBC@{lo} {rbc:.1}% vs ROB@{lo} {rob:.1}%; \
             worst safe-method trial {worst_safe:.2}%; {secs:.1}s (limit 900s)"
        ),
    }
}

fn determinism() -> Line {
    let dir = tempfile::tempdir().expect("temp dir");
    let run = |name: &str, threads: Option<&str>| -> Option<Vec<u8>> {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_spibench"));
        cmd.args([
            "run",
            "--domain",
            "grid",
            "--samples",
            "200,400,800",
            "--trials",
            "6",
            "--seed",
            "7",
        ])
        .arg("--out")
        .arg(&out);
        match threads {
            Some(t) => cmd.env("SPIBENCH_THREADS", t),
            None => cmd.env_remove("SPIBENCH_THREADS"),
        };
        let status = cmd.status().ok()?;
        status.success().then(|| std::fs::read(&out).ok()).flatten()
    };
    let first = run("a.csv", None);
    let second = run("b.csv", None);
    let single = run("c.csv", Some("1"));
    let passed = first.is_some() && first == second && first == single;
    Line {
        name: "determinism",
        passed,
        detail: format!(
            "two identical runs byte-equal: {}; equal under SPIBENCH_THREADS=1: {}; {} bytes",
            first.is_some() && first == second,
            first.is_some() && first == single,
            first.as_ref().map_or(0, Vec::len)
        ),
    }
}

fn main() -> ExitCode {
    let lines = vec![
        micro_examples(),
        inner_solver(),
        corpus(),
        coverage(),
        grid(),
        energy(),
        determinism(),
    ];
    if report(&lines) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
