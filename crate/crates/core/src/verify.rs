//! Oracle cross-checks: inner-solver equivalence, reference values on the
//! small hand-built models, bound compliance on a random corpus, and error
//! function coverage.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algorithms::{
    bound_rhs, evaluate_with_optimum, reward_adjusted_mdp, solve_exp, solve_rbc_with_set,
    solve_rob_with, solve_rwa_with, BoundKind, SolverConfig,
};
use crate::domains::instances::{
    build_example1, build_illustrative, build_tightness, example1, illustrative,
};
use crate::domains::random::{bound_corpus, random_distribution, random_mdp};
use crate::error::Result;
use crate::estimation::{collect_samples, empirical_model, Behavior, EstimationConfig};
use crate::mdp::{evaluate_return, solve_nominal, Policy};
use crate::oracle::{
    brute_force_regret, grid_maximin_regret, vertex_enumeration_response, GridSpec,
};
use crate::robust::robust_policy_evaluation;
use crate::uncertainty::{worst_case_response, UncertaintySet};

/// Tolerance for reference values.
pub const VALUE_TOL: f64 = 1e-9;
/// Tolerance for inequality checks on the corpus.
pub const BOUND_TOL: f64 = 1e-7;

pub const EQUIVALENCE_TRIALS: usize = 500;
pub const EQUIVALENCE_SEED: u64 = 11;
pub const CORPUS_SIZE: usize = 200;
pub const CORPUS_SEED: u64 = 17;
pub const CORPUS_GAMMA: f64 = 0.9;
pub const CHAIN_POLICIES: usize = 50;
pub const COVERAGE_REPLICATIONS: usize = 500;
pub const COVERAGE_PER_PAIR: u64 = 20;
pub const COVERAGE_DELTA: f64 = 0.05;
pub const COVERAGE_SEED: u64 = 23;
pub const COVERAGE_THRESHOLD: f64 = 0.94;

/// Replacement for the sort-based inner solver: `(p̂, budget, v) ↦ min p·v`.
pub type InnerSolver<'a> = &'a (dyn Fn(&[f64], f64, &[f64]) -> Result<f64> + Sync);

/// The production inner solver in [`InnerSolver`] form.
pub fn default_inner_solver(nominal: &[f64], budget: f64, values: &[f64]) -> Result<f64> {
    worst_case_response(nominal, budget, values).map(|(_, v)| v)
}

/// One row of the verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn value(name: &str, expected: f64, actual: f64) -> Self {
        Self::new(
            name,
            (expected - actual).abs() <= VALUE_TOL,
            format!("expected {expected}, got {actual}"),
        )
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self::new(name, false, format!("error: {err}"))
    }
}

/// Reference values of the three hand-built models.
pub fn reference_value_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    match example1_checks() {
        Ok(mut c) => out.append(&mut c),
        Err(e) => out.push(CheckResult::failed("example1", e)),
    }
    match illustrative_checks() {
        Ok(mut c) => out.append(&mut c),
        Err(e) => out.push(CheckResult::failed("illustrative", e)),
    }
    for eps in [0.1, 0.01] {
        match tightness_checks(eps) {
            Ok(mut c) => out.append(&mut c),
            Err(e) => out.push(CheckResult::failed("tightness", e)),
        }
    }
    out
}

fn example1_checks() -> Result<Vec<CheckResult>> {
    use example1::*;
    let inst = build_example1()?;
    let xi1 = inst.scenario_mdp(0)?;
    let xi2 = inst.scenario_mdp(1)?;
    let a1_a12 = Policy::deterministic(&[0, 1, 0, 0], 2)?;
    let a2 = Policy::deterministic(&[1, 1, 0, 0], 2)?;
    let mut half_rows = vec![vec![1.0, 0.0]; 4];
    half_rows[X1] = vec![0.5, 0.5];
    half_rows[X11] = vec![0.0, 1.0];
    let half = Policy::from_rows(half_rows)?;
    let cap = 1 << 16;
    let zeta_half = brute_force_regret(&inst.mdp, &inst.scenarios, &half, &inst.baseline, cap)?;
    let grid = grid_maximin_regret(
        &inst.mdp,
        &inst.scenarios,
        &inst.baseline,
        &GridSpec::default(),
    )?;
    let found = grid.policy.prob(X1, 0);
    Ok(vec![
        CheckResult::value(
            "example1: a1 then a12 under xi1",
            3.0,
            evaluate_return(&xi1, &a1_a12)?,
        ),
        CheckResult::value("example1: a2 under xi2", 2.0, evaluate_return(&xi2, &a2)?),
        CheckResult::value(
            "example1: baseline under xi2",
            1.0,
            evaluate_return(&xi2, &inst.baseline)?,
        ),
        CheckResult::value(
            "example1: best deterministic min-regret",
            0.0,
            grid.best_deterministic_zeta,
        ),
        CheckResult::value("example1: min-regret of pi(a1|x1)=1/2", 0.5, zeta_half),
        CheckResult::value("example1: grid max-min regret", 0.5, grid.zeta),
        CheckResult::new(
            "example1: grid optimum randomizes at x1",
            (found - 0.5).abs() <= VALUE_TOL,
            format!("pi(a1|x1) = {found}"),
        ),
    ])
}

fn illustrative_checks() -> Result<Vec<CheckResult>> {
    let inst = build_illustrative(0.9)?;
    let set = UncertaintySet::Scenarios(inst.scenarios.clone());
    let xi_star = inst.scenario_mdp(0)?;
    let xi1 = inst.scenario_mdp(1)?;
    let (pi_star, _) = solve_nominal(&xi_star, 1e-12)?;
    let opt = |mdp| evaluate_return(mdp, &pi_star);
    let base = |mdp| evaluate_return(mdp, &inst.baseline);
    let worst_opt = opt(&xi_star)?.min(opt(&xi1)?);
    let best_base = base(&xi_star)?.max(base(&xi1)?);
    let regret = (opt(&xi_star)? - base(&xi_star)?).min(opt(&xi1)? - base(&xi1)?);
    let cfg = SolverConfig::default();
    let rob = solve_rob_with(&inst.mdp, &set, &inst.baseline, &cfg)?;
    let rbc = solve_rbc_with_set(&inst.mdp, &set, &inst.baseline, &cfg)?;
    let decisive = [illustrative::X0, illustrative::X1];
    let same_as_opt = decisive
        .iter()
        .all(|&x| rbc.policy.action(x) == pi_star.action(x));
    Ok(vec![
        CheckResult::value(
            "illustrative: optimal policy under xi*",
            11.0,
            opt(&xi_star)?,
        ),
        CheckResult::value(
            "illustrative: worst-case return of optimal policy",
            -9.0,
            worst_opt,
        ),
        CheckResult::value(
            "illustrative: best-case return of baseline",
            10.0,
            best_base,
        ),
        CheckResult::value("illustrative: min-regret of optimal policy", 1.0, regret),
        CheckResult::new(
            "illustrative: ROB falls back to baseline",
            rob.fell_back_to_baseline && rob.policy == inst.baseline,
            format!("fell_back = {}", rob.fell_back_to_baseline),
        ),
        CheckResult::new(
            "illustrative: RBC returns the optimal policy",
            same_as_opt,
            format!("actions {:?}", rbc.policy.actions()),
        ),
    ])
}

fn tightness_checks(eps: f64) -> Result<Vec<CheckResult>> {
    let inst = build_tightness(eps)?;
    let truth = inst.scenario_mdp(0)?;
    let xi1 = inst.scenario_mdp(1)?;
    let a1 = inst.baseline.clone();
    let a2 = Policy::deterministic(&[1, 0, 0, 0, 0], 2)?;
    let cap = 1 << 16;
    let zeta_s = brute_force_regret(&inst.mdp, &inst.scenarios, &a1, &inst.baseline, cap)?;
    let grid = grid_maximin_regret(
        &inst.mdp,
        &inst.scenarios,
        &inst.baseline,
        &GridSpec::default(),
    )?;
    let (_, v_opt) = solve_nominal(&truth, 1e-12)?;
    let optimal = crate::mdp::dot(truth.initial(), &v_opt);
    let report = evaluate_with_optimum(&a1, &truth, &inst.baseline, optimal)?;
    Ok(vec![
        CheckResult::value(
            &format!("tightness eps={eps}: a1 under P*"),
            1.0,
            evaluate_return(&truth, &a1)?,
        ),
        CheckResult::value(
            &format!("tightness eps={eps}: a2 under P*"),
            1.0 + 2.0 * eps,
            evaluate_return(&truth, &a2)?,
        ),
        CheckResult::value(
            &format!("tightness eps={eps}: a1 under xi1"),
            1.0 + eps,
            evaluate_return(&xi1, &a1)?,
        ),
        CheckResult::value(
            &format!("tightness eps={eps}: a2 under xi1"),
            1.0 + eps,
            evaluate_return(&xi1, &a2)?,
        ),
        CheckResult::value(
            &format!("tightness eps={eps}: a1 attains the max-min regret"),
            grid.zeta,
            zeta_s,
        ),
        CheckResult::value(
            &format!("tightness eps={eps}: loss of a1"),
            2.0 * eps,
            report.performance_loss,
        ),
    ])
}

/// Outcome of the inner-solver comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceSummary {
    pub trials: usize,
    pub mismatches: usize,
    pub max_abs_diff: f64,
}

/// Random inner problem with `n ≤ 5`; some rows are sparse and some values
/// tie so the tie-breaking and clamping paths are exercised.
pub fn random_triple(rng: &mut impl Rng) -> (Vec<f64>, f64, Vec<f64>) {
    let n = rng.random_range(1..=5);
    let mut p = random_distribution(n, rng);
    if n > 1 && rng.random_bool(0.4) {
        let k = rng.random_range(0..n);
        p[k] = 0.0;
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
    }
    let budget = match rng.random_range(0..6) {
        0 => 0.0,
        1 => 2.0,
        _ => rng.random_range(0.0..2.0),
    };
    let coarse = rng.random_bool(0.3);
    let v = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..1.0);
            if coarse {
                (x * 2.0).round() / 2.0
            } else {
                x
            }
        })
        .collect();
    (p, budget, v)
}

/// Compares `solver` against vertex enumeration on `trials` seeded triples.
pub fn inner_equivalence(
    trials: usize,
    seed: u64,
    solver: InnerSolver<'_>,
) -> Result<EquivalenceSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    let mut max_abs_diff: f64 = 0.0;
    for _ in 0..trials {
        let (p, b, v) = random_triple(&mut rng);
        let oracle = vertex_enumeration_response(&p, b, &v)?;
        let diff = match solver(&p, b, &v) {
            Ok(got) => (got - oracle).abs(),
            Err(_) => f64::INFINITY,
        };
        if !(diff <= VALUE_TOL) {
            mismatches += 1;
        }
        max_abs_diff = max_abs_diff.max(diff);
    }
    Ok(EquivalenceSummary {
        trials,
        mismatches,
        max_abs_diff,
    })
}

/// Outcome of the bound-compliance corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusSummary {
    pub instances: usize,
    pub exp_bound_violations: usize,
    pub rob_bound_violations: usize,
    pub rwa_bound_violations: usize,
    pub rob_unsafe: usize,
    pub rwa_unsafe: usize,
    pub rbc_unsafe: usize,
    pub rbc_certificate_violations: usize,
    pub chain_checks: usize,
    pub chain_violations: usize,
    /// EXP is not guaranteed safe; reported for context only.
    pub exp_unsafe: usize,
    pub errors: Vec<String>,
}

impl CorpusSummary {
    pub fn bounds_hold(&self) -> bool {
        self.exp_bound_violations + self.rob_bound_violations + self.rwa_bound_violations == 0
    }

    pub fn safety_holds(&self) -> bool {
        self.rob_unsafe + self.rwa_unsafe + self.rbc_unsafe + self.rbc_certificate_violations == 0
    }

    pub fn chain_holds(&self) -> bool {
        self.chain_violations == 0
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.bounds_hold() && self.safety_holds() && self.chain_holds()
    }

    fn merge(mut self, o: Self) -> Self {
        self.instances += o.instances;
        self.exp_bound_violations += o.exp_bound_violations;
        self.rob_bound_violations += o.rob_bound_violations;
        self.rwa_bound_violations += o.rwa_bound_violations;
        self.rob_unsafe += o.rob_unsafe;
        self.rwa_unsafe += o.rwa_unsafe;
        self.rbc_unsafe += o.rbc_unsafe;
        self.rbc_certificate_violations += o.rbc_certificate_violations;
        self.chain_checks += o.chain_checks;
        self.chain_violations += o.chain_violations;
        self.exp_unsafe += o.exp_unsafe;
        self.errors.extend(o.errors);
        self
    }
}

fn check_instance(
    idx: usize,
    inst: &crate::domains::CorpusInstance,
    seed: u64,
) -> Result<CorpusSummary> {
    let mut s = CorpusSummary {
        instances: 1,
        ..Default::default()
    };
    let cfg = SolverConfig::default();
    let truth = &inst.true_mdp;
    let set = UncertaintySet::l1(inst.estimated.transition().clone(), inst.error.clone())?;
    let (_, v_opt) = solve_nominal(truth, 1e-12)?;
    let optimal = crate::mdp::dot(truth.initial(), &v_opt);
    let loss = |p: &Policy| -> Result<(f64, bool)> {
        let r = evaluate_with_optimum(p, truth, &inst.baseline, optimal)?;
        Ok((r.performance_loss, r.is_safe))
    };
    let rhs = |k| bound_rhs(k, truth, &inst.error, &inst.baseline);

    let exp = solve_exp(&inst.estimated)?;
    let (phi, safe) = loss(&exp.policy)?;
    s.exp_bound_violations += usize::from(phi > rhs(BoundKind::Nominal)? + BOUND_TOL);
    s.exp_unsafe += usize::from(!safe);

    let rob = solve_rob_with(&inst.estimated, &set, &inst.baseline, &cfg)?;
    let (phi, safe) = loss(&rob.policy)?;
    s.rob_bound_violations += usize::from(phi > rhs(BoundKind::Robust)? + BOUND_TOL);
    s.rob_unsafe += usize::from(!safe);

    let rwa = solve_rwa_with(&inst.estimated, &set, &inst.baseline, &cfg)?;
    let (phi, safe) = loss(&rwa.policy)?;
    s.rwa_bound_violations += usize::from(phi > rhs(BoundKind::RewardAdjusted)? + BOUND_TOL);
    s.rwa_unsafe += usize::from(!safe);

    let rbc = solve_rbc_with_set(&inst.estimated, &set, &inst.baseline, &cfg)?;
    let (_, safe) = loss(&rbc.policy)?;
    s.rbc_unsafe += usize::from(!safe);
    let improvement =
        evaluate_return(truth, &rbc.policy)? - evaluate_return(truth, &inst.baseline)?;
    let zeta = rbc.regret_certificate.unwrap_or(f64::NAN);
    s.rbc_certificate_violations += usize::from(!(zeta <= improvement + BOUND_TOL));

    let adjusted = reward_adjusted_mdp(&inst.estimated, &inst.error)?;
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let (n, m) = (truth.n_states(), truth.n_actions());
    for _ in 0..CHAIN_POLICIES {
        let pi = Policy::from_rows((0..n).map(|_| random_distribution(m, &mut rng)).collect())?;
        let lower = evaluate_return(&adjusted, &pi)?;
        let (_, robust) = robust_policy_evaluation(&inst.estimated, &set, &pi, 1e-12)?;
        let actual = evaluate_return(truth, &pi)?;
        s.chain_checks += 1;
        s.chain_violations +=
            usize::from(lower > robust + BOUND_TOL || robust > actual + BOUND_TOL);
    }
    Ok(s)
}

/// Runs every method on `count` seeded corpus instances and checks bounds,
/// safety, certificates and the adjusted/robust/true return chain.
pub fn corpus_compliance(seed: u64, count: usize) -> Result<CorpusSummary> {
    let corpus = bound_corpus(seed, count, CORPUS_GAMMA)?;
    let parts: Vec<CorpusSummary> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            check_instance(i, inst, seed).unwrap_or_else(|e| CorpusSummary {
                instances: 1,
                errors: vec![format!("instance {i}: {e}")],
                ..Default::default()
            })
        })
        .collect();
    Ok(parts
        .into_iter()
        .fold(CorpusSummary::default(), CorpusSummary::merge))
}

/// Outcome of the coverage replications.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSummary {
    pub replications: usize,
    pub contained: usize,
}

impl CoverageSummary {
    pub fn rate(&self) -> f64 {
        self.contained as f64 / self.replications.max(1) as f64
    }
}

/// Fraction of replications whose sampled L1 set contains the true kernel
/// of a fixed random 4-state, 2-action model.
pub fn weissman_coverage(
    replications: usize,
    per_pair: u64,
    delta: f64,
    seed: u64,
) -> Result<CoverageSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_mdp(4, 2, 0.9, &mut rng)?;
    let hits: Vec<bool> = (0..replications)
        .into_par_iter()
        .map(|rep| -> Result<bool> {
            let cfg = EstimationConfig {
                delta,
                behavior: Behavior::PerPair { per_pair },
                seed: seed.wrapping_add(1 + rep as u64),
            };
            let counts = collect_samples(&truth, &cfg)?;
            let (hat, e) = empirical_model(&truth, &counts, &cfg)?;
            UncertaintySet::l1(hat.transition().clone(), e)?.contains(truth.transition())
        })
        .collect::<Result<_>>()?;
    Ok(CoverageSummary {
        replications,
        contained: hits.iter().filter(|&&h| h).count(),
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Full verification with an injectable inner solver.
pub fn verify_with(solver: InnerSolver<'_>) -> Vec<CheckResult> {
    let mut out = reference_value_checks();

    let (eq, secs) = timed(|| inner_equivalence(EQUIVALENCE_TRIALS, EQUIVALENCE_SEED, solver));
    out.push(match eq {
        Ok(s) => CheckResult::new(
            "inner solver matches vertex enumeration",
            s.mismatches == 0,
            format!(
                "{} trials, {} mismatches, max |diff| {:.3e}, {secs:.2}s",
                s.trials, s.mismatches, s.max_abs_diff
            ),
        ),
        Err(e) => CheckResult::failed("inner solver matches vertex enumeration", e),
    });

    let (corpus, secs) = timed(|| corpus_compliance(CORPUS_SEED, CORPUS_SIZE));
    match corpus {
        Ok(s) => {
            out.push(CheckResult::new(
                "corpus: performance-loss bounds",
                s.errors.is_empty() && s.bounds_hold(),
                format!(
                    "violations EXP {} ROB {} RWA {} over {} instances, {secs:.2}s",
                    s.exp_bound_violations,
                    s.rob_bound_violations,
                    s.rwa_bound_violations,
                    s.instances
                ),
            ));
            out.push(CheckResult::new(
                "corpus: safety of ROB, RWA, RBC",
                s.errors.is_empty() && s.safety_holds(),
                format!(
                    "unsafe ROB {} RWA {} RBC {}, certificate violations {} (EXP unsafe {})",
                    s.rob_unsafe,
                    s.rwa_unsafe,
                    s.rbc_unsafe,
                    s.rbc_certificate_violations,
                    s.exp_unsafe
                ),
            ));
            out.push(CheckResult::new(
                "corpus: adjusted <= robust <= true return",
                s.errors.is_empty() && s.chain_holds(),
                format!(
                    "{} violations in {} checks",
                    s.chain_violations, s.chain_checks
                ),
            ));
            if !s.errors.is_empty() {
                out.push(CheckResult::new(
                    "corpus: solver errors",
                    false,
                    s.errors.join("; "),
                ));
            }
        }
        Err(e) => out.push(CheckResult::failed("corpus", e)),
    }

    let (cov, secs) = timed(|| {
        weissman_coverage(
            COVERAGE_REPLICATIONS,
            COVERAGE_PER_PAIR,
            COVERAGE_DELTA,
            COVERAGE_SEED,
        )
    });
    out.push(match cov {
        Ok(s) => CheckResult::new(
            "error-function coverage",
            s.rate() >= COVERAGE_THRESHOLD,
            format!(
                "{}/{} contained ({:.1}%), need {:.0}%, {secs:.2}s",
                s.contained,
                s.replications,
                100.0 * s.rate(),
                100.0 * COVERAGE_THRESHOLD
            ),
        ),
        Err(e) => CheckResult::failed("error-function coverage", e),
    });
    out
}

/// Full verification with the production inner solver.
pub fn verify() -> Vec<CheckResult> {
    verify_with(&default_inner_solver)
}

/// Plain-text table, one row per check.
pub fn render_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for r in results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{tag}  {:<width$}  {}", r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let _ = writeln!(s, "{} checks, {} failed", results.len(), failed);
    s
}

/// True when every check passed.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}
