//! Experiment sweeps over sample counts, trials and methods, with CSV output.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{evaluate_with_optimum, solve_method, Method, SolverConfig};
use crate::domains::{
    build_energy, build_example1, build_grid, build_illustrative, build_random,
    instances::build_tightness_with, EnergyConfig, EnergyDomain, GridConfig, ScenarioInstance,
};
use crate::error::{Result, SpiError};
use crate::estimation::{collect_samples, empirical_model, Behavior, EstimationConfig};
use crate::mdp::{dot, solve_nominal, Mdp, Policy};
use crate::oracle::{grid_maximin_regret, GridSpec};
use crate::uncertainty::{ErrorFunction, UncertaintySet};

/// CSV header of experiment output.
pub const CSV_HEADER: &str = "domain,method,samples,trial,seed,true_return,baseline_return,optimal_return,improvement_pct,is_safe,fell_back,runtime_ms";

/// Size of the `random` domain.
pub const RANDOM_DOMAIN_SHAPE: (usize, usize) = (8, 3);

/// Default tightness gap of the `tightness` domain.
pub const TIGHTNESS_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    Grid,
    Energy,
    Example1,
    Illustrative,
    Tightness,
    Random,
}

impl Domain {
    pub const ALL: [Domain; 6] = [
        Domain::Grid,
        Domain::Energy,
        Domain::Example1,
        Domain::Illustrative,
        Domain::Tightness,
        Domain::Random,
    ];

    /// Discount used when no override is given.
    pub fn default_gamma(self) -> f64 {
        match self {
            Domain::Grid | Domain::Energy => 0.99,
            Domain::Example1 => 1.0,
            Domain::Illustrative | Domain::Tightness | Domain::Random => 0.9,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Grid => "grid",
            Domain::Energy => "energy",
            Domain::Example1 => "example1",
            Domain::Illustrative => "illustrative",
            Domain::Tightness => "tightness",
            Domain::Random => "random",
        })
    }
}

impl FromStr for Domain {
    type Err = SpiError;

    fn from_str(s: &str) -> Result<Self> {
        Domain::ALL
            .into_iter()
            .find(|d| d.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| SpiError::InvalidArgument(format!("unknown domain `{s}`")))
    }
}

/// How the sample count of a sweep point is spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// `samples` transitions drawn for every (state, action).
    PerPair,
    /// `samples` transitions in total from uniform-random-policy episodes.
    Uniform,
}

impl FromStr for Sampling {
    type Err = SpiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per-pair" | "per_pair" | "perpair" => Ok(Sampling::PerPair),
            "uniform" => Ok(Sampling::Uniform),
            other => Err(SpiError::InvalidArgument(format!(
                "unknown sampling mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub methods: Vec<Method>,
    /// Strictly increasing.
    pub sample_counts: Vec<u64>,
    pub trials: usize,
    pub delta: f64,
    pub gamma: Option<f64>,
    pub base_seed: u64,
    pub sampling: Sampling,
    /// Fill `runtime_ms`; off by default so output is reproducible.
    pub record_runtime: bool,
    /// On scenario domains, replace RBC by the grid max-min regret oracle.
    pub oracle: bool,
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    pub fn new(domain: Domain) -> Self {
        Self {
            domain,
            methods: Method::ALL.to_vec(),
            sample_counts: vec![200, 400, 800, 1600, 3200],
            trials: 40,
            delta: 0.05,
            gamma: None,
            base_seed: 7,
            sampling: Sampling::Uniform,
            record_runtime: false,
            oracle: false,
            solver: SolverConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(SpiError::InvalidArgument(
                "trials must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(SpiError::InvalidArgument("no methods requested".into()));
        }
        if self.sample_counts.is_empty() || self.sample_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpiError::InvalidArgument(
                "sample counts must be nonempty and strictly increasing".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SpiError::InvalidArgument(format!(
                "delta {} outside (0, 1)",
                self.delta
            )));
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub domain: String,
    pub method: String,
    pub samples: u64,
    pub trial: usize,
    pub seed: u64,
    pub true_return: f64,
    pub baseline_return: f64,
    pub optimal_return: f64,
    pub improvement_pct: f64,
    pub is_safe: bool,
    pub fell_back: bool,
    pub runtime_ms: f64,
    /// Whether the trial's uncertainty set contained the true kernel.
    #[serde(skip)]
    pub contained: Option<bool>,
    /// RBC certificate, or the oracle's max-min regret.
    #[serde(skip)]
    pub regret_certificate: Option<f64>,
}

/// `100 (true − base) / (opt − base)` when the gap exceeds 1e-9, else 0.
pub fn improvement_pct(true_return: f64, baseline_return: f64, optimal_return: f64) -> f64 {
    let gap = optimal_return - baseline_return;
    if gap > 1e-9 {
        100.0 * (true_return - baseline_return) / gap
    } else {
        0.0
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: `base_seed ⊕ hash(samples, trial)`.
pub fn trial_seed(base_seed: u64, samples: u64, trial: usize) -> u64 {
    base_seed ^ splitmix64(splitmix64(samples) ^ trial as u64)
}

enum Source {
    /// Sample the full model.
    Full,
    /// Sample the price chain only.
    Energy(Box<EnergyDomain>),
    /// Fixed scenario set; nothing is sampled.
    Scenarios(Box<ScenarioInstance>),
}

/// The true model of a domain with everything needed to run trials.
pub struct Problem {
    pub domain: Domain,
    pub true_mdp: Mdp,
    pub baseline: Policy,
    pub optimal_return: f64,
    source: Source,
}

impl Problem {
    pub fn build(domain: Domain, gamma: Option<f64>, seed: u64) -> Result<Self> {
        let g = gamma.unwrap_or(domain.default_gamma());
        let (true_mdp, baseline, source) = match domain {
            Domain::Grid => {
                let cfg = GridConfig {
                    seed,
                    gamma: g,
                    ..GridConfig::default()
                };
                let (mdp, base) = build_grid(&cfg)?;
                (mdp, base, Source::Full)
            }
            Domain::Energy => {
                let d = build_energy(&EnergyConfig {
                    gamma: g,
                    ..EnergyConfig::default()
                })?;
                (
                    d.mdp.clone(),
                    d.baseline.clone(),
                    Source::Energy(Box::new(d)),
                )
            }
            Domain::Random => {
                let (n, m) = RANDOM_DOMAIN_SHAPE;
                let (mdp, base) = build_random(seed, n, m, g)?;
                (mdp, base, Source::Full)
            }
            Domain::Example1 | Domain::Illustrative | Domain::Tightness => {
                let inst = match domain {
                    Domain::Example1 => {
                        if gamma.is_some_and(|v| v != 1.0) {
                            return Err(SpiError::InvalidArgument(
                                "example1 is undiscounted; no discount override".into(),
                            ));
                        }
                        build_example1()?
                    }
                    Domain::Illustrative => build_illustrative(g)?,
                    _ => build_tightness_with(TIGHTNESS_EPSILON, g)?,
                };
                (
                    inst.mdp.clone(),
                    inst.baseline.clone(),
                    Source::Scenarios(Box::new(inst)),
                )
            }
        };
        let (_, opt_values) = solve_nominal(&true_mdp, 1e-10)?;
        let optimal_return = dot(true_mdp.initial(), &opt_values);
        Ok(Self {
            domain,
            true_mdp,
            baseline,
            optimal_return,
            source,
        })
    }

    /// The estimated model, its error function and uncertainty set for one
    /// trial.
    pub fn estimate(
        &self,
        samples: u64,
        sampling: Sampling,
        delta: f64,
        seed: u64,
    ) -> Result<(Mdp, ErrorFunction, UncertaintySet)> {
        let behavior = match sampling {
            Sampling::PerPair => Behavior::PerPair { per_pair: samples },
            Sampling::Uniform => Behavior::UniformPolicy {
                total_samples: samples,
            },
        };
        let cfg = EstimationConfig {
            delta,
            behavior,
            seed,
        };
        match &self.source {
            Source::Full => {
                let counts = collect_samples(&self.true_mdp, &cfg)?;
                let (hat, e) = empirical_model(&self.true_mdp, &counts, &cfg)?;
                let set = UncertaintySet::l1(hat.transition().clone(), e.clone())?;
                Ok((hat, e, set))
            }
            Source::Energy(d) => {
                let counts = collect_samples(&d.price_mdp, &cfg)?;
                let (price_hat, price_e) = empirical_model(&d.price_mdp, &counts, &cfg)?;
                d.lift_estimate(price_hat.transition(), &price_e)
            }
            Source::Scenarios(inst) => {
                let set = UncertaintySet::Scenarios(inst.scenarios.clone());
                Ok((inst.mdp.clone(), set.l1_radius(), set))
            }
        }
    }

    fn scenario_instance(&self) -> Option<&ScenarioInstance> {
        match &self.source {
            Source::Scenarios(inst) => Some(inst),
            _ => None,
        }
    }
}

struct Outcome {
    policy: Policy,
    fell_back: bool,
    certificate: Option<f64>,
}

fn run_method(
    problem: &Problem,
    cfg: &ExperimentConfig,
    method: Method,
    estimated: &Mdp,
    set: &UncertaintySet,
) -> Result<Outcome> {
    if cfg.oracle && method == Method::Rbc {
        if let Some(inst) = problem.scenario_instance() {
            let res = grid_maximin_regret(
                &inst.mdp,
                &inst.scenarios,
                &inst.baseline,
                &GridSpec::default(),
            )?;
            let fell_back = res.policy == problem.baseline;
            return Ok(Outcome {
                policy: res.policy,
                fell_back,
                certificate: Some(res.zeta),
            });
        }
    }
    let report = solve_method(method, estimated, set, &problem.baseline, &cfg.solver)?;
    Ok(Outcome {
        policy: report.policy,
        fell_back: report.fell_back_to_baseline,
        certificate: report.regret_certificate,
    })
}

fn run_trial(
    problem: &Problem,
    cfg: &ExperimentConfig,
    samples: u64,
    trial: usize,
) -> Vec<ExperimentRecord> {
    let seed = trial_seed(cfg.base_seed, samples, trial);
    let estimate = problem.estimate(samples, cfg.sampling, cfg.delta, seed);
    let contained = estimate
        .as_ref()
        .ok()
        .and_then(|(_, _, set)| set.contains(problem.true_mdp.transition()).ok());
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = estimate
                .as_ref()
                .map_err(|e| SpiError::InvalidArgument(e.to_string()))
                .and_then(|(hat, _, set)| {
                    let out = run_method(problem, cfg, method, hat, set)?;
                    let eval = evaluate_with_optimum(
                        &out.policy,
                        &problem.true_mdp,
                        &problem.baseline,
                        problem.optimal_return,
                    )?;
                    Ok((out, eval))
                });
            let runtime_ms = if cfg.record_runtime {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            let mut record = ExperimentRecord {
                domain: problem.domain.to_string(),
                method: method.to_string(),
                samples,
                trial,
                seed,
                true_return: f64::NAN,
                baseline_return: f64::NAN,
                optimal_return: problem.optimal_return,
                improvement_pct: f64::NAN,
                is_safe: false,
                fell_back: false,
                runtime_ms,
                contained,
                regret_certificate: None,
            };
            if let Ok((out, eval)) = outcome {
                record.true_return = eval.true_return;
                record.baseline_return = eval.baseline_true_return;
                record.improvement_pct = improvement_pct(
                    eval.true_return,
                    eval.baseline_true_return,
                    problem.optimal_return,
                );
                record.is_safe = eval.is_safe;
                record.fell_back = out.fell_back;
                record.regret_certificate = out.certificate;
            }
            record
        })
        .collect()
}

/// Runs the sweep; records come back in (samples, trial, method) order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let problem = Problem::build(cfg.domain, cfg.gamma, cfg.base_seed)?;
    let jobs: Vec<(u64, usize)> = cfg
        .sample_counts
        .iter()
        .flat_map(|&s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let rows: Vec<Vec<ExperimentRecord>> = jobs
        .par_iter()
        .map(|&(s, t)| run_trial(&problem, cfg, s, t))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Writes records with the fixed header, via a temporary file renamed into
/// place.
pub fn write_csv(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| {
        SpiError::InvalidArgument(format!("`{}` is not a file path", path.display()))
    })?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> Result<()> {
        let mut w = csv::Writer::from_path(&tmp)?;
        if records.is_empty() {
            w.write_record(CSV_HEADER.split(','))?;
        }
        for r in records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs the sweep and writes the CSV.
pub fn run_to_csv(cfg: &ExperimentConfig, path: &Path) -> Result<Vec<ExperimentRecord>> {
    let records = run_experiment(cfg)?;
    write_csv(path, &records)?;
    Ok(records)
}

/// Aggregate over the trials of one (method, samples) point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub samples: u64,
    pub trials: usize,
    pub failed: usize,
    pub mean_improvement: f64,
    pub min_improvement: f64,
    pub safe_fraction: f64,
    pub fallback_fraction: f64,
}

/// Means per (method, samples), ordered by samples then first appearance of
/// the method. Failed rows are excluded from the means and counted.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(u64, String)> = Vec::new();
    for r in records {
        let k = (r.samples, r.method.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(samples, method)| {
            let rows: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.samples == samples && r.method == method)
                .collect();
            let ok: Vec<&&ExperimentRecord> = rows
                .iter()
                .filter(|r| r.improvement_pct.is_finite())
                .collect();
            let k = ok.len().max(1) as f64;
            SummaryRow {
                method,
                samples,
                trials: rows.len(),
                failed: rows.len() - ok.len(),
                mean_improvement: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| r.improvement_pct).sum::<f64>() / k
                },
                min_improvement: ok
                    .iter()
                    .map(|r| r.improvement_pct)
                    .fold(f64::INFINITY, f64::min),
                safe_fraction: ok.iter().filter(|r| r.is_safe).count() as f64 / k,
                fallback_fraction: ok.iter().filter(|r| r.fell_back).count() as f64 / k,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improvement_normalization() {
        assert_eq!(improvement_pct(10.0, 10.0, 20.0), 0.0);
        assert_eq!(improvement_pct(20.0, 10.0, 20.0), 100.0);
        assert_eq!(improvement_pct(5.0, 10.0, 20.0), -50.0);
        assert_eq!(improvement_pct(5.0, 10.0, 10.0), 0.0);
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for s in [200u64, 400, 800] {
            for t in 0..40 {
                assert!(seen.insert(trial_seed(7, s, t)));
            }
        }
    }

    #[test]
    fn domain_names_round_trip() {
        for d in Domain::ALL {
            assert_eq!(d.to_string().parse::<Domain>().unwrap(), d);
        }
    }

    #[test]
    fn rejects_unsorted_counts() {
        let mut cfg = ExperimentConfig::new(Domain::Random);
        cfg.sample_counts = vec![10, 10];
        assert!(run_experiment(&cfg).is_err());
        cfg.sample_counts = vec![10];
        cfg.trials = 0;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn header_matches_record_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut cfg = ExperimentConfig::new(Domain::Random);
        cfg.sample_counts = vec![5];
        cfg.trials = 1;
        run_to_csv(&cfg, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 1 + 4);
    }
}
