//! Seeded random models and the bound-verification corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::mdp::{solve_nominal, Kernel, Mdp, Policy};
use crate::uncertainty::ErrorFunction;

/// Uniform point of the simplex (normalized Exp(1) draws).
pub fn random_distribution(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|v| v / total).collect()
}

/// Random dense model with rewards uniform in `[−1, 1]`.
pub fn random_mdp(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rng: &mut impl Rng,
) -> Result<Mdp> {
    let kernel = Kernel::from_fn(n_states, n_actions, |_, _| {
        random_distribution(n_states, rng)
    })?;
    let reward = (0..n_states * n_actions)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let initial = random_distribution(n_states, rng);
    Mdp::new(n_states, n_actions, reward, kernel, initial, gamma)
}

/// Optimal policy with roughly half of the states switched to a random action.
pub fn perturbed_optimal_baseline(mdp: &Mdp, rng: &mut impl Rng) -> Result<Policy> {
    let (opt, _) = solve_nominal(mdp, 1e-10)?;
    let actions: Vec<usize> = opt
        .actions()
        .expect("nominal solutions are deterministic")
        .into_iter()
        .map(|a| {
            if rng.random_bool(0.5) {
                rng.random_range(0..mdp.n_actions())
            } else {
                a
            }
        })
        .collect();
    Policy::deterministic(&actions, mdp.n_actions())
}

/// Random model with its perturbed-optimal baseline, for the `random` domain.
pub fn build_random(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
) -> Result<(Mdp, Policy)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mdp = random_mdp(n_states, n_actions, gamma, &mut rng)?;
    let baseline = perturbed_optimal_baseline(&mdp, &mut rng)?;
    Ok((mdp, baseline))
}

/// A true model, an estimate whose L1 set provably contains the truth, and a
/// baseline whose transitions are estimated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusInstance {
    pub true_mdp: Mdp,
    pub estimated: Mdp,
    pub error: ErrorFunction,
    pub baseline: Policy,
}

/// Draws one corpus instance: 2–6 states, 2–3 actions. Non-baseline rows are
/// mixed with a random distribution; each error is the realized L1 distance
/// plus a random slack, so containment holds by construction.
pub fn corpus_instance(gamma: f64, rng: &mut impl Rng) -> Result<CorpusInstance> {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(2..=3);
    let true_mdp = random_mdp(n, m, gamma, rng)?;
    let baseline = perturbed_optimal_baseline(&true_mdp, rng)?;
    let base = baseline.actions().expect("deterministic baseline");
    let mut probs = Vec::with_capacity(n * m * n);
    let mut budget = Vec::with_capacity(n * m);
    for x in 0..n {
        for a in 0..m {
            let truth = true_mdp.transition().row(x, a);
            let slack = rng.random_range(0.0..0.2);
            if a == base[x] {
                probs.extend_from_slice(truth);
                budget.push(slack);
                continue;
            }
            let t = rng.random_range(0.0..0.8);
            let noise = random_distribution(n, rng);
            let row: Vec<f64> = truth
                .iter()
                .zip(&noise)
                .map(|(p, q)| (1.0 - t) * p + t * q)
                .collect();
            let dist: f64 = row.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum();
            probs.extend_from_slice(&row);
            budget.push(dist + slack);
        }
    }
    let estimated = true_mdp.with_kernel(Kernel::with_tolerance(n, m, probs, 1e-9)?)?;
    Ok(CorpusInstance {
        true_mdp,
        estimated,
        error: ErrorFunction::new(n, m, budget)?,
        baseline,
    })
}

/// `count` seeded corpus instances with discount `gamma`.
pub fn bound_corpus(seed: u64, count: usize, gamma: f64) -> Result<Vec<CorpusInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| corpus_instance(gamma, &mut rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::UncertaintySet;

    #[test]
    fn corpus_contains_truth() {
        for inst in bound_corpus(1, 30, 0.9).unwrap() {
            let set = UncertaintySet::l1(inst.estimated.transition().clone(), inst.error.clone())
                .unwrap();
            assert!(set.contains(inst.true_mdp.transition()).unwrap());
            let base = inst.baseline.actions().unwrap();
            for (x, &a) in base.iter().enumerate() {
                assert_eq!(
                    inst.estimated.transition().row(x, a),
                    inst.true_mdp.transition().row(x, a)
                );
            }
        }
    }

    #[test]
    fn random_domain_is_seeded() {
        assert_eq!(
            build_random(3, 5, 2, 0.9).unwrap(),
            build_random(3, 5, 2, 0.9).unwrap()
        );
    }
}
