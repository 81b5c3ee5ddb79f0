//! Fixtures shared by the solver benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spi_core::domains::random::{random_distribution, random_mdp};
use spi_core::{ErrorFunction, Mdp, Policy, UncertaintySet};

/// A random model, an L1 set of constant `budget` around it and a fixed baseline.
pub struct Fixture {
    pub mdp: Mdp,
    pub set: UncertaintySet,
    pub baseline: Policy,
}

pub fn fixture(n_states: usize, n_actions: usize, gamma: f64, budget: f64, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mdp = random_mdp(n_states, n_actions, gamma, &mut rng).expect("valid shape");
    let set = UncertaintySet::l1(
        mdp.transition().clone(),
        ErrorFunction::constant(n_states, n_actions, budget),
    )
    .expect("matching shape");
    let baseline = Policy::deterministic(&vec![0; n_states], n_actions).expect("action 0 exists");
    Fixture { mdp, set, baseline }
}

/// One `(nominal row, value vector)` pair of length `n`.
pub fn inner_problem(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_distribution(n, &mut rng);
    let v = random_distribution(n, &mut rng)
        .into_iter()
        .map(|x| 100.0 * x)
        .collect();
    (p, v)
}
