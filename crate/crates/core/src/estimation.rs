//! Sampling transitions from a true model and building the empirical model
//! with its concentration-based L1 error function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiError};
use crate::mdp::{Kernel, Mdp, MdpParts};
use crate::uncertainty::{ErrorFunction, MAX_BUDGET};

/// Transition counts `N(x, a, x')`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    n_states: usize,
    n_actions: usize,
    counts: Vec<u64>,
}

impl SampleCounts {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            counts: vec![0; n_states * n_actions * n_states],
        }
    }

    pub fn from_counts(n_states: usize, n_actions: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_states * n_actions * n_states {
            return Err(SpiError::Dimension(format!(
                "count table has {} entries, expected {}",
                counts.len(),
                n_states * n_actions * n_states
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            counts,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn count(&self, x: usize, a: usize, y: usize) -> u64 {
        self.counts[(x * self.n_actions + a) * self.n_states + y]
    }

    pub fn row(&self, x: usize, a: usize) -> &[u64] {
        let start = (x * self.n_actions + a) * self.n_states;
        &self.counts[start..start + self.n_states]
    }

    /// `N(x, a)`.
    pub fn visits(&self, x: usize, a: usize) -> u64 {
        self.row(x, a).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn record(&mut self, x: usize, a: usize, y: usize) {
        self.counts[(x * self.n_actions + a) * self.n_states + y] += 1;
    }
}

/// How transitions are gathered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    /// Episodes from `p0` under the uniform random policy until
    /// `total_samples` transitions have been observed.
    UniformPolicy { total_samples: u64 },
    /// `per_pair` independent draws for every (state, action).
    PerPair { per_pair: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    /// Confidence parameter of the error function.
    pub delta: f64,
    pub behavior: Behavior,
    pub seed: u64,
}

impl EstimationConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SpiError::InvalidArgument(format!(
                "delta {} outside (0, 1)",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Threshold on `γ^H` that fixes the episode length.
const EPISODE_TAIL: f64 = 1e-3;

/// Episode length `H` with `γ^H ≤ 1e-3`; `None` for undiscounted models.
pub fn episode_horizon(gamma: f64) -> Option<usize> {
    (gamma < 1.0).then(|| (EPISODE_TAIL.ln() / gamma.ln()).ceil().max(1.0) as usize)
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    row.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Gathers transitions from `true_mdp`; deterministic for a fixed seed.
pub fn collect_samples(true_mdp: &Mdp, cfg: &EstimationConfig) -> Result<SampleCounts> {
    cfg.validate()?;
    let (n, m) = (true_mdp.n_states(), true_mdp.n_actions());
    let kernel = true_mdp.transition();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counts = SampleCounts::zeros(n, m);
    match cfg.behavior {
        Behavior::PerPair { per_pair } => {
            for x in 0..n {
                for a in 0..m {
                    multinomial_into(kernel.row(x, a), per_pair, &mut rng, |y, k| {
                        counts.counts[(x * m + a) * n + y] += k
                    })?;
                }
            }
        }
        Behavior::UniformPolicy { total_samples } => {
            let start = cumulative(true_mdp.initial());
            let rows: Vec<Vec<f64>> = (0..n * m)
                .map(|i| cumulative(kernel.row(i / m, i % m)))
                .collect();
            let absorbing = true_mdp.absorbing_states();
            let horizon = episode_horizon(true_mdp.discount());
            let mut taken = 0u64;
            while taken < total_samples {
                let mut x = draw(&start, &mut rng);
                let mut t = 0usize;
                loop {
                    if horizon.is_some_and(|h| t >= h) || taken >= total_samples {
                        break;
                    }
                    if horizon.is_none() && absorbing[x] {
                        break;
                    }
                    let a = rng.random_range(0..m);
                    let y = draw(&rows[x * m + a], &mut rng);
                    counts.record(x, a, y);
                    taken += 1;
                    t += 1;
                    x = y;
                }
                if horizon.is_none() && t == 0 {
                    // p0 sits on absorbing states only; nothing can be observed.
                    break;
                }
            }
        }
    }
    Ok(counts)
}

/// Multinomial draw of `trials` outcomes from `row` by a chain of
/// conditional binomials.
fn multinomial_into(
    row: &[f64],
    trials: u64,
    rng: &mut impl Rng,
    mut add: impl FnMut(usize, u64),
) -> Result<()> {
    let mut remaining = trials;
    let mut mass = 1.0_f64;
    let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (y, &p) in row.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let k = if y == last || p >= mass {
            remaining
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| SpiError::InvalidArgument(format!("binomial draw: {e}")))?
                .sample(rng)
        };
        add(y, k);
        remaining -= k;
        mass -= p;
    }
    Ok(())
}

/// `min(2, sqrt((2/N) ln(|X||A| 2^|X| / δ)))`, and 2 when `N = 0`.
pub fn weissman_budget(visits: u64, n_states: usize, n_actions: usize, delta: f64) -> f64 {
    if visits == 0 {
        return MAX_BUDGET;
    }
    let log_term = ((n_states * n_actions) as f64).ln() + n_states as f64 * std::f64::consts::LN_2
        - delta.ln();
    (2.0 / visits as f64 * log_term).sqrt().min(MAX_BUDGET)
}

/// Empirical model and error function from counts. Rewards, discount,
/// initial distribution and reward bound come from `shape`. Unvisited pairs
/// get a uniform row with budget 2; in undiscounted models the absorbing
/// states of `shape` are known terminals and keep their exact self-loops.
pub fn empirical_model(
    shape: &Mdp,
    samples: &SampleCounts,
    cfg: &EstimationConfig,
) -> Result<(Mdp, ErrorFunction)> {
    cfg.validate()?;
    let (n, m) = (shape.n_states(), shape.n_actions());
    if samples.n_states != n || samples.n_actions != m {
        return Err(SpiError::Dimension(
            "sample counts differ from model shape".into(),
        ));
    }
    let known_terminal: Vec<bool> = if shape.discount() >= 1.0 {
        shape.absorbing_states()
    } else {
        vec![false; n]
    };
    let mut probs = Vec::with_capacity(n * m * n);
    let mut budget = Vec::with_capacity(n * m);
    for x in 0..n {
        for a in 0..m {
            if known_terminal[x] {
                probs.extend_from_slice(shape.transition().row(x, a));
                budget.push(0.0);
                continue;
            }
            let visits = samples.visits(x, a);
            if visits == 0 {
                probs.extend(std::iter::repeat_n(1.0 / n as f64, n));
            } else {
                probs.extend(samples.row(x, a).iter().map(|&c| c as f64 / visits as f64));
            }
            budget.push(weissman_budget(visits, n, m, cfg.delta));
        }
    }
    let kernel = Kernel::with_tolerance(n, m, probs, 1e-9)?;
    let mdp = Mdp::from_parts(MdpParts {
        n_states: n,
        n_actions: m,
        reward: shape.rewards().to_vec(),
        transition: kernel,
        initial: shape.initial().to_vec(),
        discount: shape.discount(),
        r_max: Some(shape.r_max()),
        absorbing: shape.is_absorbing(),
    })?;
    Ok((mdp, ErrorFunction::new(n, m, budget)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> Mdp {
        let kernel = Kernel::new(2, 1, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        Mdp::new(2, 1, vec![0.0, 1.0], kernel, vec![1.0, 0.0], 0.9).unwrap()
    }

    fn per_pair(n: u64, seed: u64) -> EstimationConfig {
        EstimationConfig {
            delta: 0.05,
            behavior: Behavior::PerPair { per_pair: n },
            seed,
        }
    }

    #[test]
    fn weissman_reference_value() {
        let e = weissman_budget(8, 2, 1, 0.1);
        let direct = (0.25 * (2.0 * 4.0 / 0.1_f64).ln()).sqrt();
        assert!((e - direct).abs() < 1e-12);
        assert!((e - 1.0467).abs() < 1e-4);
        assert_eq!(weissman_budget(0, 2, 1, 0.1), 2.0);
    }

    #[test]
    fn no_samples_gives_uniform_full_budget() {
        let mdp = coin();
        let cfg = per_pair(0, 1);
        let counts = collect_samples(&mdp, &cfg).unwrap();
        assert_eq!(counts.total(), 0);
        let (hat, e) = empirical_model(&mdp, &counts, &cfg).unwrap();
        assert_eq!(hat.transition().row(0, 0), &[0.5, 0.5]);
        assert!(e.as_slice().iter().all(|&b| b == 2.0));
    }

    #[test]
    fn deterministic_successor() {
        let kernel = Kernel::new(2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let mdp = Mdp::new(2, 1, vec![0.0, 1.0], kernel, vec![1.0, 0.0], 0.9).unwrap();
        let counts = collect_samples(&mdp, &per_pair(50, 3)).unwrap();
        assert_eq!(counts.row(0, 0), &[0, 50]);
        assert_eq!(counts.row(1, 0), &[50, 0]);
    }

    #[test]
    fn law_of_large_numbers() {
        let counts = collect_samples(&coin(), &per_pair(100_000, 11)).unwrap();
        let freq = counts.count(0, 0, 0) as f64 / counts.visits(0, 0) as f64;
        assert!((freq - 0.5).abs() < 0.01);
    }

    #[test]
    fn uniform_policy_collects_exact_total() {
        let cfg = EstimationConfig {
            delta: 0.05,
            behavior: Behavior::UniformPolicy {
                total_samples: 1234,
            },
            seed: 5,
        };
        let a = collect_samples(&coin(), &cfg).unwrap();
        assert_eq!(a.total(), 1234);
        assert_eq!(a, collect_samples(&coin(), &cfg).unwrap());
    }

    #[test]
    fn horizon_rule() {
        let h = episode_horizon(0.9).unwrap();
        assert!(0.9_f64.powi(h as i32) <= 1e-3 && 0.9_f64.powi(h as i32 - 1) > 1e-3);
        assert_eq!(episode_horizon(1.0), None);
    }

    #[test]
    fn rejects_bad_delta() {
        let mut cfg = per_pair(1, 1);
        cfg.delta = 1.0;
        assert!(collect_samples(&coin(), &cfg).is_err());
    }
}
