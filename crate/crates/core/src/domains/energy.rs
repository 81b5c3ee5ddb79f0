//! Energy arbitrage with a battery of fixed capacity and a Markov price chain.
//!
//! State `(z, θ)` (charge level `z`, price level `θ`) has index
//! `z * n_price_levels + θ`. Action `k` requests the charge change
//! `k − n_actions / 2`; infeasible requests are clamped to the nearest
//! feasible amount. Only the price chain is stochastic.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, SpiError};
use crate::mdp::{solve_nominal, Kernel, Mdp, Policy};
use crate::uncertainty::{ErrorFunction, L1UncertaintySet, UncertaintySet};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub n_price_levels: usize,
    pub n_charge_levels: usize,
    pub n_actions: usize,
    pub price_min: f64,
    pub price_max: f64,
    /// Standard deviation of the price random walk, in price units.
    pub price_std: f64,
    /// Half spread between purchase and sale prices.
    pub spread: f64,
    /// Cost per unit of lost capacity.
    pub degradation_cost: f64,
    /// Capacity lost per unit of energy moved.
    pub degradation_rate: f64,
    /// Number of aggregated price levels used by the baseline.
    pub baseline_levels: usize,
    pub gamma: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            n_price_levels: 10,
            n_charge_levels: 10,
            n_actions: 10,
            price_min: 0.0,
            price_max: 10.0,
            price_std: 1.0,
            spread: 0.25,
            degradation_cost: 1.0,
            degradation_rate: 0.1,
            baseline_levels: 3,
            gamma: 0.99,
        }
    }
}

impl EnergyConfig {
    fn validate(&self) -> Result<()> {
        if self.n_price_levels == 0 || self.n_charge_levels == 0 || self.n_actions == 0 {
            return Err(SpiError::InvalidArgument(
                "energy sizes must be positive".into(),
            ));
        }
        if !(self.price_max > self.price_min) || !(self.price_std > 0.0) {
            return Err(SpiError::InvalidArgument(
                "price range must be nonempty and price_std positive".into(),
            ));
        }
        if self.spread < 0.0 || self.degradation_cost < 0.0 || self.degradation_rate < 0.0 {
            return Err(SpiError::InvalidArgument(
                "spread and degradation parameters must be nonnegative".into(),
            ));
        }
        if self.baseline_levels == 0 || self.baseline_levels > self.n_price_levels {
            return Err(SpiError::InvalidArgument(
                "baseline levels must be between 1 and the number of price levels".into(),
            ));
        }
        Ok(())
    }

    fn bin_width(&self) -> f64 {
        (self.price_max - self.price_min) / self.n_price_levels as f64
    }

    /// Representative price of each level: the bin midpoint.
    pub fn price_levels(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.n_price_levels)
            .map(|i| self.price_min + (i as f64 + 0.5) * w)
            .collect()
    }

    /// Signed charge change requested by action `k`.
    pub fn requested_amount(&self, k: usize) -> i64 {
        k as i64 - (self.n_actions / 2) as i64
    }

    /// Feasible charge change of action `k` at charge `z`.
    pub fn amount(&self, z: usize, k: usize) -> i64 {
        self.requested_amount(k)
            .clamp(-(z as i64), (self.n_charge_levels - 1 - z) as i64)
    }

    /// Transaction revenue minus degradation cost.
    pub fn reward(&self, amount: i64, price: f64) -> f64 {
        let a = amount as f64;
        let unit = if amount >= 0 {
            price + self.spread
        } else {
            (price - self.spread).max(0.0)
        };
        -a * unit - self.degradation_cost * self.degradation_rate * a.abs()
    }
}

/// Price transitions: a Gaussian step centred at the current price,
/// integrated over each level's bin and renormalized to the price range.
pub fn price_chain(config: &EnergyConfig) -> Result<Kernel> {
    config.validate()?;
    let levels = config.price_levels();
    let w = config.bin_width();
    let l = config.n_price_levels;
    Kernel::from_fn(l, 1, |i, _| {
        let normal = Normal::new(levels[i], config.price_std).expect("positive std");
        let mass: Vec<f64> = (0..l)
            .map(|j| {
                let lo = config.price_min + j as f64 * w;
                normal.cdf(lo + w) - normal.cdf(lo)
            })
            .collect();
        let total: f64 = mass.iter().sum();
        mass.into_iter().map(|m| m / total).collect()
    })
}

/// Aggregated price cluster of every level.
fn clusters(config: &EnergyConfig) -> Vec<usize> {
    let (l, c) = (config.n_price_levels, config.baseline_levels);
    let bounds: Vec<usize> = (0..=c)
        .map(|k| ((k * l) as f64 / c as f64).round() as usize)
        .collect();
    (0..l)
        .map(|i| (0..c).find(|&k| i < bounds[k + 1]).unwrap_or(c - 1))
        .collect()
}

/// The energy MDP, its baseline and the price chain it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDomain {
    pub config: EnergyConfig,
    pub mdp: Mdp,
    pub baseline: Policy,
    /// One-action price chain with uniform initial distribution.
    pub price_mdp: Mdp,
}

impl EnergyDomain {
    pub fn n_states(&self) -> usize {
        self.config.n_charge_levels * self.config.n_price_levels
    }

    /// Full kernel whose price part is `price` and charge part is exact.
    pub fn lift_kernel(&self, price: &Kernel) -> Result<Kernel> {
        lift(&self.config, price)
    }

    /// Estimated full model and uncertainty set from an estimated price chain
    /// and its errors. Each row inherits the error of its current price level
    /// and may only move mass among states with the same next charge.
    pub fn lift_estimate(
        &self,
        price: &Kernel,
        price_error: &ErrorFunction,
    ) -> Result<(Mdp, ErrorFunction, UncertaintySet)> {
        let cfg = &self.config;
        let (l, m) = (cfg.n_price_levels, cfg.n_actions);
        if price_error.n_states() != l || price_error.n_actions() != 1 {
            return Err(SpiError::Dimension("price error must be levels x 1".into()));
        }
        let kernel = lift(cfg, price)?;
        let n = self.n_states();
        let budget: Vec<f64> = (0..n)
            .flat_map(|x| std::iter::repeat_n(price_error.get(x % l, 0), m))
            .collect();
        let error = ErrorFunction::new(n, m, budget)?;
        let support: Vec<Vec<usize>> = (0..n * m)
            .map(|idx| {
                let (x, k) = (idx / m, idx % m);
                let z = x / l;
                let next = (z as i64 + cfg.amount(z, k)) as usize;
                (0..l).map(|t| next * l + t).collect()
            })
            .collect();
        let set = UncertaintySet::L1(L1UncertaintySet::with_support(
            kernel.clone(),
            error.clone(),
            support,
        )?);
        Ok((self.mdp.with_kernel(kernel)?, error, set))
    }
}

fn lift(cfg: &EnergyConfig, price: &Kernel) -> Result<Kernel> {
    let l = cfg.n_price_levels;
    if price.n_states() != l || price.n_actions() != 1 {
        return Err(SpiError::Dimension(
            "price kernel must be levels x 1".into(),
        ));
    }
    let n = cfg.n_charge_levels * l;
    Kernel::from_fn(n, cfg.n_actions, |x, k| {
        let (z, theta) = (x / l, x % l);
        let next = (z as i64 + cfg.amount(z, k)) as usize;
        let mut row = vec![0.0; n];
        row[next * l..(next + 1) * l].copy_from_slice(price.row(theta, 0));
        row
    })
}

fn energy_mdp(cfg: &EnergyConfig, prices: &[f64], price: &Kernel) -> Result<Mdp> {
    let l = prices.len();
    let n = cfg.n_charge_levels * l;
    let m = cfg.n_actions;
    let kernel = Kernel::from_fn(n, m, |x, k| {
        let (z, theta) = (x / l, x % l);
        let next = (z as i64 + cfg.amount(z, k)) as usize;
        let mut row = vec![0.0; n];
        row[next * l..(next + 1) * l].copy_from_slice(price.row(theta, 0));
        row
    })?;
    let reward: Vec<f64> = (0..n * m)
        .map(|idx| {
            let (x, k) = (idx / m, idx % m);
            let (z, theta) = (x / l, x % l);
            cfg.reward(cfg.amount(z, k), prices[theta])
        })
        .collect();
    let mut initial = vec![0.0; n];
    initial[..l].iter_mut().for_each(|p| *p = 1.0 / l as f64);
    Mdp::new(n, m, reward, kernel, initial, cfg.gamma)
}

/// Energy MDP with the baseline of the aggregated-price model.
pub fn build_energy(config: &EnergyConfig) -> Result<EnergyDomain> {
    config.validate()?;
    if !(config.gamma > 0.0 && config.gamma < 1.0) {
        return Err(SpiError::InvalidArgument(format!(
            "discount {} outside (0, 1)",
            config.gamma
        )));
    }
    let prices = config.price_levels();
    let chain = price_chain(config)?;
    let l = config.n_price_levels;
    let mdp = energy_mdp(config, &prices, &chain)?;
    let price_mdp = Mdp::new(
        l,
        1,
        vec![0.0; l],
        chain.clone(),
        vec![1.0 / l as f64; l],
        config.gamma,
    )?;

    // Aggregated model: mean price per cluster, cluster transitions averaged
    // uniformly over member levels.
    let cl = clusters(config);
    let c = config.baseline_levels;
    let members: Vec<Vec<usize>> = (0..c)
        .map(|k| (0..l).filter(|&i| cl[i] == k).collect())
        .collect();
    let agg_prices: Vec<f64> = members
        .iter()
        .map(|g| g.iter().map(|&i| prices[i]).sum::<f64>() / g.len() as f64)
        .collect();
    let agg_chain = Kernel::from_fn(c, 1, |k, _| {
        let mut row = vec![0.0; c];
        for &i in &members[k] {
            for (j, p) in chain.row(i, 0).iter().enumerate() {
                row[cl[j]] += p / members[k].len() as f64;
            }
        }
        row
    })?;
    let agg = energy_mdp(config, &agg_prices, &agg_chain)?;
    let (agg_policy, _) = solve_nominal(&agg, 1e-10)?;
    let agg_actions = agg_policy
        .actions()
        .expect("nominal solutions are deterministic");
    let actions: Vec<usize> = (0..l * config.n_charge_levels)
        .map(|x| agg_actions[(x / l) * c + cl[x % l]])
        .collect();
    Ok(EnergyDomain {
        config: config.clone(),
        mdp,
        baseline: Policy::deterministic(&actions, config.n_actions)?,
        price_mdp,
    })
}
