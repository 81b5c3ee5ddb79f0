//! Two-dimensional grid benchmark: columns are interaction stages, rows are
//! customer states.
//!
//! State `s(i, j)` (column `i`, row `j`) has index `j * n_cols + i`.
//! Actions are `L = 0`, `R = 1`, `U = 2`, `D = 3`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SpiError};
use crate::mdp::{solve_nominal, Kernel, Mdp, Policy};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const UP: usize = 2;
pub const DOWN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n_cols: usize,
    pub n_rows: usize,
    /// Reward of every state in each column.
    pub rewards: Vec<f64>,
    /// Probability that a lateral move fails, per row.
    pub failure: Vec<f64>,
    /// Row move probabilities (up, down, stay) under lateral actions.
    pub row_split: [f64; 3],
    /// Seed of the Dirichlet column distributions.
    pub seed: u64,
    pub gamma: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_cols: 12,
            n_rows: 3,
            rewards: vec![
                -1.0, 1.0, 2.0, 3.0, 2.0, 1.0, -1.0, -2.0, -3.0, 3.0, 4.0, 5.0,
            ],
            failure: vec![0.9, 0.2, 0.3],
            row_split: [0.35, 0.35, 0.3],
            seed: 0,
            gamma: 0.99,
        }
    }
}

impl GridConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_cols == 0 || self.n_rows == 0 {
            return Err(SpiError::InvalidArgument(
                "grid needs rows and columns".into(),
            ));
        }
        if self.rewards.len() != self.n_cols {
            return Err(SpiError::InvalidArgument(format!(
                "{} column rewards for {} columns",
                self.rewards.len(),
                self.n_cols
            )));
        }
        if self.failure.len() != self.n_rows
            || self.failure.iter().any(|z| !(0.0..=1.0).contains(z))
        {
            return Err(SpiError::InvalidArgument(
                "failure probabilities must be one per row in [0, 1]".into(),
            ));
        }
        let split: f64 = self.row_split.iter().sum();
        if self.row_split.iter().any(|&p| p < 0.0) || (split - 1.0).abs() > 1e-12 {
            return Err(SpiError::InvalidArgument(
                "row split must be a distribution".into(),
            ));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.n_cols + col
    }
}

/// One Dirichlet(1, …, 1) vector: normalized `−ln(1 − U)` draws from a
/// ChaCha8 stream seeded with `seed`.
pub fn dirichlet_ones(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|v| v / total).collect()
}

/// Per-row random-column distributions: the first and last rows share one
/// Dirichlet draw and every middle row is the average of the two.
pub fn column_distributions(config: &GridConfig) -> Vec<Vec<f64>> {
    let first = dirichlet_ones(config.n_cols, config.seed);
    let last = first.clone();
    (0..config.n_rows)
        .map(|j| {
            if j == 0 {
                first.clone()
            } else if j + 1 == config.n_rows {
                last.clone()
            } else {
                first
                    .iter()
                    .zip(&last)
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect()
            }
        })
        .collect()
}

fn column_marginal(
    config: &GridConfig,
    dists: &[Vec<f64>],
    col: usize,
    row: usize,
    a: usize,
) -> Vec<f64> {
    let z = config.failure[row];
    let last = config.n_cols - 1;
    let mut out: Vec<f64> = match a {
        LEFT | RIGHT => dists[row].iter().map(|p| z * p).collect(),
        _ => dists[row].clone(),
    };
    match a {
        RIGHT => out[(col + 1).min(last)] += 1.0 - z,
        LEFT => out[col.saturating_sub(1)] += 1.0 - z,
        _ => {}
    }
    out
}

fn row_marginal(config: &GridConfig, row: usize, a: usize) -> Vec<f64> {
    let last = config.n_rows - 1;
    let mut out = vec![0.0; config.n_rows];
    match a {
        UP => out[(row + 1).min(last)] = 1.0,
        DOWN => out[row.saturating_sub(1)] = 1.0,
        _ => {
            let [up, down, stay] = config.row_split;
            out[(row + 1).min(last)] += up;
            out[row.saturating_sub(1)] += down;
            out[row] += stay;
        }
    }
    out
}

/// Exact transition kernel, from the independent column and row outcomes.
pub fn grid_kernel(config: &GridConfig) -> Result<Kernel> {
    config.validate()?;
    let dists = column_distributions(config);
    let n = config.n_states();
    Kernel::from_fn(n, 4, |x, a| {
        let (col, row) = (x % config.n_cols, x / config.n_cols);
        let cm = column_marginal(config, &dists, col, row, a);
        let rm = row_marginal(config, row, a);
        let mut out = vec![0.0; n];
        for (l, pr) in rm.iter().enumerate() {
            for (k, pc) in cm.iter().enumerate() {
                out[config.index(k, l)] += pr * pc;
            }
        }
        out
    })
}

/// One draw of the transition procedure, for Monte-Carlo checks.
pub fn simulate_transition(
    config: &GridConfig,
    dists: &[Vec<f64>],
    x: usize,
    a: usize,
    rng: &mut impl Rng,
) -> usize {
    let (i, j) = (x % config.n_cols, x / config.n_cols);
    let draw_col = |rng: &mut dyn rand::RngCore| -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in dists[j].iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        config.n_cols - 1
    };
    let k = if rng.random::<f64>() > config.failure[j] {
        match a {
            RIGHT => i as i64 + 1,
            LEFT => i as i64 - 1,
            _ => draw_col(rng) as i64,
        }
        .clamp(0, config.n_cols as i64 - 1) as usize
    } else {
        draw_col(rng)
    };
    let l = match a {
        UP => j as i64 + 1,
        DOWN => j as i64 - 1,
        _ => {
            let e: f64 = rng.random();
            let [up, down, _] = config.row_split;
            if e <= up {
                j as i64 + 1
            } else if e <= up + down {
                j as i64 - 1
            } else {
                j as i64
            }
        }
    }
    .clamp(0, config.n_rows as i64 - 1) as usize;
    config.index(k, l)
}

/// Grid MDP and its baseline. The baseline is optimal for the column-only
/// model whose transitions average the row-conditional ones uniformly, lifted
/// to every row.
pub fn build_grid(config: &GridConfig) -> Result<(Mdp, Policy)> {
    let kernel = grid_kernel(config)?;
    let n = config.n_states();
    let reward: Vec<f64> = (0..n)
        .flat_map(|x| std::iter::repeat_n(config.rewards[x % config.n_cols], 4))
        .collect();
    let mut initial = vec![0.0; n];
    initial[config.index(0, 0)] = 1.0;
    let mdp = Mdp::new(n, 4, reward, kernel, initial, config.gamma)?;

    let dists = column_distributions(config);
    let cols = config.n_cols;
    let col_kernel = Kernel::from_fn(cols, 4, |i, a| {
        let mut out = vec![0.0; cols];
        for j in 0..config.n_rows {
            for (k, p) in column_marginal(config, &dists, i, j, a).iter().enumerate() {
                out[k] += p / config.n_rows as f64;
            }
        }
        out
    })?;
    let col_reward: Vec<f64> = (0..cols)
        .flat_map(|i| std::iter::repeat_n(config.rewards[i], 4))
        .collect();
    let mut col_initial = vec![0.0; cols];
    col_initial[0] = 1.0;
    let col_mdp = Mdp::new(cols, 4, col_reward, col_kernel, col_initial, config.gamma)?;
    let (col_policy, _) = solve_nominal(&col_mdp, 1e-9)?;
    let col_actions = col_policy
        .actions()
        .expect("nominal solutions are deterministic");
    let actions: Vec<usize> = (0..n).map(|x| col_actions[x % cols]).collect();
    Ok((mdp, Policy::deterministic(&actions, 4)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_distributions() {
        let k = grid_kernel(&GridConfig::default()).unwrap();
        for x in 0..36 {
            for a in 0..4 {
                assert!((k.row(x, a).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clamping_at_edges() {
        let cfg = GridConfig::default();
        let k = grid_kernel(&cfg).unwrap();
        let dists = column_distributions(&cfg);
        // left from column 0 on success stays in column 0
        let col0: f64 = (0..3).map(|l| k.row(0, LEFT)[cfg.index(0, l)]).sum();
        assert!((col0 - (1.0 - cfg.failure[0] + cfg.failure[0] * dists[0][0])).abs() < 1e-12);
        // up from the top row stays in the top row
        let top = cfg.index(4, 2);
        let mass: f64 = (0..12).map(|c| k.row(top, UP)[cfg.index(c, 2)]).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_is_reproducible() {
        let a = dirichlet_ones(12, 42);
        assert_eq!(a, dirichlet_ones(12, 42));
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_ne!(a, dirichlet_ones(12, 43));
    }

    #[test]
    fn baseline_ignores_rows() {
        let (mdp, base) = build_grid(&GridConfig::default()).unwrap();
        assert_eq!(mdp.n_states(), 36);
        let acts = base.actions().unwrap();
        for c in 0..12 {
            assert_eq!(acts[c], acts[12 + c]);
            assert_eq!(acts[c], acts[24 + c]);
        }
        assert_eq!(mdp.r_max(), 5.0);
    }
}
