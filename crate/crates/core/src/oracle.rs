//! Brute-force reference solvers for small instances.

use rayon::prelude::*;

use crate::error::{Result, SpiError};
use crate::mdp::{dot, evaluate_with_kernel, Mdp, Policy};
use crate::uncertainty::{baseline_actions, ScenarioSet, MAX_BUDGET};

/// Largest row length accepted by the inner-problem oracles.
pub const MAX_ORACLE_STATES: usize = 6;

/// Largest number of policy grid points enumerated.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

/// Largest simplex grid swept by [`grid_sweep_response`].
const MAX_SWEEP_POINTS: u64 = 5_000_000;

/// Enumeration limits for the grid and scenario oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Step of the policy simplex grid, in `(0, 0.5]`.
    pub resolution: f64,
    /// Maximum number of joint scenario selections.
    pub scenario_product_cap: u64,
}

impl GridSpec {
    pub fn new(resolution: f64, scenario_product_cap: u64) -> Result<Self> {
        let spec = Self {
            resolution,
            scenario_product_cap,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution <= 0.5) {
            return Err(SpiError::InvalidArgument(format!(
                "resolution {} outside (0, 0.5]",
                self.resolution
            )));
        }
        if self.scenario_product_cap < 1 {
            return Err(SpiError::InvalidArgument(
                "scenario cap must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn subdivisions(&self) -> usize {
        (1.0 / self.resolution - 1e-9).ceil() as usize
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            scenario_product_cap: 100_000,
        }
    }
}

fn check_oracle_args(nominal_row: &[f64], budget: f64, values: &[f64]) -> Result<()> {
    if nominal_row.len() != values.len() || nominal_row.is_empty() {
        return Err(SpiError::Dimension(
            "row and values differ in length".into(),
        ));
    }
    if nominal_row.len() > MAX_ORACLE_STATES {
        return Err(SpiError::Dimension(format!(
            "oracle supports at most {MAX_ORACLE_STATES} states, got {}",
            nominal_row.len()
        )));
    }
    if !(0.0..=MAX_BUDGET).contains(&budget) {
        return Err(SpiError::InvalidArgument(format!(
            "budget {budget} outside [0, 2]"
        )));
    }
    Ok(())
}

/// Minimum of `p·v` over every transfer candidate: each recipient state
/// receives `min(budget/2, 1 − p̂[r])`, removed from each ordered subset of
/// the remaining states in turn with clamping at zero. The candidates cover
/// all vertices of the feasible polytope.
pub fn vertex_enumeration_response(
    nominal_row: &[f64],
    budget: f64,
    values: &[f64],
) -> Result<f64> {
    check_oracle_args(nominal_row, budget, values)?;
    let n = nominal_row.len();
    let mut best = dot(nominal_row, values);
    let mut p = vec![0.0; n];
    for r in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != r).collect();
        let mut order = Vec::with_capacity(n);
        let mut used = vec![false; others.len()];
        enumerate_orders(&others, &mut used, &mut order, &mut |donors| {
            p.copy_from_slice(nominal_row);
            let eps = (budget / 2.0).min(1.0 - p[r]).max(0.0);
            p[r] += eps;
            let mut remaining = eps;
            for &d in donors {
                let take = p[d].min(remaining);
                p[d] -= take;
                remaining -= take;
            }
            // Unplaced mass means the donor subset was too small: not a
            // feasible point, skip it.
            if remaining <= 1e-15 {
                best = best.min(dot(&p, values));
            }
        });
    }
    Ok(best)
}

fn enumerate_orders(
    items: &[usize],
    used: &mut [bool],
    order: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    visit(order);
    for i in 0..items.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        order.push(items[i]);
        enumerate_orders(items, used, order, visit);
        order.pop();
        used[i] = false;
    }
}

fn compositions(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(left: usize, slot: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            visit(cur);
            return;
        }
        for k in 0..=left {
            cur[slot] = k;
            rec(left - k, slot + 1, cur, visit);
        }
    }
    let mut cur = vec![0; parts];
    rec(total, 0, &mut cur, visit);
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Minimum of `p·v` over simplex grid points at `resolution`; infeasible
/// points are pulled toward the nominal row onto the budget boundary.
pub fn grid_sweep_response(
    nominal_row: &[f64],
    budget: f64,
    values: &[f64],
    resolution: f64,
) -> Result<f64> {
    check_oracle_args(nominal_row, budget, values)?;
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(SpiError::InvalidArgument(format!(
            "resolution {resolution} outside (0, 0.5]"
        )));
    }
    let n = nominal_row.len();
    let k = (1.0 / resolution - 1e-9).ceil() as usize;
    if binomial((k + n - 1) as u64, (n - 1) as u64) > MAX_SWEEP_POINTS {
        return Err(SpiError::BudgetExceeded(format!(
            "simplex grid at resolution {resolution} over {n} states is too large"
        )));
    }
    let mut best = dot(nominal_row, values);
    let mut q = vec![0.0; n];
    compositions(k, n, &mut |c| {
        for (qi, &ci) in q.iter_mut().zip(c) {
            *qi = ci as f64 / k as f64;
        }
        let dist: f64 = q.iter().zip(nominal_row).map(|(a, b)| (a - b).abs()).sum();
        let t = if dist <= budget { 1.0 } else { budget / dist };
        let v: f64 = q
            .iter()
            .zip(nominal_row)
            .zip(values)
            .map(|((qi, pi), vi)| (pi + t * (qi - pi)) * vi)
            .sum();
        best = best.min(v);
    });
    Ok(best)
}

/// Best value found by vertex enumeration and the grid sweep together.
pub fn oracle_inner_response(
    nominal_row: &[f64],
    budget: f64,
    values: &[f64],
    resolution: f64,
) -> Result<f64> {
    let vertex = vertex_enumeration_response(nominal_row, budget, values)?;
    let grid = grid_sweep_response(nominal_row, budget, values, resolution)?;
    Ok(vertex.min(grid))
}

/// All joint scenario kernels of `scenarios`, refusing beyond `cap`.
fn joint_selections(scenarios: &ScenarioSet, cap: u64) -> Result<Vec<Vec<usize>>> {
    let counts = scenarios.counts();
    let product = counts
        .iter()
        .try_fold(1u64, |acc, &c| acc.checked_mul(c as u64))
        .filter(|&p| p <= cap)
        .ok_or_else(|| {
            SpiError::BudgetExceeded(format!("joint scenario count exceeds cap {cap}"))
        })?;
    let mut out = Vec::with_capacity(product as usize);
    let mut sel = vec![0usize; counts.len()];
    loop {
        out.push(sel.clone());
        let mut i = 0;
        loop {
            if i == sel.len() {
                return Ok(out);
            }
            sel[i] += 1;
            if sel[i] < counts[i] {
                break;
            }
            sel[i] = 0;
            i += 1;
        }
    }
}

fn check_scenario_shape(mdp: &Mdp, scenarios: &ScenarioSet) -> Result<()> {
    if scenarios.n_states() != mdp.n_states() || scenarios.n_actions() != mdp.n_actions() {
        return Err(SpiError::Dimension(
            "scenario set differs from model shape".into(),
        ));
    }
    Ok(())
}

/// Scenario kernels with the baseline's return under each.
struct ScenarioTable {
    kernels: Vec<crate::mdp::Kernel>,
    baseline_returns: Vec<f64>,
}

impl ScenarioTable {
    fn build(mdp: &Mdp, scenarios: &ScenarioSet, baseline: &Policy, cap: u64) -> Result<Self> {
        check_scenario_shape(mdp, scenarios)?;
        let kernels = joint_selections(scenarios, cap)?
            .iter()
            .map(|s| scenarios.kernel_from_selection(s))
            .collect::<Result<Vec<_>>>()?;
        let baseline_returns = kernels
            .iter()
            .map(|k| Ok(dot(mdp.initial(), &evaluate_with_kernel(mdp, baseline, k)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernels,
            baseline_returns,
        })
    }

    fn min_regret(&self, mdp: &Mdp, policy: &Policy) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for (k, base) in self.kernels.iter().zip(&self.baseline_returns) {
            let ret = dot(mdp.initial(), &evaluate_with_kernel(mdp, policy, k)?);
            worst = worst.min(ret - base);
        }
        Ok(worst)
    }
}

/// Exact `min_ξ ρ(π, ξ) − ρ(πB, ξ)` over all joint scenario selections.
pub fn brute_force_regret(
    mdp: &Mdp,
    scenarios: &ScenarioSet,
    policy: &Policy,
    baseline: &Policy,
    cap: u64,
) -> Result<f64> {
    if cap < 1 {
        return Err(SpiError::InvalidArgument(
            "scenario cap must be at least 1".into(),
        ));
    }
    ScenarioTable::build(mdp, scenarios, baseline, cap)?.min_regret(mdp, policy)
}

/// Result of [`grid_maximin_regret`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridMaximinResult {
    pub policy: Policy,
    /// Largest min-regret over the policy grid.
    pub zeta: f64,
    /// Largest min-regret over deterministic grid points only.
    pub best_deterministic_zeta: f64,
    /// Upper bound on how far the true max-min may exceed `zeta`.
    pub lipschitz_slack: f64,
}

/// States where actions differ in reward or in candidate rows.
fn free_states(mdp: &Mdp, scenarios: &ScenarioSet) -> Vec<usize> {
    (0..mdp.n_states())
        .filter(|&x| {
            (1..mdp.n_actions()).any(|a| {
                mdp.reward(x, a) != mdp.reward(x, 0)
                    || scenarios.candidates(x, a) != scenarios.candidates(x, 0)
            })
        })
        .collect()
}

/// Grid points of the action simplex plus the barycenter.
fn simplex_points(m: usize, k: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    compositions(k, m, &mut |c| {
        pts.push(c.iter().map(|&ci| ci as f64 / k as f64).collect::<Vec<_>>())
    });
    let center = vec![1.0 / m as f64; m];
    if !pts
        .iter()
        .any(|p| p.iter().zip(&center).all(|(a, b)| (a - b).abs() < 1e-12))
    {
        pts.push(center);
    }
    pts
}

/// Maximizes the exact finite-scenario min-regret over a grid of randomized
/// policies on the free decision states; other states follow the baseline.
pub fn grid_maximin_regret(
    mdp: &Mdp,
    scenarios: &ScenarioSet,
    baseline: &Policy,
    grid: &GridSpec,
) -> Result<GridMaximinResult> {
    grid.validate()?;
    let base = baseline_actions(baseline)?;
    if base.len() != mdp.n_states() || baseline.n_actions() != mdp.n_actions() {
        return Err(SpiError::Dimension(
            "baseline shape differs from model".into(),
        ));
    }
    let table = ScenarioTable::build(mdp, scenarios, baseline, grid.scenario_product_cap)?;
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let free = free_states(mdp, scenarios);
    let k = grid.subdivisions();
    let points = simplex_points(m, k);
    let total = (points.len() as u64)
        .checked_pow(free.len() as u32)
        .filter(|&t| t <= MAX_GRID_POINTS)
        .ok_or_else(|| {
            SpiError::BudgetExceeded(format!(
                "{} free states with {} grid points each exceed {MAX_GRID_POINTS}",
                free.len(),
                points.len()
            ))
        })?;
    let is_vertex: Vec<bool> = points.iter().map(|p| p.contains(&1.0)).collect();

    let build = |mut idx: u64| -> (Policy, bool) {
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|x| {
                let mut r = vec![0.0; m];
                r[base[x]] = 1.0;
                r
            })
            .collect();
        let mut deterministic = true;
        for &x in &free {
            let j = (idx % points.len() as u64) as usize;
            idx /= points.len() as u64;
            rows[x] = points[j].clone();
            deterministic &= is_vertex[j];
        }
        (
            Policy::from_rows(rows).expect("grid rows are distributions"),
            deterministic,
        )
    };

    // (zeta, index) for the best point overall and among deterministic points.
    type Best = ((f64, u64), (f64, u64));
    let better = |a: (f64, u64), b: (f64, u64)| {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let none = (f64::NEG_INFINITY, u64::MAX);
    let (best, best_det): Best = (0..total)
        .into_par_iter()
        .map(|idx| -> Result<Best> {
            let (policy, det) = build(idx);
            let z = table.min_regret(mdp, &policy)?;
            Ok(((z, idx), if det { (z, idx) } else { none }))
        })
        .try_reduce(
            || (none, none),
            |a, b| Ok((better(a.0, b.0), better(a.1, b.1))),
        )?;

    let horizon_factor = if mdp.discount() < 1.0 {
        1.0 / (1.0 - mdp.discount()).powi(2)
    } else {
        (n * n) as f64
    };
    let slack = if free.is_empty() {
        0.0
    } else {
        m as f64 / k as f64 * mdp.r_max() * horizon_factor
    };
    Ok(GridMaximinResult {
        policy: build(best.1).0,
        zeta: best.0,
        best_deterministic_zeta: best_det.0,
        lipschitz_slack: slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::worst_case_response;

    #[test]
    fn reference_triple() {
        let third = [1.0 / 3.0; 3];
        let vals = [1.0, 2.0, 3.0];
        let v = vertex_enumeration_response(&third, 1.0, &vals).unwrap();
        assert!((v - 7.0 / 6.0).abs() < 1e-12);
        let o = oracle_inner_response(&third, 1.0, &vals, 0.01).unwrap();
        assert!((o - 7.0 / 6.0).abs() < 1e-12);
        let (_, w) = worst_case_response(&third, 1.0, &vals).unwrap();
        assert!((o - w).abs() < 1e-12);
    }

    #[test]
    fn extreme_budgets() {
        let row = [0.2, 0.3, 0.5];
        let vals = [2.0, -1.0, 4.0];
        assert_eq!(
            oracle_inner_response(&row, 0.0, &vals, 0.1).unwrap(),
            dot(&row, &vals)
        );
        assert!((oracle_inner_response(&row, 2.0, &vals, 0.1).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_count_for_five_states() {
        let mut count = 0;
        let items: Vec<usize> = (0..4).collect();
        let mut used = vec![false; 4];
        enumerate_orders(&items, &mut used, &mut Vec::new(), &mut |_| count += 1);
        assert_eq!(5 * count, 325);
    }

    #[test]
    fn rejects_large_rows() {
        let row = vec![1.0 / 7.0; 7];
        assert!(oracle_inner_response(&row, 0.5, &[0.0; 7], 0.1).is_err());
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(0.0, 10).is_err());
        assert!(GridSpec::new(0.6, 10).is_err());
        assert!(GridSpec::new(0.1, 0).is_err());
        assert!(GridSpec::new(0.5, 1).is_ok());
    }

    #[test]
    fn grid_contains_barycenter() {
        let pts = simplex_points(3, 4);
        assert!(pts
            .iter()
            .any(|p| p.iter().all(|&w| (w - 1.0 / 3.0).abs() < 1e-12)));
        let pts = simplex_points(2, 20);
        assert!(pts.iter().any(|p| p[0] == 0.5));
    }
}
