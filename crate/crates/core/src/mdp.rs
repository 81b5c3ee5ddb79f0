//! Finite MDPs, stationary policies, exact policy evaluation and nominal solving.
//!
//! Transition kernels are stored densely as `n_states * n_actions` rows of
//! length `n_states`. Discounted models (`discount < 1`) are evaluated by a
//! direct linear solve; undiscounted models are only accepted when flagged
//! absorbing and every deterministic policy reaches a zero-reward absorbing
//! state with probability one.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiError};
use crate::uncertainty::ErrorFunction;

/// Row-sum tolerance for distributions held by validated models.
pub const DIST_TOL: f64 = 1e-12;

/// Largest state count evaluated by a direct dense solve.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

/// Tolerance used to treat two action values as tied.
pub(crate) fn tie_tolerance(scale: f64) -> f64 {
    1e-10 * (1.0 + scale.abs())
}

pub(crate) fn check_distribution(row: &[f64], tol: f64, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(SpiError::InvalidDistribution(format!(
                "{what}: entry {i} is {p}"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > tol {
        return Err(SpiError::InvalidDistribution(format!(
            "{what}: sums to {sum}"
        )));
    }
    Ok(())
}

/// A transition kernel: one probability row per (state, action) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Kernel {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(n_states, n_actions, probs, DIST_TOL)
    }

    /// Builds a kernel whose rows must sum to one within `tol`; rows are
    /// renormalized afterwards so the stored kernel meets [`DIST_TOL`].
    pub fn with_tolerance(
        n_states: usize,
        n_actions: usize,
        mut probs: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(SpiError::Dimension("empty state or action space".into()));
        }
        if probs.len() != n_states * n_actions * n_states {
            return Err(SpiError::Dimension(format!(
                "kernel has {} entries, expected {}",
                probs.len(),
                n_states * n_actions * n_states
            )));
        }
        for (idx, row) in probs.chunks_mut(n_states).enumerate() {
            let (x, a) = (idx / n_actions, idx % n_actions);
            check_distribution(row, tol, &format!("transition row ({x}, {a})"))?;
            let sum: f64 = row.iter().sum();
            // leave rows already normalized to rounding alone so copies stay bit-equal
            if (sum - 1.0).abs() > 4.0 * f64::EPSILON * n_states as f64 {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    /// Builds a kernel from a per-pair row generator.
    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        mut row: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut probs = Vec::with_capacity(n_states * n_actions * n_states);
        for x in 0..n_states {
            for a in 0..n_actions {
                let r = row(x, a);
                if r.len() != n_states {
                    return Err(SpiError::Dimension(format!(
                        "row ({x}, {a}) has length {}",
                        r.len()
                    )));
                }
                probs.extend_from_slice(&r);
            }
        }
        Self::new(n_states, n_actions, probs)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn row(&self, x: usize, a: usize) -> &[f64] {
        let start = (x * self.n_actions + a) * self.n_states;
        &self.probs[start..start + self.n_states]
    }

    pub(crate) fn row_mut(&mut self, x: usize, a: usize) -> &mut [f64] {
        let start = (x * self.n_actions + a) * self.n_states;
        &mut self.probs[start..start + self.n_states]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn same_shape(&self, other: &Kernel) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }
}

/// Constructor arguments for [`Mdp::from_parts`].
#[derive(Debug, Clone)]
pub struct MdpParts {
    pub n_states: usize,
    pub n_actions: usize,
    /// Row-major `(state, action)` rewards.
    pub reward: Vec<f64>,
    pub transition: Kernel,
    pub initial: Vec<f64>,
    pub discount: f64,
    /// Declared reward bound; defaults to `max |reward|`.
    pub r_max: Option<f64>,
    pub absorbing: bool,
}

/// A finite MDP with known rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    reward: Vec<f64>,
    transition: Kernel,
    initial: Vec<f64>,
    discount: f64,
    r_max: f64,
    absorbing: bool,
}

impl Mdp {
    /// Discounted MDP with `r_max = max |reward|`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        reward: Vec<f64>,
        transition: Kernel,
        initial: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        Self::from_parts(MdpParts {
            n_states,
            n_actions,
            reward,
            transition,
            initial,
            discount,
            r_max: None,
            absorbing: false,
        })
    }

    pub fn from_parts(parts: MdpParts) -> Result<Self> {
        let MdpParts {
            n_states,
            n_actions,
            reward,
            transition,
            initial,
            discount,
            r_max,
            absorbing,
        } = parts;
        if transition.n_states() != n_states || transition.n_actions() != n_actions {
            return Err(SpiError::Dimension(format!(
                "kernel is {}x{}, model is {n_states}x{n_actions}",
                transition.n_states(),
                transition.n_actions()
            )));
        }
        if reward.len() != n_states * n_actions {
            return Err(SpiError::Dimension(format!(
                "reward has {} entries, expected {}",
                reward.len(),
                n_states * n_actions
            )));
        }
        if initial.len() != n_states {
            return Err(SpiError::Dimension(format!(
                "initial distribution has {} entries, expected {n_states}",
                initial.len()
            )));
        }
        check_distribution(&initial, DIST_TOL, "initial distribution")?;
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(SpiError::InvalidModel(format!(
                "discount {discount} outside (0, 1]"
            )));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(SpiError::InvalidModel("non-finite reward".into()));
        }
        let observed = reward.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let r_max = match r_max {
            Some(bound) if bound + 1e-12 < observed || !bound.is_finite() => {
                return Err(SpiError::InvalidModel(format!(
                    "declared r_max {bound} below max |reward| {observed}"
                )))
            }
            Some(bound) => bound,
            None => observed,
        };
        let mdp = Self {
            n_states,
            n_actions,
            reward,
            transition,
            initial,
            discount,
            r_max,
            absorbing,
        };
        if discount == 1.0 {
            if !absorbing {
                return Err(SpiError::InvalidModel(
                    "discount 1 requires an absorbing episodic model".into(),
                ));
            }
            mdp.check_proper()?;
        }
        Ok(mdp)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_absorbing(&self) -> bool {
        self.absorbing
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &Kernel {
        &self.transition
    }

    #[inline]
    pub fn reward(&self, x: usize, a: usize) -> f64 {
        self.reward[x * self.n_actions + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    /// The same model with a different transition kernel.
    pub fn with_kernel(&self, kernel: Kernel) -> Result<Self> {
        Self::from_parts(MdpParts {
            n_states: self.n_states,
            n_actions: self.n_actions,
            reward: self.reward.clone(),
            transition: kernel,
            initial: self.initial.clone(),
            discount: self.discount,
            r_max: Some(self.r_max),
            absorbing: self.absorbing,
        })
    }

    /// The same model with different rewards; `r_max` is recomputed.
    pub fn with_rewards(&self, reward: Vec<f64>) -> Result<Self> {
        Self::from_parts(MdpParts {
            n_states: self.n_states,
            n_actions: self.n_actions,
            reward,
            transition: self.transition.clone(),
            initial: self.initial.clone(),
            discount: self.discount,
            r_max: None,
            absorbing: self.absorbing,
        })
    }

    /// The same model with a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::from_parts(MdpParts {
            n_states: self.n_states,
            n_actions: self.n_actions,
            reward: self.reward.clone(),
            transition: self.transition.clone(),
            initial: self.initial.clone(),
            discount,
            r_max: Some(self.r_max),
            absorbing: self.absorbing,
        })
    }

    /// States whose every action self-loops with probability one and zero reward.
    pub fn absorbing_states(&self) -> Vec<bool> {
        (0..self.n_states)
            .map(|x| {
                (0..self.n_actions).all(|a| {
                    self.reward(x, a) == 0.0
                        && (self.transition.row(x, a)[x] - 1.0).abs() <= DIST_TOL
                })
            })
            .collect()
    }

    /// Every deterministic policy must reach an absorbing state with
    /// probability one: no set of non-absorbing states may be closed under
    /// some choice of actions.
    fn check_proper(&self) -> Result<()> {
        let absorbing = self.absorbing_states();
        let mut alive: Vec<bool> = absorbing.iter().map(|a| !a).collect();
        loop {
            let mut changed = false;
            for x in 0..self.n_states {
                if !alive[x] {
                    continue;
                }
                let can_stay = (0..self.n_actions).any(|a| {
                    self.transition
                        .row(x, a)
                        .iter()
                        .enumerate()
                        .all(|(y, &p)| p == 0.0 || alive[y])
                });
                if !can_stay {
                    alive[x] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(x) = alive.iter().position(|&a| a) {
            return Err(SpiError::InvalidModel(format!(
                "state {x} belongs to a set some policy never leaves; discount 1 needs absorption"
            )));
        }
        Ok(())
    }

    pub(crate) fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.n_states() != self.n_states || policy.n_actions() != self.n_actions {
            return Err(SpiError::Dimension(format!(
                "policy is {}x{}, model is {}x{}",
                policy.n_states(),
                policy.n_actions(),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }
}

/// A randomized stationary Markov policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        if n_states == 0 || n_actions == 0 {
            return Err(SpiError::Dimension("empty policy".into()));
        }
        let mut probs = Vec::with_capacity(n_states * n_actions);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n_actions {
                return Err(SpiError::Dimension(format!("policy row {x} is ragged")));
            }
            check_distribution(row, DIST_TOL, &format!("policy row {x}"))?;
            probs.extend_from_slice(row);
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        if actions.is_empty() || n_actions == 0 {
            return Err(SpiError::Dimension("empty policy".into()));
        }
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (x, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(SpiError::Dimension(format!(
                    "action {a} at state {x} exceeds {n_actions} actions"
                )));
            }
            probs[x * n_actions + a] = 1.0;
        }
        Ok(Self {
            n_states: actions.len(),
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.probs[x * self.n_actions + a]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.n_actions..(x + 1) * self.n_actions]
    }

    /// The action taken in `x` when the row is deterministic.
    pub fn action(&self, x: usize) -> Option<usize> {
        let row = self.row(x);
        let a = row.iter().position(|&p| p == 1.0)?;
        row.iter()
            .enumerate()
            .all(|(b, &p)| b == a || p == 0.0)
            .then_some(a)
    }

    pub fn is_deterministic(&self) -> bool {
        (0..self.n_states).all(|x| self.action(x).is_some())
    }

    /// Action indices of a deterministic policy.
    pub fn actions(&self) -> Option<Vec<usize>> {
        (0..self.n_states).map(|x| self.action(x)).collect()
    }
}

/// State values of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction(pub Vec<f64>);

impl Deref for ValueFunction {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl ValueFunction {
    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Normalized discounted state-occupancy distribution, `(1 - γ)` scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyDistribution(pub Vec<f64>);

impl Deref for OccupancyDistribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Policy-averaged rewards and transition matrix under `kernel`.
fn policy_chain(mdp: &Mdp, policy: &Policy, kernel: &Kernel) -> (Vec<f64>, Vec<f64>) {
    let n = mdp.n_states;
    let mut r_pi = vec![0.0; n];
    let mut p_pi = vec![0.0; n * n];
    for x in 0..n {
        for a in 0..mdp.n_actions {
            let w = policy.prob(x, a);
            if w == 0.0 {
                continue;
            }
            r_pi[x] += w * mdp.reward(x, a);
            let dst = &mut p_pi[x * n..(x + 1) * n];
            for (d, p) in dst.iter_mut().zip(kernel.row(x, a)) {
                *d += w * p;
            }
        }
    }
    (r_pi, p_pi)
}

fn dense_solve(matrix: DMatrix<f64>, rhs: DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let solution = matrix
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SpiError::Singular(what.to_string()))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(SpiError::Singular(what.to_string()));
    }
    Ok(solution)
}

/// Exact evaluation of `policy` in `mdp` with an explicit kernel.
pub(crate) fn evaluate_with_kernel(
    mdp: &Mdp,
    policy: &Policy,
    kernel: &Kernel,
) -> Result<ValueFunction> {
    mdp.check_policy(policy)?;
    if !kernel.same_shape(&mdp.transition) {
        return Err(SpiError::Dimension(
            "kernel shape differs from model".into(),
        ));
    }
    let n = mdp.n_states;
    let gamma = mdp.discount;
    let (r_pi, p_pi) = policy_chain(mdp, policy, kernel);

    if gamma < 1.0 {
        if n <= DIRECT_SOLVE_LIMIT {
            let a = DMatrix::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - gamma * p_pi[i * n + j]
            });
            let v = dense_solve(a, DVector::from_vec(r_pi), "I - γ P_π")?;
            return Ok(ValueFunction(v.iter().copied().collect()));
        }
        return iterative_evaluation(&r_pi, &p_pi, n, gamma);
    }

    // Undiscounted: absorbing states are pinned at zero, solve the rest.
    let absorbing = absorbing_under(mdp, kernel);
    let transient: Vec<usize> = (0..n).filter(|&x| !absorbing[x]).collect();
    let mut values = vec![0.0; n];
    if transient.is_empty() {
        return Ok(ValueFunction(values));
    }
    let m = transient.len();
    let a = DMatrix::from_fn(m, m, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - p_pi[transient[i] * n + transient[j]]
    });
    let b = DVector::from_iterator(m, transient.iter().map(|&x| r_pi[x]));
    let v = dense_solve(a, b, "transient system of an undiscounted model")?;
    for (i, &x) in transient.iter().enumerate() {
        values[x] = v[i];
    }
    Ok(ValueFunction(values))
}

fn absorbing_under(mdp: &Mdp, kernel: &Kernel) -> Vec<bool> {
    (0..mdp.n_states)
        .map(|x| {
            (0..mdp.n_actions)
                .all(|a| mdp.reward(x, a) == 0.0 && (kernel.row(x, a)[x] - 1.0).abs() <= DIST_TOL)
        })
        .collect()
}

fn iterative_evaluation(r_pi: &[f64], p_pi: &[f64], n: usize, gamma: f64) -> Result<ValueFunction> {
    const CAP: usize = 1_000_000;
    let threshold = 1e-11 * (1.0 - gamma) / gamma;
    let mut v = r_pi.to_vec();
    let mut next = vec![0.0; n];
    for it in 0..CAP {
        let mut residual = 0.0_f64;
        for x in 0..n {
            let nv = r_pi[x] + gamma * dot(&p_pi[x * n..(x + 1) * n], &v);
            residual = residual.max((nv - v[x]).abs());
            next[x] = nv;
        }
        std::mem::swap(&mut v, &mut next);
        if residual <= threshold {
            return Ok(ValueFunction(v));
        }
        if it + 1 == CAP {
            return Err(SpiError::NonConvergence {
                solver: "iterative policy evaluation",
                iterations: CAP,
                residual,
            });
        }
    }
    unreachable!()
}

/// Value function of `policy`: the solution of `v = r_π + γ P_π v`.
pub fn evaluate_value(mdp: &Mdp, policy: &Policy) -> Result<ValueFunction> {
    evaluate_with_kernel(mdp, policy, &mdp.transition)
}

/// Expected discounted return `p0 · v_π`.
pub fn evaluate_return(mdp: &Mdp, policy: &Policy) -> Result<f64> {
    Ok(dot(&mdp.initial, &evaluate_value(mdp, policy)?))
}

/// Normalized occupancy `u = (1 - γ)(I - γ P_πᵀ)^{-1} p0`.
pub fn occupancy(mdp: &Mdp, policy: &Policy) -> Result<OccupancyDistribution> {
    mdp.check_policy(policy)?;
    let gamma = mdp.discount;
    if gamma >= 1.0 {
        return Err(SpiError::InvalidArgument(
            "occupancy is defined for discount < 1 only".into(),
        ));
    }
    let n = mdp.n_states;
    let (_, p_pi) = policy_chain(mdp, policy, &mdp.transition);
    let a = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - gamma * p_pi[j * n + i]
    });
    let u = dense_solve(a, DVector::from_column_slice(&mdp.initial), "I - γ P_πᵀ")?;
    Ok(OccupancyDistribution(
        u.iter().map(|w| ((1.0 - gamma) * w).max(0.0)).collect(),
    ))
}

/// `Σ_x u(x) Σ_a π(a|x) e(x,a)`.
pub fn weighted_error_norm(
    error: &ErrorFunction,
    policy: &Policy,
    occ: &OccupancyDistribution,
) -> Result<f64> {
    if error.n_states() != policy.n_states()
        || error.n_actions() != policy.n_actions()
        || occ.len() != policy.n_states()
    {
        return Err(SpiError::Dimension(
            "error function, policy and occupancy disagree".into(),
        ));
    }
    Ok((0..policy.n_states())
        .map(|x| {
            occ[x]
                * (0..policy.n_actions())
                    .map(|a| policy.prob(x, a) * error.get(x, a))
                    .sum::<f64>()
        })
        .sum())
}

/// Q-values `r(x,a) + γ P(·|x,a)·v` under the model's own kernel.
pub fn q_values(mdp: &Mdp, values: &[f64]) -> Vec<f64> {
    let mut q = Vec::with_capacity(mdp.n_states * mdp.n_actions);
    for x in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            q.push(mdp.reward(x, a) + mdp.discount * dot(mdp.transition.row(x, a), values));
        }
    }
    q
}

/// Index of the largest entry, preferring the lowest index among near-ties.
pub(crate) fn argmax_lowest(q: &[f64], tie: f64) -> usize {
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    q.iter().position(|&v| v >= best - tie).unwrap_or(0)
}

/// Optimal deterministic policy of the nominal model.
///
/// Howard policy iteration runs to an exact fixed point; the returned policy
/// is greedy with respect to the converged values with ties resolved to the
/// lowest action index.
pub fn solve_nominal(mdp: &Mdp, tol: f64) -> Result<(Policy, ValueFunction)> {
    const CAP: usize = 10_000;
    let (n, m) = (mdp.n_states, mdp.n_actions);
    let mut actions: Vec<usize> = (0..n)
        .map(|x| {
            let r: Vec<f64> = (0..m).map(|a| mdp.reward(x, a)).collect();
            argmax_lowest(&r, 0.0)
        })
        .collect();
    let mut policy = Policy::deterministic(&actions, m)?;
    let mut values = evaluate_value(mdp, &policy)?;
    for _ in 0..CAP {
        let q = q_values(mdp, &values);
        let tie = tie_tolerance(values.sup_norm());
        let mut changed = false;
        for x in 0..n {
            let row = &q[x * m..(x + 1) * m];
            let best = argmax_lowest(row, 0.0);
            if row[best] > row[actions[x]] + tie {
                actions[x] = best;
                changed = true;
            }
        }
        if !changed {
            let greedy: Vec<usize> = (0..n)
                .map(|x| argmax_lowest(&q[x * m..(x + 1) * m], tie))
                .collect();
            if greedy != actions {
                actions = greedy;
                policy = Policy::deterministic(&actions, m)?;
                values = evaluate_value(mdp, &policy)?;
            }
            let residual = bellman_residual(mdp, &values);
            if residual > tol.max(tie) {
                return Err(SpiError::NonConvergence {
                    solver: "policy iteration",
                    iterations: CAP,
                    residual,
                });
            }
            return Ok((policy, values));
        }
        policy = Policy::deterministic(&actions, m)?;
        values = evaluate_value(mdp, &policy)?;
    }
    Err(SpiError::NonConvergence {
        solver: "policy iteration",
        iterations: CAP,
        residual: bellman_residual(mdp, &values),
    })
}

/// `‖T v − v‖∞` for the nominal Bellman optimality operator.
pub fn bellman_residual(mdp: &Mdp, values: &[f64]) -> f64 {
    let q = q_values(mdp, values);
    let m = mdp.n_actions;
    (0..mdp.n_states)
        .map(|x| {
            let best = q[x * m..(x + 1) * m]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            (best - values[x]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state(rewards: &[f64], gamma: f64) -> Mdp {
        let m = rewards.len();
        let kernel = Kernel::new(1, m, vec![1.0; m]).unwrap();
        Mdp::new(1, m, rewards.to_vec(), kernel, vec![1.0], gamma).unwrap()
    }

    #[test]
    fn geometric_series() {
        let mdp = one_state(&[1.0], 0.9);
        let v = evaluate_value(&mdp, &Policy::uniform(1, 1)).unwrap();
        assert!((v[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_gives_zero_values() {
        let kernel = Kernel::new(2, 1, vec![0.5, 0.5, 0.2, 0.8]).unwrap();
        let mdp = Mdp::new(2, 1, vec![0.0, 0.0], kernel, vec![0.5, 0.5], 0.95).unwrap();
        let v = evaluate_value(&mdp, &Policy::uniform(2, 1)).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_step_episode() {
        let kernel = Kernel::new(2, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let mdp = Mdp::from_parts(MdpParts {
            n_states: 2,
            n_actions: 1,
            reward: vec![1.0, 0.0],
            transition: kernel,
            initial: vec![1.0, 0.0],
            discount: 1.0,
            r_max: None,
            absorbing: true,
        })
        .unwrap();
        let v = evaluate_value(&mdp, &Policy::uniform(2, 1)).unwrap();
        assert_eq!(v.0, vec![1.0, 0.0]);
    }

    #[test]
    fn undiscounted_requires_absorption() {
        let kernel = Kernel::new(2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let parts = MdpParts {
            n_states: 2,
            n_actions: 1,
            reward: vec![1.0, 0.0],
            transition: kernel,
            initial: vec![1.0, 0.0],
            discount: 1.0,
            r_max: None,
            absorbing: true,
        };
        assert!(Mdp::from_parts(parts.clone()).is_err());
        assert!(Mdp::from_parts(MdpParts {
            absorbing: false,
            ..parts
        })
        .is_err());
    }

    #[test]
    fn duplicated_state_symmetry() {
        let kernel = Kernel::new(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mdp = Mdp::new(2, 1, vec![1.0, 1.0], kernel, vec![0.5, 0.5], 0.9).unwrap();
        let rho = evaluate_return(&mdp, &Policy::uniform(2, 1)).unwrap();
        assert!((rho - 10.0).abs() < 1e-12);
    }

    #[test]
    fn occupancy_simple_cases() {
        let mdp = one_state(&[1.0], 0.9);
        let u = occupancy(&mdp, &Policy::uniform(1, 1)).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12);

        let kernel = Kernel::new(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mdp = Mdp::new(2, 1, vec![0.0, 0.0], kernel, vec![0.3, 0.7], 0.9).unwrap();
        let u = occupancy(&mdp, &Policy::uniform(2, 1)).unwrap();
        assert!((u[0] - 0.3).abs() < 1e-12 && (u[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn occupancy_rejects_undiscounted() {
        let kernel = Kernel::new(2, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let mdp = Mdp::from_parts(MdpParts {
            n_states: 2,
            n_actions: 1,
            reward: vec![1.0, 0.0],
            transition: kernel,
            initial: vec![1.0, 0.0],
            discount: 1.0,
            r_max: None,
            absorbing: true,
        })
        .unwrap();
        assert!(occupancy(&mdp, &Policy::uniform(2, 1)).is_err());
    }

    #[test]
    fn dominant_action() {
        let mdp = one_state(&[1.0, 2.0], 0.5);
        let (pi, v) = solve_nominal(&mdp, 1e-9).unwrap();
        assert_eq!(pi.action(0), Some(1));
        assert!((v[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_norm_cases() {
        let pi = Policy::deterministic(&[0, 0], 1).unwrap();
        let occ = OccupancyDistribution(vec![0.5, 0.5]);
        let e = ErrorFunction::new(2, 1, vec![0.2, 0.6]).unwrap();
        assert!((weighted_error_norm(&e, &pi, &occ).unwrap() - 0.4).abs() < 1e-15);
        let zero = ErrorFunction::zeros(2, 1);
        assert_eq!(weighted_error_norm(&zero, &pi, &occ).unwrap(), 0.0);
        let c = ErrorFunction::constant(2, 1, 0.7);
        assert!((weighted_error_norm(&c, &pi, &occ).unwrap() - 0.7).abs() < 1e-15);
        let bad = OccupancyDistribution(vec![1.0]);
        assert!(weighted_error_norm(&e, &pi, &bad).is_err());
    }

    #[test]
    fn policy_dimension_mismatch() {
        let mdp = one_state(&[1.0, 2.0], 0.5);
        assert!(evaluate_value(&mdp, &Policy::uniform(1, 3)).is_err());
    }

    #[test]
    fn deterministic_detection() {
        let pi = Policy::from_rows(vec![vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(pi.action(0), Some(1));
        assert_eq!(pi.action(1), None);
        assert!(!pi.is_deterministic());
        assert!(Policy::from_rows(vec![vec![0.6, 0.6]]).is_err());
    }
}
