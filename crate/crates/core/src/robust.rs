//! Robust and optimistic evaluation, robust value iteration, and the
//! baseline-regret solver for sets that are exact on baseline actions.

use rayon::prelude::*;

use crate::error::{Result, SpiError};
use crate::mdp::{
    argmax_lowest, dot, evaluate_with_kernel, tie_tolerance, Kernel, Mdp, Policy, ValueFunction,
};
use crate::uncertainty::{baseline_actions, pair_response, Sense, SweepOrders, UncertaintySet};

/// Default iteration cap for robust value iteration.
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Work size (`n² · m`) above which Bellman sweeps run in parallel.
const PARALLEL_SWEEP_WORK: usize = 50_000;

/// Output of [`robust_value_iteration`].
#[derive(Debug, Clone, PartialEq)]
pub struct RobustSolveResult {
    pub policy: Policy,
    pub robust_values: ValueFunction,
    pub robust_return: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn check_shapes(mdp: &Mdp, set: &UncertaintySet) -> Result<()> {
    if set.n_states() != mdp.n_states() || set.n_actions() != mdp.n_actions() {
        return Err(SpiError::Dimension(format!(
            "uncertainty set is {}x{}, model is {}x{}",
            set.n_states(),
            set.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}

/// For undiscounted models every kernel in the set must reach absorption:
/// the union of all candidate supports has to be acyclic outside absorbing
/// states.
fn check_undiscounted_set(mdp: &Mdp, set: &UncertaintySet) -> Result<()> {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let rows_of = |x: usize, a: usize| -> Vec<Vec<f64>> {
        match set {
            UncertaintySet::L1(s) => vec![s.nominal().row(x, a).to_vec()],
            UncertaintySet::Scenarios(s) => s.candidates(x, a).to_vec(),
        }
    };
    if let UncertaintySet::L1(s) = set {
        if s.budget().sup_norm() > 0.0 {
            return Err(SpiError::Precondition(
                "discount 1 supports only scenario sets or zero L1 budgets".into(),
            ));
        }
    }
    let absorbing: Vec<bool> = (0..n)
        .map(|x| {
            (0..m).all(|a| mdp.reward(x, a) == 0.0 && rows_of(x, a).iter().all(|r| r[x] == 1.0))
        })
        .collect();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|x| {
            if absorbing[x] {
                return Vec::new();
            }
            let mut s: Vec<usize> = (0..m)
                .flat_map(|a| rows_of(x, a))
                .flat_map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(y, _)| y)
                        .collect::<Vec<_>>()
                })
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark = vec![0u8; n];
    for root in 0..n {
        if mark[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = 1;
        while let Some(&mut (x, ref mut i)) = stack.last_mut() {
            if *i < succ[x].len() {
                let y = succ[x][*i];
                *i += 1;
                match mark[y] {
                    1 => {
                        return Err(SpiError::Precondition(format!(
                            "scenario supports contain a cycle through state {y}"
                        )))
                    }
                    0 => {
                        mark[y] = 1;
                        stack.push((y, 0));
                    }
                    _ => {}
                }
            } else {
                mark[x] = 2;
                stack.pop();
            }
        }
    }
    Ok(())
}

fn check_evaluation_preconditions(mdp: &Mdp, set: &UncertaintySet, policy: &Policy) -> Result<()> {
    check_shapes(mdp, set)?;
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(SpiError::Dimension(
            "policy shape differs from model".into(),
        ));
    }
    if mdp.discount() >= 1.0 {
        check_undiscounted_set(mdp, set)?;
    }
    Ok(())
}

/// Exact extremal evaluation by policy iteration for nature: start from the
/// nominal kernel, switch a row whenever its extremal response strictly
/// improves nature's objective, stop when no row does.
pub(crate) fn extreme_evaluation(
    mdp: &Mdp,
    set: &UncertaintySet,
    policy: &Policy,
    tol: f64,
    sense: Sense,
) -> Result<(ValueFunction, Kernel)> {
    const CAP: usize = 100_000;
    check_evaluation_preconditions(mdp, set, policy)?;
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let mut kernel = set.nominal_kernel();
    let mut values = evaluate_with_kernel(mdp, policy, &kernel)?;
    let mut buf = vec![0.0; n];
    for _ in 0..CAP {
        let orders = SweepOrders::new(&values, sense);
        let thresh = 1e-13 * (1.0 + values.sup_norm());
        let mut changed = false;
        for x in 0..n {
            for a in 0..m {
                if policy.prob(x, a) == 0.0 {
                    continue;
                }
                let current = dot(kernel.row(x, a), &values);
                let candidate = pair_response(set, x, a, &values, sense, &orders, &mut buf);
                let improves = match sense {
                    Sense::Min => candidate < current - thresh,
                    Sense::Max => candidate > current + thresh,
                };
                if improves {
                    kernel.row_mut(x, a).copy_from_slice(&buf);
                    changed = true;
                }
            }
        }
        if !changed {
            let residual = policy_operator_residual(mdp, set, policy, &values, sense);
            let allowed = tol.max(tie_tolerance(values.sup_norm()));
            if residual > allowed {
                return Err(SpiError::NonConvergence {
                    solver: "robust policy evaluation",
                    iterations: CAP,
                    residual,
                });
            }
            return Ok((values, kernel));
        }
        values = evaluate_with_kernel(mdp, policy, &kernel)?;
    }
    Err(SpiError::NonConvergence {
        solver: "robust policy evaluation",
        iterations: CAP,
        residual: f64::NAN,
    })
}

fn policy_operator_residual(
    mdp: &Mdp,
    set: &UncertaintySet,
    policy: &Policy,
    values: &[f64],
    sense: Sense,
) -> f64 {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let orders = SweepOrders::new(values, sense);
    let mut buf = vec![0.0; n];
    let gamma = mdp.discount();
    (0..n)
        .map(|x| {
            let tv: f64 = (0..m)
                .filter(|&a| policy.prob(x, a) > 0.0)
                .map(|a| {
                    policy.prob(x, a)
                        * (mdp.reward(x, a)
                            + gamma * pair_response(set, x, a, values, sense, &orders, &mut buf))
                })
                .sum();
            (tv - values[x]).abs()
        })
        .fold(0.0, f64::max)
}

/// Worst-case values of `policy` over `set` and the robust return `p0 · v`.
pub fn robust_policy_evaluation(
    mdp: &Mdp,
    set: &UncertaintySet,
    policy: &Policy,
    tol: f64,
) -> Result<(ValueFunction, f64)> {
    let (v, _) = extreme_evaluation(mdp, set, policy, tol, Sense::Min)?;
    let ret = dot(mdp.initial(), &v);
    Ok((v, ret))
}

/// Best-case values of `policy` over `set` and the optimistic return.
pub fn optimistic_policy_evaluation(
    mdp: &Mdp,
    set: &UncertaintySet,
    policy: &Policy,
    tol: f64,
) -> Result<(ValueFunction, f64)> {
    let (v, _) = extreme_evaluation(mdp, set, policy, tol, Sense::Max)?;
    let ret = dot(mdp.initial(), &v);
    Ok((v, ret))
}

/// Kernel in `set` attaining the worst case for `policy`.
pub fn worst_case_kernel(
    mdp: &Mdp,
    set: &UncertaintySet,
    policy: &Policy,
    tol: f64,
) -> Result<Kernel> {
    Ok(extreme_evaluation(mdp, set, policy, tol, Sense::Min)?.1)
}

/// Robust Q-values `r(x,a) + γ min_p p·v`, row-major.
fn robust_q_values(mdp: &Mdp, set: &UncertaintySet, values: &[f64]) -> Vec<f64> {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let gamma = mdp.discount();
    let orders = SweepOrders::new(values, Sense::Min);
    let state_q = |x: usize, out: &mut [f64]| {
        let mut buf = vec![0.0; n];
        for (a, q) in out.iter_mut().enumerate() {
            *q = mdp.reward(x, a)
                + gamma * pair_response(set, x, a, values, Sense::Min, &orders, &mut buf);
        }
    };
    let mut q = vec![0.0; n * m];
    if n * n * m >= PARALLEL_SWEEP_WORK {
        q.par_chunks_mut(m)
            .enumerate()
            .for_each(|(x, out)| state_q(x, out));
    } else {
        q.chunks_mut(m)
            .enumerate()
            .for_each(|(x, out)| state_q(x, out));
    }
    q
}

/// One application of the robust Bellman optimality operator.
pub fn robust_bellman_update(mdp: &Mdp, set: &UncertaintySet, values: &[f64]) -> Result<Vec<f64>> {
    check_shapes(mdp, set)?;
    if values.len() != mdp.n_states() {
        return Err(SpiError::Dimension(
            "value vector length differs from model".into(),
        ));
    }
    let m = mdp.n_actions();
    Ok(robust_q_values(mdp, set, values)
        .chunks(m)
        .map(|q| q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Robust value iteration with the default iteration cap.
pub fn robust_value_iteration(
    mdp: &Mdp,
    set: &UncertaintySet,
    tol: f64,
) -> Result<RobustSolveResult> {
    robust_value_iteration_capped(mdp, set, tol, DEFAULT_MAX_ITERATIONS)
}

fn iterate_to_fixed_point(
    mdp: &Mdp,
    set: &UncertaintySet,
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, Vec<f64>, usize, f64)> {
    check_shapes(mdp, set)?;
    let gamma = mdp.discount();
    if !(tol > 0.0) {
        return Err(SpiError::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    // Undiscounted sets must be acyclic; the iteration then reaches its
    // fixed point exactly after at most `n_states` sweeps.
    let stop = if gamma >= 1.0 {
        check_undiscounted_set(mdp, set)?;
        0.0
    } else {
        tol * (1.0 - gamma) / (2.0 * gamma)
    };
    let m = mdp.n_actions();
    let mut values = vec![0.0; mdp.n_states()];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        let q = robust_q_values(mdp, set, &values);
        let next: Vec<f64> = q
            .chunks(m)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        residual = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if residual <= stop {
            let q = robust_q_values(mdp, set, &values);
            return Ok((values, q, it, residual));
        }
    }
    Err(SpiError::NonConvergence {
        solver: "robust value iteration",
        iterations: max_iterations,
        residual,
    })
}

/// Robust value iteration with an explicit iteration cap.
pub fn robust_value_iteration_capped(
    mdp: &Mdp,
    set: &UncertaintySet,
    tol: f64,
    max_iterations: usize,
) -> Result<RobustSolveResult> {
    let (values, q, iterations, residual) = iterate_to_fixed_point(mdp, set, tol, max_iterations)?;
    let m = mdp.n_actions();
    let tie = tie_tolerance(values.iter().fold(0.0_f64, |s, v| s.max(v.abs())));
    let actions: Vec<usize> = q.chunks(m).map(|row| argmax_lowest(row, tie)).collect();
    let robust_return = dot(mdp.initial(), &values);
    Ok(RobustSolveResult {
        policy: Policy::deterministic(&actions, m)?,
        robust_values: ValueFunction(values),
        robust_return,
        iterations,
        residual,
    })
}

/// Baseline-regret maximization when `set` is exact on every baseline
/// action. The objective then equals the robust return minus the constant
/// nominal return of the baseline, so robust value iteration solves it.
///
/// Near-ties at a state are resolved in favour of the baseline action. The
/// certificate is recomputed by exact robust evaluation of the returned
/// policy; if it is not positive the baseline itself is returned with a
/// certificate of zero.
pub fn solve_regret_robust_reduced(
    mdp: &Mdp,
    set: &UncertaintySet,
    baseline: &Policy,
    tol: f64,
) -> Result<(Policy, f64)> {
    solve_regret_robust_reduced_capped(mdp, set, baseline, tol, DEFAULT_MAX_ITERATIONS)
}

pub(crate) fn solve_regret_robust_reduced_capped(
    mdp: &Mdp,
    set: &UncertaintySet,
    baseline: &Policy,
    tol: f64,
    max_iterations: usize,
) -> Result<(Policy, f64)> {
    check_shapes(mdp, set)?;
    let base = baseline_actions(baseline)?;
    if base.len() != mdp.n_states() || baseline.n_actions() != mdp.n_actions() {
        return Err(SpiError::Dimension(
            "baseline shape differs from model".into(),
        ));
    }
    if let Some(x) = (0..mdp.n_states()).find(|&x| !set.is_exact_at(x, base[x])) {
        return Err(SpiError::Precondition(format!(
            "uncertainty on baseline action {} at state {x} is not zero",
            base[x]
        )));
    }
    let (values, q, _, _) = iterate_to_fixed_point(mdp, set, tol, max_iterations)?;
    let m = mdp.n_actions();
    let tie = tie_tolerance(values.iter().fold(0.0_f64, |s, v| s.max(v.abs())));
    let actions: Vec<usize> = q
        .chunks(m)
        .zip(&base)
        .map(|(row, &b)| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if row[b] >= best - tie {
                b
            } else {
                argmax_lowest(row, tie)
            }
        })
        .collect();
    if actions == base {
        return Ok((baseline.clone(), 0.0));
    }
    let policy = Policy::deterministic(&actions, m)?;
    let (_, robust_return) = robust_policy_evaluation(mdp, set, &policy, tol)?;
    let nominal = set.nominal_kernel();
    let baseline_return = dot(
        mdp.initial(),
        &evaluate_with_kernel(mdp, baseline, &nominal)?,
    );
    let zeta = robust_return - baseline_return;
    if zeta <= 0.0 {
        return Ok((baseline.clone(), 0.0));
    }
    Ok((policy, zeta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::ErrorFunction;

    fn chain() -> Mdp {
        let kernel = Kernel::new(2, 2, vec![0.7, 0.3, 0.2, 0.8, 0.4, 0.6, 0.9, 0.1]).unwrap();
        Mdp::new(2, 2, vec![1.0, 0.0, -1.0, 0.5], kernel, vec![1.0, 0.0], 0.9).unwrap()
    }

    #[test]
    fn zero_budget_matches_nominal() {
        let mdp = chain();
        let set = UncertaintySet::l1(mdp.transition().clone(), ErrorFunction::zeros(2, 2)).unwrap();
        let pi = Policy::uniform(2, 2);
        let (v, r) = robust_policy_evaluation(&mdp, &set, &pi, 1e-9).unwrap();
        let nominal = crate::mdp::evaluate_value(&mdp, &pi).unwrap();
        assert!(v
            .iter()
            .zip(nominal.iter())
            .all(|(a, b)| (a - b).abs() < 1e-10));
        let (_, o) = optimistic_policy_evaluation(&mdp, &set, &pi, 1e-9).unwrap();
        assert!((r - o).abs() < 1e-10);

        let res = robust_value_iteration(&mdp, &set, 1e-9).unwrap();
        let (pi_n, v_n) = crate::mdp::solve_nominal(&mdp, 1e-9).unwrap();
        assert_eq!(res.policy, pi_n);
        assert!((res.robust_values[0] - v_n[0]).abs() < 1e-8);
    }

    #[test]
    fn sandwich() {
        let mdp = chain();
        let set = UncertaintySet::l1(mdp.transition().clone(), ErrorFunction::constant(2, 2, 0.4))
            .unwrap();
        let pi = Policy::uniform(2, 2);
        let (_, lo) = robust_policy_evaluation(&mdp, &set, &pi, 1e-9).unwrap();
        let (_, hi) = optimistic_policy_evaluation(&mdp, &set, &pi, 1e-9).unwrap();
        let mid = crate::mdp::evaluate_return(&mdp, &pi).unwrap();
        assert!(lo <= mid + 1e-12 && mid <= hi + 1e-12 && lo < hi);
    }

    #[test]
    fn regret_solver_rejects_uncertain_baseline() {
        let mdp = chain();
        let set = UncertaintySet::l1(mdp.transition().clone(), ErrorFunction::constant(2, 2, 0.4))
            .unwrap();
        let base = Policy::deterministic(&[0, 0], 2).unwrap();
        assert!(matches!(
            solve_regret_robust_reduced(&mdp, &set, &base, 1e-9),
            Err(SpiError::Precondition(_))
        ));
    }

    #[test]
    fn value_iteration_rejects_undiscounted_and_caps() {
        let mdp = chain();
        let set = UncertaintySet::l1(mdp.transition().clone(), ErrorFunction::zeros(2, 2)).unwrap();
        assert!(matches!(
            robust_value_iteration_capped(&mdp, &set, 1e-9, 3),
            Err(SpiError::NonConvergence { .. })
        ));
    }
}
