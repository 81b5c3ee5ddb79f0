//! The four policy-improvement methods, evaluation against a known true
//! model, and the right-hand sides of the performance-loss bounds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiError};
use crate::mdp::{
    dot, evaluate_return, evaluate_with_kernel, occupancy, solve_nominal, weighted_error_norm, Mdp,
    Policy,
};
use crate::robust::{
    optimistic_policy_evaluation, robust_policy_evaluation, robust_value_iteration_capped,
    solve_regret_robust_reduced_capped,
};
use crate::uncertainty::{baseline_actions, ErrorFunction, UncertaintySet};

/// Tolerance for the safety verdict.
pub const SAFETY_TOL: f64 = 1e-9;

/// Policy-improvement method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Solve the estimated model as if it were exact.
    Exp,
    /// Reward-adjusted model with a fallback test.
    Rwa,
    /// Robust solution with a fallback test.
    Rob,
    /// Robust baseline-regret minimization with exact baseline transitions.
    Rbc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exp, Method::Rwa, Method::Rob, Method::Rbc];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exp => "EXP",
            Method::Rwa => "RWA",
            Method::Rob => "ROB",
            Method::Rbc => "RBC",
        })
    }
}

impl FromStr for Method {
    type Err = SpiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp" => Ok(Method::Exp),
            "rwa" => Ok(Method::Rwa),
            "rob" => Ok(Method::Rob),
            "rbc" => Ok(Method::Rbc),
            other => Err(SpiError::InvalidArgument(format!(
                "unknown method `{other}`"
            ))),
        }
    }
}

/// Solver tolerances shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: crate::robust::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Outcome of one method on one estimated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub policy: Policy,
    /// Method-specific guarantee: nominal return for EXP, adjusted return for
    /// RWA, robust return for ROB and RBC.
    pub certified_value: f64,
    /// What the certified value is compared against.
    pub baseline_comparator: f64,
    pub fell_back_to_baseline: bool,
    /// Certified baseline regret, RBC only.
    pub regret_certificate: Option<f64>,
}

fn check_baseline(mdp: &Mdp, baseline: &Policy) -> Result<()> {
    if baseline.n_states() != mdp.n_states() || baseline.n_actions() != mdp.n_actions() {
        return Err(SpiError::Dimension(
            "baseline shape differs from model".into(),
        ));
    }
    Ok(())
}

/// Optimal policy of the estimated model; never falls back.
pub fn solve_exp(estimated: &Mdp) -> Result<SolveReport> {
    solve_exp_with(estimated, None, &SolverConfig::default())
}

/// EXP with an optional baseline used only to fill the comparator.
pub fn solve_exp_with(
    estimated: &Mdp,
    baseline: Option<&Policy>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let (policy, values) = solve_nominal(estimated, cfg.tol)?;
    let comparator = match baseline {
        Some(b) => {
            check_baseline(estimated, b)?;
            evaluate_return(estimated, b)?
        }
        None => f64::NAN,
    };
    Ok(SolveReport {
        method: Method::Exp,
        policy,
        certified_value: dot(estimated.initial(), &values),
        baseline_comparator: comparator,
        fell_back_to_baseline: false,
        regret_certificate: None,
    })
}

/// The reward-adjusted model `r − γ Rmax / (1 − γ) · e`.
pub fn reward_adjusted_mdp(estimated: &Mdp, error: &ErrorFunction) -> Result<Mdp> {
    let gamma = estimated.discount();
    if gamma >= 1.0 {
        return Err(SpiError::Precondition(
            "reward adjustment is undefined for discount 1".into(),
        ));
    }
    if error.n_states() != estimated.n_states() || error.n_actions() != estimated.n_actions() {
        return Err(SpiError::Dimension(
            "error function shape differs from model".into(),
        ));
    }
    let penalty = gamma * estimated.r_max() / (1.0 - gamma);
    let m = estimated.n_actions();
    let rewards = estimated
        .rewards()
        .iter()
        .enumerate()
        .map(|(i, r)| r - penalty * error.get(i / m, i % m))
        .collect();
    estimated.with_rewards(rewards)
}

/// Reward-adjusted method: solve the adjusted model and keep its optimum only
/// if its adjusted return strictly beats the baseline's optimistic return.
pub fn solve_rwa(estimated: &Mdp, set: &UncertaintySet, baseline: &Policy) -> Result<SolveReport> {
    solve_rwa_with(estimated, set, baseline, &SolverConfig::default())
}

pub fn solve_rwa_with(
    estimated: &Mdp,
    set: &UncertaintySet,
    baseline: &Policy,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_baseline(estimated, baseline)?;
    let adjusted = reward_adjusted_mdp(estimated, &set.l1_radius())?;
    let (candidate, values) = solve_nominal(&adjusted, cfg.tol)?;
    let rho0 = dot(adjusted.initial(), &values);
    let (_, optimistic) = optimistic_policy_evaluation(estimated, set, baseline, cfg.tol)?;
    Ok(fallback_report(
        Method::Rwa,
        candidate,
        rho0,
        optimistic,
        baseline,
    ))
}

/// Robust method: keep the robust optimum only if its robust return strictly
/// beats the baseline's optimistic return.
pub fn solve_rob(estimated: &Mdp, set: &UncertaintySet, baseline: &Policy) -> Result<SolveReport> {
    solve_rob_with(estimated, set, baseline, &SolverConfig::default())
}

pub fn solve_rob_with(
    estimated: &Mdp,
    set: &UncertaintySet,
    baseline: &Policy,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_baseline(estimated, baseline)?;
    let solved = robust_value_iteration_capped(estimated, set, cfg.tol, cfg.max_iterations)?;
    let (_, robust) = robust_policy_evaluation(estimated, set, &solved.policy, cfg.tol)?;
    let (_, optimistic) = optimistic_policy_evaluation(estimated, set, baseline, cfg.tol)?;
    Ok(fallback_report(
        Method::Rob,
        solved.policy,
        robust,
        optimistic,
        baseline,
    ))
}

fn fallback_report(
    method: Method,
    candidate: Policy,
    certified: f64,
    comparator: f64,
    baseline: &Policy,
) -> SolveReport {
    let accept = certified > comparator;
    SolveReport {
        method,
        policy: if accept { candidate } else { baseline.clone() },
        certified_value: certified,
        baseline_comparator: comparator,
        fell_back_to_baseline: !accept,
        regret_certificate: None,
    }
}

/// Robust baseline-regret method on the L1 set around the estimated kernel.
pub fn solve_rbc(estimated: &Mdp, error: &ErrorFunction, baseline: &Policy) -> Result<SolveReport> {
    let set = UncertaintySet::l1(estimated.transition().clone(), error.clone())?;
    solve_rbc_with_set(estimated, &set, baseline, &SolverConfig::default())
}

/// RBC on an arbitrary set; uncertainty on baseline actions is removed first.
pub fn solve_rbc_with_set(
    estimated: &Mdp,
    set: &UncertaintySet,
    baseline: &Policy,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_baseline(estimated, baseline)?;
    baseline_actions(baseline)?;
    let reduced = set.restrict_to_baseline(baseline)?;
    let (policy, zeta) = solve_regret_robust_reduced_capped(
        estimated,
        &reduced,
        baseline,
        cfg.tol,
        cfg.max_iterations,
    )?;
    let baseline_nominal = dot(
        estimated.initial(),
        &evaluate_with_kernel(estimated, baseline, &reduced.nominal_kernel())?,
    );
    let fell_back = policy == *baseline;
    Ok(SolveReport {
        method: Method::Rbc,
        policy,
        certified_value: baseline_nominal + zeta,
        baseline_comparator: baseline_nominal,
        fell_back_to_baseline: fell_back,
        regret_certificate: Some(zeta),
    })
}

/// Runs `method`. EXP ignores the set; RBC removes baseline uncertainty.
pub fn solve_method(
    method: Method,
    estimated: &Mdp,
    set: &UncertaintySet,
    baseline: &Policy,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    match method {
        Method::Exp => solve_exp_with(estimated, Some(baseline), cfg),
        Method::Rwa => solve_rwa_with(estimated, set, baseline, cfg),
        Method::Rob => solve_rob_with(estimated, set, baseline, cfg),
        Method::Rbc => solve_rbc_with_set(estimated, set, baseline, cfg),
    }
}

/// Ground-truth assessment of a returned policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub true_return: f64,
    pub baseline_true_return: f64,
    pub optimal_true_return: f64,
    /// `optimal_true_return − true_return`.
    pub performance_loss: f64,
    pub is_safe: bool,
    pub bound_rhs: Option<f64>,
}

/// True returns of the report's policy, the baseline and the true optimum.
pub fn evaluate_against_truth(
    report: &SolveReport,
    true_mdp: &Mdp,
    baseline: &Policy,
) -> Result<EvaluationReport> {
    let (_, opt_values) = solve_nominal(true_mdp, 1e-9)?;
    let optimal = dot(true_mdp.initial(), &opt_values);
    evaluate_with_optimum(&report.policy, true_mdp, baseline, optimal)
}

/// As [`evaluate_against_truth`] with a precomputed optimal true return.
pub fn evaluate_with_optimum(
    policy: &Policy,
    true_mdp: &Mdp,
    baseline: &Policy,
    optimal_true_return: f64,
) -> Result<EvaluationReport> {
    let true_return = evaluate_return(true_mdp, policy)?;
    let baseline_true_return = evaluate_return(true_mdp, baseline)?;
    Ok(EvaluationReport {
        true_return,
        baseline_true_return,
        optimal_true_return,
        performance_loss: optimal_true_return - true_return,
        is_safe: true_return >= baseline_true_return - SAFETY_TOL,
        bound_rhs: None,
    })
}

/// Which performance-loss bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Regret minimization: occupancy-weighted errors of the optimum and baseline.
    RegretRobust,
    /// Plain nominal solution: `2γRmax/(1−γ)² ‖e‖∞`.
    Nominal,
    /// Robust method; same form as `RegretRobust`.
    Robust,
    /// Reward-adjusted method; same form as `RegretRobust`.
    RewardAdjusted,
}

impl BoundKind {
    pub fn for_method(method: Method) -> Self {
        match method {
            Method::Exp => BoundKind::Nominal,
            Method::Rwa => BoundKind::RewardAdjusted,
            Method::Rob => BoundKind::Robust,
            Method::Rbc => BoundKind::RegretRobust,
        }
    }
}

/// Right-hand side of the selected bound, computed from the true model.
pub fn bound_rhs(
    kind: BoundKind,
    true_mdp: &Mdp,
    error: &ErrorFunction,
    baseline: &Policy,
) -> Result<f64> {
    let gamma = true_mdp.discount();
    if gamma >= 1.0 {
        return Err(SpiError::Precondition("bounds need discount < 1".into()));
    }
    if error.n_states() != true_mdp.n_states() || error.n_actions() != true_mdp.n_actions() {
        return Err(SpiError::Dimension(
            "error function shape differs from model".into(),
        ));
    }
    check_baseline(true_mdp, baseline)?;
    let scale = 2.0 * gamma * true_mdp.r_max() / (1.0 - gamma).powi(2);
    if kind == BoundKind::Nominal {
        return Ok(scale * error.sup_norm());
    }
    let (opt, opt_values) = solve_nominal(true_mdp, 1e-9)?;
    let optimal = dot(true_mdp.initial(), &opt_values);
    let phi_base = optimal - evaluate_return(true_mdp, baseline)?;
    let e_opt = weighted_error_norm(error, &opt, &occupancy(true_mdp, &opt)?)?;
    let e_base = weighted_error_norm(error, baseline, &occupancy(true_mdp, baseline)?)?;
    Ok((scale * (e_opt + e_base)).min(phi_base.max(0.0)))
}
