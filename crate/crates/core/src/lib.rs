//! Safe policy improvement on MDPs with uncertain transition models.
//!
//! Four methods compute a policy from an estimated model and a per-pair L1
//! error bound: the plain nominal solution (EXP), a reward-penalized model
//! (RWA), a robust MDP (ROB) and a robust baseline-regret approximation (RBC).
//! The last three fall back to the baseline when they cannot certify an
//! improvement.

pub mod algorithms;
pub mod domains;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod io;
pub mod mdp;
pub mod oracle;
pub mod robust;
pub mod uncertainty;
pub mod verify;

pub use algorithms::{
    bound_rhs, evaluate_against_truth, evaluate_with_optimum, reward_adjusted_mdp, solve_exp,
    solve_method, solve_rbc, solve_rob, solve_rwa, BoundKind, EvaluationReport, Method,
    SolveReport, SolverConfig,
};
pub use error::{Result, SpiError};
pub use estimation::{
    collect_samples, empirical_model, weissman_budget, Behavior, EstimationConfig, SampleCounts,
};
pub use harness::{
    run_experiment, Domain, ExperimentConfig, ExperimentRecord, Sampling, CSV_HEADER,
};
pub use mdp::{
    evaluate_return, evaluate_value, occupancy, solve_nominal, Kernel, Mdp, MdpParts,
    OccupancyDistribution, Policy, ValueFunction,
};
pub use robust::{
    optimistic_policy_evaluation, robust_policy_evaluation, robust_value_iteration,
    solve_regret_robust_reduced, RobustSolveResult,
};
pub use uncertainty::{
    best_case_response, worst_case_response, ErrorFunction, L1UncertaintySet, ScenarioSet, Sense,
    UncertaintySet,
};
