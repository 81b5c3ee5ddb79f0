//! Small hand-built models with finite scenario sets.
//!
//! Terminal payoffs are paid by a leaf state one step after it is entered; a
//! leaf moves to a shared zero-reward absorbing sink. Every state has the same
//! number of actions, so states with a single meaningful choice repeat it.

use crate::error::{Result, SpiError};
use crate::mdp::{Kernel, Mdp, MdpParts, Policy};
use crate::uncertainty::ScenarioSet;

/// A model with a finite scenario set and a baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInstance {
    /// Model whose kernel is the first scenario.
    pub mdp: Mdp,
    pub scenarios: ScenarioSet,
    pub baseline: Policy,
}

impl ScenarioInstance {
    /// Kernel choosing candidate `k` wherever it exists, else the first.
    pub fn scenario_kernel(&self, k: usize) -> Kernel {
        let selection: Vec<usize> = self
            .scenarios
            .counts()
            .iter()
            .map(|&c| if k < c { k } else { 0 })
            .collect();
        self.scenarios
            .kernel_from_selection(&selection)
            .expect("selection is in range")
    }

    /// The model under scenario `k`.
    pub fn scenario_mdp(&self, k: usize) -> Result<Mdp> {
        self.mdp.with_kernel(self.scenario_kernel(k))
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Builder for two-action models: every pair lists its candidate successors.
struct Spec {
    n: usize,
    reward: Vec<f64>,
    successors: Vec<Vec<usize>>,
}

impl Spec {
    fn new(n: usize) -> Self {
        Self {
            n,
            reward: vec![0.0; 2 * n],
            successors: vec![Vec::new(); 2 * n],
        }
    }

    fn pair(&mut self, x: usize, a: usize, reward: f64, succ: &[usize]) -> &mut Self {
        self.reward[2 * x + a] = reward;
        self.successors[2 * x + a] = succ.to_vec();
        self
    }

    /// Both actions identical.
    fn state(&mut self, x: usize, reward: f64, succ: &[usize]) -> &mut Self {
        self.pair(x, 0, reward, succ).pair(x, 1, reward, succ)
    }

    fn build(
        &self,
        discount: f64,
        r_max: Option<f64>,
        absorbing: bool,
        start: usize,
        baseline: &[usize],
    ) -> Result<ScenarioInstance> {
        let n = self.n;
        let candidates: Vec<Vec<Vec<f64>>> = self
            .successors
            .iter()
            .map(|s| s.iter().map(|&y| unit(n, y)).collect())
            .collect();
        let scenarios = ScenarioSet::new(n, 2, candidates)?;
        let mdp = Mdp::from_parts(MdpParts {
            n_states: n,
            n_actions: 2,
            reward: self.reward.clone(),
            transition: scenarios.nominal_kernel(),
            initial: unit(n, start),
            discount,
            r_max,
            absorbing,
        })?;
        Ok(ScenarioInstance {
            mdp,
            scenarios,
            baseline: Policy::deterministic(baseline, 2)?,
        })
    }
}

/// State indices of [`build_example1`].
pub mod example1 {
    pub const X1: usize = 0;
    pub const X11: usize = 1;
    pub const LEAF: usize = 2;
    pub const SINK: usize = 3;
}

/// Undiscounted two-scenario model where the best min-regret policy must
/// randomize. At `x1`, `a1` leads to `x11` under `ξ1` and to a leaf paying 1
/// under `ξ2`; `a2` pays 2. At `x11`, `a11` pays 2 and `a12` pays 3. The
/// baseline takes `a1` and `a11`.
pub fn build_example1() -> Result<ScenarioInstance> {
    use example1::*;
    let mut spec = Spec::new(4);
    spec.pair(X1, 0, 0.0, &[X11, LEAF])
        .pair(X1, 1, 2.0, &[SINK])
        .pair(X11, 0, 2.0, &[SINK])
        .pair(X11, 1, 3.0, &[SINK])
        .state(LEAF, 1.0, &[SINK])
        .state(SINK, 0.0, &[SINK]);
    spec.build(1.0, None, true, X1, &[0, 0, 0, 0])
}

/// State indices of [`build_illustrative`].
pub mod illustrative {
    pub const X0: usize = 0;
    pub const X1: usize = 1;
    pub const GOOD: usize = 2;
    pub const BAD: usize = 3;
    pub const SINK: usize = 4;
}

/// Model that is exact at `x0` and uncertain at `x1`. At `x0`, `a2` pays 1
/// more than `a1`; both lead to `x1`. At `x1`, `a1` reaches the `+10` leaf
/// under `ξ*` and the `−10` leaf under `ξ1`; `a2` always reaches `−10`.
/// Scenario order is `{ξ*, ξ1}`; the baseline takes `a1` everywhere.
pub fn build_illustrative(gamma: f64) -> Result<ScenarioInstance> {
    use illustrative::*;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SpiError::InvalidArgument(format!(
            "discount {gamma} outside (0, 1)"
        )));
    }
    let payoff = 10.0 / (gamma * gamma);
    let mut spec = Spec::new(5);
    spec.pair(X0, 0, 0.0, &[X1])
        .pair(X0, 1, 1.0, &[X1])
        .pair(X1, 0, 0.0, &[GOOD, BAD])
        .pair(X1, 1, 0.0, &[BAD])
        .state(GOOD, payoff, &[SINK])
        .state(BAD, -payoff, &[SINK])
        .state(SINK, 0.0, &[SINK]);
    spec.build(gamma, None, false, X0, &[0; 5])
}

/// State indices of [`build_tightness`].
pub mod tightness {
    pub const X0: usize = 0;
    pub const ONE: usize = 1;
    pub const MID: usize = 2;
    pub const TOP: usize = 3;
    pub const SINK: usize = 4;
}

/// Tightness model with the default discount 0.9.
pub fn build_tightness(epsilon: f64) -> Result<ScenarioInstance> {
    build_tightness_with(epsilon, 0.9)
}

/// One decision at `x0`: under `P*`, `a1` earns 1 and `a2` earns `1 + 2ε`;
/// under `ξ1` both earn `1 + ε`. Scenario order is `{P*, ξ1}`; the baseline
/// takes `a1`.
pub fn build_tightness_with(epsilon: f64, gamma: f64) -> Result<ScenarioInstance> {
    use tightness::*;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SpiError::InvalidArgument(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SpiError::InvalidArgument(format!(
            "discount {gamma} outside (0, 1)"
        )));
    }
    let r_max = (1.0 + 2.0 * epsilon) / gamma;
    if 1.0 + 2.0 * epsilon > r_max / (1.0 - gamma) {
        return Err(SpiError::InvalidArgument(format!(
            "return 1 + 2ε = {} exceeds Rmax / (1 − γ)",
            1.0 + 2.0 * epsilon
        )));
    }
    let mut spec = Spec::new(5);
    spec.pair(X0, 0, 0.0, &[ONE, MID])
        .pair(X0, 1, 0.0, &[TOP, MID])
        .state(ONE, 1.0 / gamma, &[SINK])
        .state(MID, (1.0 + epsilon) / gamma, &[SINK])
        .state(TOP, (1.0 + 2.0 * epsilon) / gamma, &[SINK])
        .state(SINK, 0.0, &[SINK]);
    spec.build(gamma, Some(r_max), false, X0, &[0; 5])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{evaluate_return, solve_nominal};

    #[test]
    fn example1_payoffs() {
        let inst = build_example1().unwrap();
        let xi1 = inst.scenario_mdp(0).unwrap();
        let xi2 = inst.scenario_mdp(1).unwrap();
        let a1_improved = Policy::deterministic(&[0, 1, 0, 0], 2).unwrap();
        let a2 = Policy::deterministic(&[1, 0, 0, 0], 2).unwrap();
        assert_eq!(evaluate_return(&xi1, &a1_improved).unwrap(), 3.0);
        assert_eq!(evaluate_return(&xi2, &a1_improved).unwrap(), 1.0);
        assert_eq!(evaluate_return(&xi1, &a2).unwrap(), 2.0);
        assert_eq!(evaluate_return(&xi2, &a2).unwrap(), 2.0);
        assert_eq!(evaluate_return(&xi1, &inst.baseline).unwrap(), 2.0);
        assert_eq!(evaluate_return(&xi2, &inst.baseline).unwrap(), 1.0);
    }

    #[test]
    fn illustrative_optimum() {
        let inst = build_illustrative(0.9).unwrap();
        let (pi, v) = solve_nominal(&inst.mdp, 1e-9).unwrap();
        assert_eq!(pi.action(illustrative::X0), Some(1));
        assert!((v[illustrative::X0] - 11.0).abs() < 1e-9);
        assert!(build_illustrative(1.0).is_err());
    }

    #[test]
    fn tightness_rejects_bad_epsilon() {
        assert!(build_tightness(0.0).is_err());
        assert!(build_tightness(-1.0).is_err());
    }
}
