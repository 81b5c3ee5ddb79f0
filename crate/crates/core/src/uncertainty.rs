//! Uncertainty sets over transition kernels and their per-row inner problems.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiError};
use crate::mdp::{check_distribution, dot, Kernel, Policy, DIST_TOL};

/// L1 diameter of the probability simplex.
pub const MAX_BUDGET: f64 = 2.0;

/// Membership tolerance for `contains`.
pub const CONTAINS_TOL: f64 = 1e-9;

/// Per-(state, action) L1 error budgets, clamped to `[0, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFunction {
    n_states: usize,
    n_actions: usize,
    budget: Vec<f64>,
}

impl ErrorFunction {
    pub fn new(n_states: usize, n_actions: usize, mut budget: Vec<f64>) -> Result<Self> {
        if budget.len() != n_states * n_actions {
            return Err(SpiError::Dimension(format!(
                "error function has {} entries, expected {}",
                budget.len(),
                n_states * n_actions
            )));
        }
        for (i, b) in budget.iter_mut().enumerate() {
            if b.is_nan() || *b < 0.0 {
                return Err(SpiError::InvalidArgument(format!(
                    "budget {b} at pair {i} is negative"
                )));
            }
            *b = b.min(MAX_BUDGET);
        }
        Ok(Self {
            n_states,
            n_actions,
            budget,
        })
    }

    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::constant(n_states, n_actions, 0.0)
    }

    /// Constant budget `c`, clamped to `[0, 2]`.
    pub fn constant(n_states: usize, n_actions: usize, c: f64) -> Self {
        Self {
            n_states,
            n_actions,
            budget: vec![c.clamp(0.0, MAX_BUDGET); n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, x: usize, a: usize) -> f64 {
        self.budget[x * self.n_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.budget
    }

    /// `‖e‖∞`.
    pub fn sup_norm(&self) -> f64 {
        self.budget.iter().copied().fold(0.0, f64::max)
    }
}

/// Zero the budget on every baseline action; other pairs keep theirs.
pub fn restrict_to_baseline(error: &ErrorFunction, baseline: &Policy) -> Result<ErrorFunction> {
    let actions = baseline_actions(baseline)?;
    if actions.len() != error.n_states || baseline.n_actions() != error.n_actions {
        return Err(SpiError::Dimension(
            "baseline and error function disagree".into(),
        ));
    }
    let mut budget = error.budget.clone();
    for (x, &a) in actions.iter().enumerate() {
        budget[x * error.n_actions + a] = 0.0;
    }
    Ok(ErrorFunction {
        budget,
        ..error.clone()
    })
}

pub(crate) fn baseline_actions(baseline: &Policy) -> Result<Vec<usize>> {
    baseline
        .actions()
        .ok_or_else(|| SpiError::InvalidArgument("baseline policy must be deterministic".into()))
}

/// Direction of the inner optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// State order for the transfer method: the preferred recipient first, the
/// first donor last. Ties go to the lower state index.
pub(crate) fn transfer_order(values: &[f64], sense: Sense) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    match sense {
        Sense::Min => order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j))),
        Sense::Max => order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j))),
    }
    order
}

/// Core transfer: move up to `budget / 2` mass onto the first allowed state of
/// `order`, taking it from states at the back of `order`. Writes the optimal
/// row into `out` and returns its objective.
pub(crate) fn transfer(
    nominal: &[f64],
    budget: f64,
    values: &[f64],
    order: &[usize],
    allowed: Option<&[usize]>,
    out: &mut [f64],
) -> f64 {
    out.copy_from_slice(nominal);
    let recipient = match allowed {
        None => order[0],
        Some(support) => *order
            .iter()
            .find(|s| support.contains(s))
            .expect("support is nonempty"),
    };
    let mut remaining = (budget / 2.0).min(1.0 - nominal[recipient]).max(0.0);
    out[recipient] += remaining;
    for &j in order.iter().rev() {
        if remaining <= 0.0 {
            break;
        }
        if j == recipient || out[j] <= 0.0 {
            continue;
        }
        let take = out[j].min(remaining);
        out[j] -= take;
        remaining -= take;
    }
    dot(out, values)
}

fn check_inner_args(nominal_row: &[f64], budget: f64, values: &[f64]) -> Result<()> {
    if nominal_row.is_empty() || nominal_row.len() != values.len() {
        return Err(SpiError::Dimension(format!(
            "row has {} entries, values have {}",
            nominal_row.len(),
            values.len()
        )));
    }
    if !(0.0..=MAX_BUDGET).contains(&budget) {
        return Err(SpiError::InvalidArgument(format!(
            "budget {budget} outside [0, 2]"
        )));
    }
    check_distribution(nominal_row, DIST_TOL, "nominal row")
}

/// `min p·v` over the simplex intersected with `‖p − p̂‖₁ ≤ budget`.
pub fn worst_case_response(
    nominal_row: &[f64],
    budget: f64,
    values: &[f64],
) -> Result<(Vec<f64>, f64)> {
    check_inner_args(nominal_row, budget, values)?;
    let order = transfer_order(values, Sense::Min);
    let mut out = vec![0.0; values.len()];
    let v = transfer(nominal_row, budget, values, &order, None, &mut out);
    Ok((out, v))
}

/// `max p·v` over the same set as [`worst_case_response`].
pub fn best_case_response(
    nominal_row: &[f64],
    budget: f64,
    values: &[f64],
) -> Result<(Vec<f64>, f64)> {
    check_inner_args(nominal_row, budget, values)?;
    let order = transfer_order(values, Sense::Max);
    let mut out = vec![0.0; values.len()];
    let v = transfer(nominal_row, budget, values, &order, None, &mut out);
    Ok((out, v))
}

/// Index of the extremal candidate; ties go to the lowest index.
pub(crate) fn scenario_pick(candidates: &[Vec<f64>], values: &[f64], sense: Sense) -> (usize, f64) {
    let mut best = (0, dot(&candidates[0], values));
    for (k, c) in candidates.iter().enumerate().skip(1) {
        let v = dot(c, values);
        let better = match sense {
            Sense::Min => v < best.1,
            Sense::Max => v > best.1,
        };
        if better {
            best = (k, v);
        }
    }
    best
}

/// Extremal candidate row for `values`.
pub fn scenario_response(
    candidates: &[Vec<f64>],
    values: &[f64],
    sense: Sense,
) -> Result<(Vec<f64>, f64)> {
    if candidates.is_empty() {
        return Err(SpiError::InvalidArgument("empty candidate list".into()));
    }
    if candidates.iter().any(|c| c.len() != values.len()) {
        return Err(SpiError::Dimension(
            "candidate length differs from values".into(),
        ));
    }
    let (k, v) = scenario_pick(candidates, values, sense);
    Ok((candidates[k].clone(), v))
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Nominal kernel plus per-pair L1 budgets.
///
/// An optional per-pair support restricts which next states may receive
/// mass; the nominal row must lie inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct L1UncertaintySet {
    nominal: Kernel,
    budget: ErrorFunction,
    support: Option<Vec<Vec<usize>>>,
}

impl L1UncertaintySet {
    pub fn new(nominal: Kernel, budget: ErrorFunction) -> Result<Self> {
        if nominal.n_states() != budget.n_states() || nominal.n_actions() != budget.n_actions() {
            return Err(SpiError::Dimension(
                "nominal kernel and budget disagree".into(),
            ));
        }
        Ok(Self {
            nominal,
            budget,
            support: None,
        })
    }

    /// Restrict each pair's reachable next states to `support[x * n_actions + a]`.
    pub fn with_support(
        nominal: Kernel,
        budget: ErrorFunction,
        support: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let mut set = Self::new(nominal, budget)?;
        let (n, m) = (set.nominal.n_states(), set.nominal.n_actions());
        if support.len() != n * m {
            return Err(SpiError::Dimension("support has wrong pair count".into()));
        }
        for (idx, s) in support.iter().enumerate() {
            if s.is_empty() || s.iter().any(|&y| y >= n) {
                return Err(SpiError::InvalidArgument(format!(
                    "support of pair {idx} is empty or out of range"
                )));
            }
            let row = set.nominal.row(idx / m, idx % m);
            if row
                .iter()
                .enumerate()
                .any(|(y, &p)| p > 0.0 && !s.contains(&y))
            {
                return Err(SpiError::InvalidArgument(format!(
                    "nominal row of pair {idx} leaves its support"
                )));
            }
        }
        set.support = Some(support);
        Ok(set)
    }

    pub fn nominal(&self) -> &Kernel {
        &self.nominal
    }

    pub fn budget(&self) -> &ErrorFunction {
        &self.budget
    }

    /// Allowed successors of `(x, a)` when the set restricts them.
    pub fn support(&self, x: usize, a: usize) -> Option<&[usize]> {
        self.support
            .as_ref()
            .map(|s| s[x * self.nominal.n_actions() + a].as_slice())
    }
}

/// Explicit finite candidate rows per (state, action). The first candidate of
/// each pair is the nominal row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    n_states: usize,
    n_actions: usize,
    candidates: Vec<Vec<Vec<f64>>>,
}

impl ScenarioSet {
    /// `candidates[x * n_actions + a]` lists the rows nature may pick.
    pub fn new(n_states: usize, n_actions: usize, candidates: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if candidates.len() != n_states * n_actions {
            return Err(SpiError::Dimension(format!(
                "scenario set has {} pairs, expected {}",
                candidates.len(),
                n_states * n_actions
            )));
        }
        for (idx, list) in candidates.iter().enumerate() {
            if list.is_empty() {
                return Err(SpiError::InvalidArgument(format!(
                    "pair {idx} has no candidates"
                )));
            }
            for c in list {
                if c.len() != n_states {
                    return Err(SpiError::Dimension(format!(
                        "candidate of pair {idx} has length {}",
                        c.len()
                    )));
                }
                check_distribution(c, DIST_TOL, &format!("candidate of pair {idx}"))?;
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            candidates,
        })
    }

    /// One candidate per pair, taken from the given kernels in order;
    /// duplicates are dropped.
    pub fn from_kernels(kernels: &[Kernel]) -> Result<Self> {
        let first = kernels
            .first()
            .ok_or_else(|| SpiError::InvalidArgument("no scenario kernels".into()))?;
        let (n, m) = (first.n_states(), first.n_actions());
        let mut candidates = Vec::with_capacity(n * m);
        for x in 0..n {
            for a in 0..m {
                let mut list: Vec<Vec<f64>> = Vec::new();
                for k in kernels {
                    if !k.same_shape(first) {
                        return Err(SpiError::Dimension(
                            "scenario kernels differ in shape".into(),
                        ));
                    }
                    let row = k.row(x, a);
                    if !list.iter().any(|c| c.as_slice() == row) {
                        list.push(row.to_vec());
                    }
                }
                candidates.push(list);
            }
        }
        Self::new(n, m, candidates)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn candidates(&self, x: usize, a: usize) -> &[Vec<f64>] {
        &self.candidates[x * self.n_actions + a]
    }

    /// Kernel made of each pair's first candidate.
    pub fn nominal_kernel(&self) -> Kernel {
        self.kernel_from_selection(&vec![0; self.n_states * self.n_actions])
            .expect("first candidates are valid")
    }

    /// Kernel choosing candidate `selection[x * n_actions + a]` for each pair.
    pub fn kernel_from_selection(&self, selection: &[usize]) -> Result<Kernel> {
        if selection.len() != self.candidates.len() {
            return Err(SpiError::Dimension("selection has wrong pair count".into()));
        }
        let mut probs = Vec::with_capacity(self.candidates.len() * self.n_states);
        for (list, &k) in self.candidates.iter().zip(selection) {
            let row = list
                .get(k)
                .ok_or_else(|| SpiError::InvalidArgument(format!("candidate {k} out of range")))?;
            probs.extend_from_slice(row);
        }
        Kernel::new(self.n_states, self.n_actions, probs)
    }

    /// Number of candidates per pair.
    pub fn counts(&self) -> Vec<usize> {
        self.candidates.iter().map(Vec::len).collect()
    }
}

/// Either an L1 ball around a nominal kernel or explicit scenarios.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    L1(L1UncertaintySet),
    Scenarios(ScenarioSet),
}

impl From<L1UncertaintySet> for UncertaintySet {
    fn from(s: L1UncertaintySet) -> Self {
        Self::L1(s)
    }
}

impl From<ScenarioSet> for UncertaintySet {
    fn from(s: ScenarioSet) -> Self {
        Self::Scenarios(s)
    }
}

impl UncertaintySet {
    pub fn l1(nominal: Kernel, budget: ErrorFunction) -> Result<Self> {
        Ok(Self::L1(L1UncertaintySet::new(nominal, budget)?))
    }

    pub fn n_states(&self) -> usize {
        match self {
            Self::L1(s) => s.nominal.n_states(),
            Self::Scenarios(s) => s.n_states,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Self::L1(s) => s.nominal.n_actions(),
            Self::Scenarios(s) => s.n_actions,
        }
    }

    /// The nominal kernel (first candidate for scenario sets).
    pub fn nominal_kernel(&self) -> Kernel {
        match self {
            Self::L1(s) => s.nominal.clone(),
            Self::Scenarios(s) => s.nominal_kernel(),
        }
    }

    /// Whether every row of `kernel` lies in the set.
    pub fn contains(&self, kernel: &Kernel) -> Result<bool> {
        if kernel.n_states() != self.n_states() || kernel.n_actions() != self.n_actions() {
            return Err(SpiError::Dimension("kernel shape differs from set".into()));
        }
        let (n, m) = (self.n_states(), self.n_actions());
        for x in 0..n {
            for a in 0..m {
                let row = kernel.row(x, a);
                let inside = match self {
                    Self::L1(s) => {
                        let in_support = s.support(x, a).is_none_or(|sup| {
                            row.iter()
                                .enumerate()
                                .all(|(y, &p)| p <= CONTAINS_TOL || sup.contains(&y))
                        });
                        in_support
                            && l1_distance(row, s.nominal.row(x, a))
                                <= s.budget.get(x, a) + CONTAINS_TOL
                    }
                    Self::Scenarios(s) => s
                        .candidates(x, a)
                        .iter()
                        .any(|c| l1_distance(c, row) <= CONTAINS_TOL),
                };
                if !inside {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Per-pair L1 radius of the set around its nominal kernel.
    pub fn l1_radius(&self) -> ErrorFunction {
        match self {
            Self::L1(s) => s.budget.clone(),
            Self::Scenarios(s) => {
                let budget = s
                    .candidates
                    .iter()
                    .map(|list| {
                        list.iter()
                            .map(|c| l1_distance(c, &list[0]))
                            .fold(0.0, f64::max)
                            .min(MAX_BUDGET)
                    })
                    .collect();
                ErrorFunction {
                    n_states: s.n_states,
                    n_actions: s.n_actions,
                    budget,
                }
            }
        }
    }

    /// Whether the set is a singleton on pair `(x, a)`.
    pub fn is_exact_at(&self, x: usize, a: usize) -> bool {
        match self {
            Self::L1(s) => s.budget.get(x, a) == 0.0,
            Self::Scenarios(s) => s.candidates(x, a).len() == 1,
        }
    }

    /// Removes all uncertainty on the baseline's actions: L1 budgets are
    /// zeroed there and scenario lists keep only their nominal row.
    pub fn restrict_to_baseline(&self, baseline: &Policy) -> Result<Self> {
        let actions = baseline_actions(baseline)?;
        if actions.len() != self.n_states() || baseline.n_actions() != self.n_actions() {
            return Err(SpiError::Dimension("baseline and set disagree".into()));
        }
        Ok(match self {
            Self::L1(s) => Self::L1(L1UncertaintySet {
                budget: restrict_to_baseline(&s.budget, baseline)?,
                ..s.clone()
            }),
            Self::Scenarios(s) => {
                let mut candidates = s.candidates.clone();
                for (x, &a) in actions.iter().enumerate() {
                    candidates[x * s.n_actions + a].truncate(1);
                }
                Self::Scenarios(ScenarioSet {
                    candidates,
                    ..s.clone()
                })
            }
        })
    }
}

/// Per-sweep cache of transfer orders for both senses.
pub(crate) struct SweepOrders {
    order: Vec<usize>,
}

impl SweepOrders {
    pub(crate) fn new(values: &[f64], sense: Sense) -> Self {
        Self {
            order: transfer_order(values, sense),
        }
    }
}

/// Extremal row of pair `(x, a)` against `values`, written into `out`;
/// returns `p·v`.
pub(crate) fn pair_response(
    set: &UncertaintySet,
    x: usize,
    a: usize,
    values: &[f64],
    sense: Sense,
    orders: &SweepOrders,
    out: &mut [f64],
) -> f64 {
    match set {
        UncertaintySet::L1(s) => {
            let nominal = s.nominal.row(x, a);
            let budget = s.budget.get(x, a);
            if budget == 0.0 {
                out.copy_from_slice(nominal);
                return dot(nominal, values);
            }
            transfer(nominal, budget, values, &orders.order, s.support(x, a), out)
        }
        UncertaintySet::Scenarios(s) => {
            let (k, v) = scenario_pick(s.candidates(x, a), values, sense);
            out.copy_from_slice(&s.candidates(x, a)[k]);
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THIRD: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn worst_case_reference_triple() {
        let (p, v) = worst_case_response(&THIRD, 1.0, &[1.0, 2.0, 3.0]).unwrap();
        assert!(close(&p, &[5.0 / 6.0, 1.0 / 6.0, 0.0]));
        assert!((v - 7.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn best_case_reference_triple() {
        let (p, v) = best_case_response(&THIRD, 1.0, &[1.0, 2.0, 3.0]).unwrap();
        assert!(close(&p, &[0.0, 1.0 / 6.0, 5.0 / 6.0]));
        assert!((v - 17.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_full_budget() {
        let vals = [1.0, 2.0, 3.0];
        let row = [0.2, 0.5, 0.3];
        let (p, v) = worst_case_response(&row, 0.0, &vals).unwrap();
        assert_eq!(p, row.to_vec());
        assert!((v - dot(&row, &vals)).abs() < 1e-15);
        let (p, v) = worst_case_response(&row, 2.0, &vals).unwrap();
        assert!(close(&p, &[1.0, 0.0, 0.0]));
        assert!((v - 1.0).abs() < 1e-12);
        let (_, v) = best_case_response(&row, 2.0, &vals).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        let (_, v) = best_case_response(&row, 0.0, &vals).unwrap();
        assert!((v - dot(&row, &vals)).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(worst_case_response(&THIRD, -0.1, &[1.0, 2.0, 3.0]).is_err());
        assert!(worst_case_response(&THIRD, 2.5, &[1.0, 2.0, 3.0]).is_err());
        assert!(worst_case_response(&[0.5, 0.6], 0.5, &[1.0, 2.0]).is_err());
        assert!(worst_case_response(&THIRD, 0.5, &[1.0, 2.0]).is_err());
        assert!(ErrorFunction::new(1, 1, vec![-0.5]).is_err());
    }

    #[test]
    fn budgets_clamp_to_diameter() {
        let e = ErrorFunction::new(1, 2, vec![3.0, 0.5]).unwrap();
        assert_eq!(e.as_slice(), &[2.0, 0.5]);
    }

    #[test]
    fn scenario_cases() {
        let c = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (p, v) = scenario_response(&c, &[3.0, 1.0], Sense::Min).unwrap();
        assert_eq!((p, v), (vec![0.0, 1.0], 1.0));
        let single = vec![vec![0.5, 0.5]];
        let (p, _) = scenario_response(&single, &[3.0, 1.0], Sense::Max).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        assert!(scenario_response(&[], &[1.0], Sense::Min).is_err());
        // ties keep the first candidate
        let tied = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let (k, _) = scenario_pick(&tied, &[1.0, 2.0], Sense::Min);
        assert_eq!(k, 0);
    }

    #[test]
    fn restrict_cases() {
        let base = Policy::deterministic(&[0, 0], 2).unwrap();
        let e = ErrorFunction::constant(2, 2, 0.5);
        let r = restrict_to_baseline(&e, &base).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 0.5, 0.0, 0.5]);
        let z = restrict_to_baseline(&ErrorFunction::zeros(2, 2), &base).unwrap();
        assert!(z.as_slice().iter().all(|&b| b == 0.0));
        let single = Policy::deterministic(&[0, 0], 1).unwrap();
        let r = restrict_to_baseline(&ErrorFunction::constant(2, 1, 0.7), &single).unwrap();
        assert!(r.as_slice().iter().all(|&b| b == 0.0));
        let random = Policy::uniform(2, 2);
        assert!(restrict_to_baseline(&e, &random).is_err());
    }

    #[test]
    fn contains_cases() {
        let k = Kernel::new(1, 1, vec![1.0]).unwrap();
        let k2 = Kernel::new(2, 1, vec![0.5, 0.5, 1.0, 0.0]).unwrap();
        let set = UncertaintySet::l1(k2.clone(), ErrorFunction::constant(2, 1, 0.2)).unwrap();
        assert!(set.contains(&k2).unwrap());
        let far = Kernel::new(2, 1, vec![0.65, 0.35, 1.0, 0.0]).unwrap();
        assert!(!set.contains(&far).unwrap());
        let near = Kernel::new(2, 1, vec![0.6, 0.4, 1.0, 0.0]).unwrap();
        assert!(set.contains(&near).unwrap());
        assert!(set.contains(&k).is_err());
    }

    #[test]
    fn support_restricts_recipient() {
        let nominal = Kernel::new(3, 1, vec![0.0, 0.5, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let support = vec![vec![1, 2], vec![0], vec![2]];
        let set = UncertaintySet::L1(
            L1UncertaintySet::with_support(nominal, ErrorFunction::constant(3, 1, 1.0), support)
                .unwrap(),
        );
        let vals = [-10.0, 1.0, 2.0];
        let orders = SweepOrders::new(&vals, Sense::Min);
        let mut out = [0.0; 3];
        let v = pair_response(&set, 0, 0, &vals, Sense::Min, &orders, &mut out);
        assert!(close(&out, &[0.0, 1.0, 0.0]));
        assert!((v - 1.0).abs() < 1e-12);
        let leaked = Kernel::new(3, 1, vec![0.1, 0.5, 0.4, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(!set.contains(&leaked).unwrap());
    }
}
