//! Finite discounted MDPs with a distinguished sink, the policies and chains
//! they induce, and the solvers built on them.

mod chain;
mod solve;

use std::collections::BTreeSet;
use std::fmt;

use crate::{Error, Result, PROB_TOL};

pub use chain::{
    induce_chain, kl_divergence, occupancy, reach_probabilities, reach_probability, MarkovChain, OccupancyMeasure,
};
pub use solve::{optimal_value, policy_evaluation, q_values, soft_value_iteration};
pub(crate) use solve::{soft_solve, SoftSolution};

/// Sparse successor distribution: `(next_state, probability)` pairs.
pub type Distribution = Vec<(usize, f64)>;

/// A finite attack-planning MDP.
///
/// Rewards and transitions are stored row-major by `(state, action)`; use
/// [`Mdp::sa`] to get the flat index. `targets` is the attacker's true target
/// set `F`. `decoy_targets` is only non-empty for perceptual models, where it
/// holds the decoys that were made terminating.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    states: Vec<String>,
    actions: Vec<String>,
    transitions: Vec<Distribution>,
    init: Vec<f64>,
    discount: f64,
    targets: Vec<usize>,
    decoy_targets: Vec<usize>,
    reward: Vec<f64>,
    sink: usize,
}

impl Mdp {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Flat index of `(s, a)` into row-major state-action arrays.
    #[inline]
    pub fn sa(&self, s: usize, a: usize) -> usize {
        s * self.actions.len() + a
    }

    pub fn row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[self.sa(s, a)]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.row(s, a).iter().filter(|(t, _)| *t == next).map(|(_, p)| p).sum()
    }

    pub fn init(&self) -> &[f64] {
        &self.init
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn decoy_targets(&self) -> &[usize] {
        &self.decoy_targets
    }

    pub fn is_target(&self, s: usize) -> bool {
        self.targets.binary_search(&s).is_ok()
    }

    /// True for states in `F ∪ D` (every terminating target).
    pub fn is_terminal_target(&self, s: usize) -> bool {
        self.is_target(s) || self.decoy_targets.binary_search(&s).is_ok()
    }

    /// Attacker's target reward `R₂`, row-major.
    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    /// Same model with a different discount.
    pub fn with_discount(&self, discount: f64) -> Result<Mdp> {
        check_discount(discount)?;
        let mut out = self.clone();
        out.discount = discount;
        Ok(out)
    }

    /// Copy with every state in `decoys` routed to the sink under all actions
    /// and recorded as a terminating decoy target.
    pub(crate) fn with_terminating_decoys(&self, decoys: &[usize]) -> Mdp {
        let mut out = self.clone();
        let m = self.n_actions();
        for &d in decoys {
            for a in 0..m {
                out.transitions[d * m + a] = vec![(self.sink, 1.0)];
            }
        }
        let mut set: BTreeSet<usize> = out.decoy_targets.iter().copied().collect();
        set.extend(decoys.iter().copied());
        out.decoy_targets = set.into_iter().collect();
        out
    }

    /// Checks every structural invariant and lists the violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.n_states();
        let m = self.n_actions();
        for s in 0..n {
            for a in 0..m {
                let row = self.row(s, a);
                if row.iter().any(|&(_, p)| p < -PROB_TOL || !p.is_finite()) {
                    violations.push(Violation::NegativeProbability { state: s, action: a });
                }
                let sum: f64 = row.iter().map(|(_, p)| p).sum();
                if (sum - 1.0).abs() > PROB_TOL {
                    violations.push(Violation::RowSum {
                        state: s,
                        action: a,
                        sum,
                    });
                }
                if s == self.sink && (self.prob(s, a, s) - 1.0).abs() > PROB_TOL {
                    violations.push(Violation::SinkNotAbsorbing { action: a });
                }
                if self.is_terminal_target(s) && (self.prob(s, a, self.sink) - 1.0).abs() > PROB_TOL {
                    violations.push(Violation::TargetNotTerminating { state: s, action: a });
                }
                let r = self.reward[self.sa(s, a)];
                if !r.is_finite() || (self.is_target(s) && r < 0.0) || (!self.is_target(s) && r != 0.0) {
                    violations.push(Violation::RewardSupport {
                        state: s,
                        action: a,
                        reward: r,
                    });
                }
            }
        }
        let init_sum: f64 = self.init.iter().sum();
        if (init_sum - 1.0).abs() > PROB_TOL || self.init.iter().any(|&p| p < -PROB_TOL) {
            violations.push(Violation::InitDistribution { sum: init_sum });
        }
        if self.is_terminal_target(self.sink) {
            violations.push(Violation::SinkIsTarget);
        }
        ValidationReport { violations }
    }
}

fn check_discount(discount: f64) -> Result<()> {
    if discount > 0.0 && discount < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("discount {discount} outside (0, 1)")))
    }
}

/// Incremental constructor. Only shape is checked here; semantic invariants
/// are reported by [`Mdp::validate`].
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    states: Vec<String>,
    actions: Vec<String>,
    transitions: Vec<Distribution>,
    init: Vec<f64>,
    discount: f64,
    targets: BTreeSet<usize>,
    reward: Vec<f64>,
    sink: Option<usize>,
}

impl MdpBuilder {
    pub fn new<S: Into<String>, A: Into<String>>(
        states: impl IntoIterator<Item = S>,
        actions: impl IntoIterator<Item = A>,
    ) -> Self {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        let actions: Vec<String> = actions.into_iter().map(Into::into).collect();
        let n = states.len();
        let m = actions.len();
        MdpBuilder {
            states,
            actions,
            transitions: vec![Vec::new(); n * m],
            init: vec![0.0; n],
            discount: 0.95,
            targets: BTreeSet::new(),
            reward: vec![0.0; n * m],
            sink: None,
        }
    }

    /// Builder over states `0..n` and actions `0..m`, named by index.
    pub fn indexed(n: usize, m: usize) -> Self {
        Self::new((0..n).map(|i| i.to_string()), (0..m).map(|a| a.to_string()))
    }

    pub fn transition(&mut self, s: usize, a: usize, next: usize, p: f64) -> &mut Self {
        let m = self.actions.len();
        self.transitions[s * m + a].push((next, p));
        self
    }

    pub fn row(&mut self, s: usize, a: usize, row: Distribution) -> &mut Self {
        let m = self.actions.len();
        self.transitions[s * m + a] = row;
        self
    }

    pub fn init(&mut self, s: usize, p: f64) -> &mut Self {
        self.init[s] += p;
        self
    }

    pub fn discount(&mut self, discount: f64) -> &mut Self {
        self.discount = discount;
        self
    }

    pub fn target(&mut self, s: usize) -> &mut Self {
        self.targets.insert(s);
        self
    }

    pub fn reward(&mut self, s: usize, a: usize, r: f64) -> &mut Self {
        let m = self.actions.len();
        self.reward[s * m + a] = r;
        self
    }

    pub fn sink(&mut self, s: usize) -> &mut Self {
        self.sink = Some(s);
        self
    }

    pub fn build(&self) -> Result<Mdp> {
        let n = self.states.len();
        let m = self.actions.len();
        if n == 0 || m == 0 {
            return Err(Error::invalid("an MDP needs at least one state and one action"));
        }
        check_discount(self.discount)?;
        let sink = self.sink.ok_or_else(|| Error::invalid("no sink state declared"))?;
        if sink >= n {
            return Err(Error::invalid(format!("sink index {sink} out of range")));
        }
        if let Some(&t) = self.targets.iter().find(|&&t| t >= n) {
            return Err(Error::invalid(format!("target index {t} out of range")));
        }
        let mut transitions = Vec::with_capacity(n * m);
        for (idx, row) in self.transitions.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &(t, p) in row {
                if t >= n {
                    return Err(Error::invalid(format!(
                        "transition from ({}, {}) to unknown state index {t}",
                        self.states[idx / m],
                        self.actions[idx % m]
                    )));
                }
                if !seen.insert(t) {
                    return Err(Error::invalid(format!(
                        "duplicate transition ({}, {}) -> {}",
                        self.states[idx / m],
                        self.actions[idx % m],
                        self.states[t]
                    )));
                }
                if !p.is_finite() {
                    return Err(Error::invalid("non-finite transition probability"));
                }
            }
            let mut row: Distribution = row.iter().copied().filter(|&(_, p)| p != 0.0).collect();
            row.sort_by_key(|&(t, _)| t);
            transitions.push(row);
        }
        if self.reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("non-finite reward"));
        }
        Ok(Mdp {
            states: self.states.clone(),
            actions: self.actions.clone(),
            transitions,
            init: self.init.clone(),
            discount: self.discount,
            targets: self.targets.iter().copied().collect(),
            decoy_targets: Vec::new(),
            reward: self.reward.clone(),
            sink,
        })
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum { state: usize, action: usize, sum: f64 },
    NegativeProbability { state: usize, action: usize },
    SinkNotAbsorbing { action: usize },
    TargetNotTerminating { state: usize, action: usize },
    RewardSupport { state: usize, action: usize, reward: f64 },
    InitDistribution { sum: f64 },
    SinkIsTarget,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { state, action, sum } => {
                write!(f, "transition row ({state}, {action}) sums to {sum}")
            }
            Violation::NegativeProbability { state, action } => {
                write!(
                    f,
                    "transition row ({state}, {action}) has a negative or non-finite entry"
                )
            }
            Violation::SinkNotAbsorbing { action } => write!(f, "sink not absorbing under action {action}"),
            Violation::TargetNotTerminating { state, action } => {
                write!(f, "target not terminating: state {state} under action {action}")
            }
            Violation::RewardSupport { state, action, reward } => {
                write!(f, "reward {reward} at ({state}, {action}) outside the target support")
            }
            Violation::InitDistribution { sum } => write!(f, "initial distribution sums to {sum}"),
            Violation::SinkIsTarget => write!(f, "sink is also a target"),
        }
    }
}

/// Result of [`Mdp::validate`]; empty iff the model is well formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::invalid(format!(
                "{} invariant violation(s), first: {v}",
                self.violations.len()
            ))),
        }
    }
}

/// Row-stochastic map from states to action distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    n_actions: usize,
    probs: Vec<f64>,
}

impl StochasticPolicy {
    /// Row-major probabilities, `n_states × n_actions`.
    pub fn new(n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_actions == 0 || !probs.len().is_multiple_of(n_actions) {
            return Err(Error::invalid("policy table shape does not match action count"));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::invalid(format!("policy row {s} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::invalid(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(StochasticPolicy { n_actions, probs })
    }

    pub(crate) fn from_raw(n_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len() % n_actions, 0);
        StochasticPolicy { n_actions, probs }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        StochasticPolicy {
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * n_actions + a] = 1.0;
        }
        StochasticPolicy { n_actions, probs }
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Action with the highest probability in each state, lowest index on ties.
    pub fn argmax_actions(&self) -> Vec<usize> {
        (0..self.n_states())
            .map(|s| {
                let row = self.row(s);
                let mut best = 0;
                for a in 1..row.len() {
                    if row[a] > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }

    pub(crate) fn check_shape(&self, mdp: &Mdp) -> Result<()> {
        if self.n_actions != mdp.n_actions() || self.n_states() != mdp.n_states() {
            return Err(Error::invalid(format!(
                "policy covers {} states × {} actions, model has {} × {}",
                self.n_states(),
                self.n_actions,
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}

/// Per-state values (`V₂` for the attacker, `V₁` for the defender).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(pub Vec<f64>);

impl ValueVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `Σ_s ν(s)·V(s)`.
    pub fn at_init(&self, init: &[f64]) -> f64 {
        self.0.iter().zip(init).map(|(v, p)| v * p).sum()
    }

    pub fn sup_distance(&self, other: &ValueVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for ValueVector {
    type Output = f64;
    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}
