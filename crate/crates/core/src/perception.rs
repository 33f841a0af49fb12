//! Defense strategies and the attacker's perceptual planning problem.
//!
//! A strategy `(x, y)` changes what the attacker *believes*: decoy states in
//! `D` look like targets paying `y(s)`, and action pairs in `W` carry an
//! extra cost `x(s, a) ≤ 0`. Decoys terminate the attack on entry. The
//! defender is paid once when the attacker enters a decoy, so her value is
//! the (undiscounted) probability of ever reaching `D`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::mdp::{induce_chain, policy_evaluation, reach_probabilities, Mdp, StochasticPolicy};
use crate::{Error, Result};

/// Floor that realizes the strict `y(s) > 0` on decoys.
pub const Y_MIN: f64 = 1e-6;

/// Where the defender may act: decoy states `D`, modifiable pairs `W`, and
/// the decoy budget `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefenseDomain {
    decoys: Vec<usize>,
    modifiable: Vec<(usize, usize)>,
    budget: f64,
}

impl DefenseDomain {
    pub fn new(base: &Mdp, decoys: &[usize], modifiable: &[(usize, usize)], budget: f64) -> Result<Self> {
        let n = base.n_states();
        let m = base.n_actions();
        let d: BTreeSet<usize> = decoys.iter().copied().collect();
        if d.len() != decoys.len() {
            return Err(Error::invalid("duplicate decoy state"));
        }
        for &s in &d {
            if s >= n {
                return Err(Error::invalid(format!("decoy index {s} out of range")));
            }
            if s == base.sink() {
                return Err(Error::invalid("the sink cannot be a decoy"));
            }
            if base.is_target(s) {
                return Err(Error::invalid(format!(
                    "decoy {} is also a real target",
                    base.state_name(s)
                )));
            }
        }
        let w: BTreeSet<(usize, usize)> = modifiable.iter().copied().collect();
        if w.len() != modifiable.len() {
            return Err(Error::invalid("duplicate modifiable pair"));
        }
        for &(s, a) in &w {
            if s >= n || a >= m {
                return Err(Error::invalid(format!("modifiable pair ({s}, {a}) out of range")));
            }
            if base.is_terminal_target(s) || d.contains(&s) || s == base.sink() {
                return Err(Error::invalid(format!(
                    "modifiable pair ({}, {}) sits on a target, decoy or the sink",
                    base.state_name(s),
                    base.action_name(a)
                )));
            }
        }
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::invalid(format!(
                "budget {budget} must be finite and nonnegative"
            )));
        }
        Ok(DefenseDomain {
            decoys: d.into_iter().collect(),
            modifiable: w.into_iter().collect(),
            budget,
        })
    }

    /// Sorted decoy states `D`.
    pub fn decoys(&self) -> &[usize] {
        &self.decoys
    }

    /// Sorted modifiable pairs `W`.
    pub fn modifiable(&self) -> &[(usize, usize)] {
        &self.modifiable
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn is_decoy(&self, s: usize) -> bool {
        self.decoys.binary_search(&s).is_ok()
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::invalid(format!(
                "budget {budget} must be finite and nonnegative"
            )));
        }
        Ok(DefenseDomain { budget, ..self.clone() })
    }

    /// Same decoys and budget with `W` emptied.
    pub fn without_modifications(&self) -> Self {
        DefenseDomain {
            modifiable: Vec::new(),
            ..self.clone()
        }
    }

    /// True when some `y ≥ Y_MIN` satisfies `1ᵀy < h` strictly.
    pub fn has_interior(&self) -> bool {
        self.budget > self.decoys.len() as f64 * Y_MIN
    }
}

/// A proactive defense strategy `(x, y)` over a [`DefenseDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct DefenseStrategy {
    domain: DefenseDomain,
    /// One entry per pair of `W`, in domain order.
    x: Vec<f64>,
    /// One entry per decoy of `D`, in domain order.
    y: Vec<f64>,
}

impl DefenseStrategy {
    pub fn new(domain: DefenseDomain, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != domain.modifiable.len() || y.len() != domain.decoys.len() {
            return Err(Error::invalid("strategy vectors do not match the domain"));
        }
        if let Some(v) = x.iter().find(|v| !(**v <= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "action modification {v} must be finite and nonpositive"
            )));
        }
        if let Some(v) = y.iter().find(|v| !(**v >= Y_MIN && v.is_finite())) {
            return Err(Error::invalid(format!("decoy reward {v} below the floor {Y_MIN}")));
        }
        let used: f64 = y.iter().sum();
        if used > domain.budget {
            return Err(Error::invalid(format!(
                "decoy rewards use {used}, budget is {}",
                domain.budget
            )));
        }
        Ok(DefenseStrategy { domain, x, y })
    }

    pub fn domain(&self) -> &DefenseDomain {
        &self.domain
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn budget_used(&self) -> f64 {
        self.y.iter().sum()
    }

    /// `y(s)`, zero off `D`.
    pub fn decoy_reward(&self, s: usize) -> f64 {
        match self.domain.decoys.binary_search(&s) {
            Ok(i) => self.y[i],
            Err(_) => 0.0,
        }
    }

    /// `x(s, a)`, zero off `W`.
    pub fn modification(&self, s: usize, a: usize) -> f64 {
        match self.domain.modifiable.binary_search(&(s, a)) {
            Ok(i) => self.x[i],
            Err(_) => 0.0,
        }
    }
}

/// Reward the attacker perceives at `(s, a)` under `strategy`.
pub fn perceived_reward(base: &Mdp, strategy: &DefenseStrategy, s: usize, a: usize) -> f64 {
    let y = strategy.decoy_reward(s);
    if y > 0.0 {
        return y;
    }
    let x = strategy.modification(s, a);
    if x < 0.0 {
        return x;
    }
    base.reward()[base.sa(s, a)]
}

/// Row-major perceived reward over all `(s, a)`.
pub fn perceived_rewards(base: &Mdp, strategy: &DefenseStrategy) -> Vec<f64> {
    let m = base.n_actions();
    (0..base.n_states() * m)
        .map(|i| perceived_reward(base, strategy, i / m, i % m))
        .collect()
}

/// The attacker's planning problem after the defender's manipulation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptualMdp {
    /// Base dynamics with every decoy routed to the sink; its target set is
    /// `F` and its decoy targets are `D`.
    pub mdp: Mdp,
    /// Perceived reward, row-major.
    pub reward: Vec<f64>,
    /// The strategy that produced it; `None` for the no-allocation model in
    /// which decoys are plain zero-reward sink states.
    pub strategy: Option<DefenseStrategy>,
}

impl PerceptualMdp {
    pub fn decoys(&self) -> &[usize] {
        self.mdp.decoy_targets()
    }

    /// Model with no resources allocated: decoys still end the attack but pay
    /// nothing, and no action costs are modified.
    pub fn without_allocation(base: &Mdp, domain: &DefenseDomain) -> PerceptualMdp {
        PerceptualMdp {
            mdp: base.with_terminating_decoys(domain.decoys()),
            reward: base.reward().to_vec(),
            strategy: None,
        }
    }
}

/// Builds `M(x, y)`: decoys terminate, rewards become the perceived ones.
pub fn build_perceptual(base: &Mdp, strategy: &DefenseStrategy) -> Result<PerceptualMdp> {
    base.validate().into_result()?;
    if let Some(&d) = strategy.domain.decoys.iter().find(|&&d| base.is_target(d)) {
        return Err(Error::invalid(format!("decoy {} is a real target", base.state_name(d))));
    }
    let mdp = base.with_terminating_decoys(strategy.domain.decoys());
    let reward = perceived_rewards(base, strategy);
    Ok(PerceptualMdp {
        mdp,
        reward,
        strategy: Some(strategy.clone()),
    })
}

/// `R₁(s)`: one on decoys, zero elsewhere.
pub fn defender_reward(decoys: &[usize], s: usize) -> f64 {
    if decoys.contains(&s) {
        1.0
    } else {
        0.0
    }
}

fn absorbing_chain(dynamics: &Mdp, policy: &StochasticPolicy) -> Result<crate::mdp::MarkovChain> {
    let chain = induce_chain(dynamics, policy)?;
    let stop: Vec<usize> = dynamics
        .targets()
        .iter()
        .chain(dynamics.decoy_targets())
        .copied()
        .collect();
    Ok(chain.with_absorbing(&stop))
}

/// Per-state probability of reaching `decoys` under `policy`, in the base
/// dynamics with decoys terminating and `F ∪ D` absorbing.
pub fn defender_values(base: &Mdp, decoys: &[usize], policy: &StochasticPolicy) -> Result<Vec<f64>> {
    let dynamics = base.with_terminating_decoys(decoys);
    let chain = absorbing_chain(&dynamics, policy)?;
    reach_probabilities(&chain, decoys)
}

fn at_init(base: &Mdp, values: &[f64]) -> f64 {
    base.init().iter().zip(values).map(|(p, v)| p * v).sum()
}

/// `V₁`: probability that the attacker following `policy` enters a decoy.
///
/// Depends on `D` only, never on the magnitudes of `y` or on `x`.
pub fn defender_value(base: &Mdp, decoys: &[usize], policy: &StochasticPolicy) -> Result<f64> {
    Ok(at_init(base, &defender_values(base, decoys, policy)?).clamp(0.0, 1.0))
}

/// Discounted reading of `V₁`: `E[γ^T]` where `T` is the decoy entry time.
pub fn defender_value_discounted(base: &Mdp, decoys: &[usize], policy: &StochasticPolicy) -> Result<f64> {
    let dynamics = base.with_terminating_decoys(decoys);
    let m = base.n_actions();
    let reward: Vec<f64> = (0..base.n_states() * m)
        .map(|i| defender_reward(decoys, i / m))
        .collect();
    let v = policy_evaluation(&dynamics, &reward, policy, base.discount())?;
    Ok(v.at_init(base.init()))
}

/// Probability that the attacker following `policy` reaches a real target.
pub fn attacker_reach(base: &Mdp, decoys: &[usize], policy: &StochasticPolicy) -> Result<f64> {
    let dynamics = base.with_terminating_decoys(decoys);
    let chain = absorbing_chain(&dynamics, policy)?;
    let h = reach_probabilities(&chain, dynamics.targets())?;
    Ok(at_init(base, &h).clamp(0.0, 1.0))
}

/// `V₂`: the attacker's discounted perceived value at `ν`.
pub fn attacker_value(base: &Mdp, strategy: &DefenseStrategy, policy: &StochasticPolicy) -> Result<f64> {
    let dynamics = base.with_terminating_decoys(strategy.domain.decoys());
    let reward = perceived_rewards(base, strategy);
    let v = policy_evaluation(&dynamics, &reward, policy, base.discount())?;
    Ok(v.at_init(base.init()))
}

/// Renders a strategy in the line format `BUDGET h`, `Y state value`,
/// `X state action value`. Values use the shortest decimal that parses back
/// to the same `f64`.
pub fn write_strategy(base: &Mdp, strategy: &DefenseStrategy) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "BUDGET {}", strategy.domain.budget);
    for (&s, y) in strategy.domain.decoys.iter().zip(&strategy.y) {
        let _ = writeln!(out, "Y {} {}", base.state_name(s), y);
    }
    for (&(s, a), x) in strategy.domain.modifiable.iter().zip(&strategy.x) {
        let _ = writeln!(out, "X {} {} {}", base.state_name(s), base.action_name(a), x);
    }
    out
}

/// Raw contents of a strategy file, before it is checked against an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyFile {
    pub budget: f64,
    pub y: Vec<(String, f64)>,
    pub x: Vec<(String, String, f64)>,
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("`{tok}` is not finite")));
    }
    Ok(v)
}

impl StrategyFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut budget = None;
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            match (toks[0], toks.len()) {
                ("BUDGET", 2) => {
                    if budget.is_some() {
                        return Err(Error::parse(line, "duplicate BUDGET"));
                    }
                    budget = Some(parse_value(toks[1], line)?);
                }
                ("Y", 3) => y.push((toks[1].to_string(), parse_value(toks[2], line)?)),
                ("X", 4) => x.push((toks[1].to_string(), toks[2].to_string(), parse_value(toks[3], line)?)),
                ("BUDGET" | "Y" | "X", _) => {
                    return Err(Error::parse(line, format!("wrong field count for {}", toks[0])))
                }
                (kw, _) => return Err(Error::parse(line, format!("unknown keyword `{kw}`"))),
            }
        }
        let budget = budget.ok_or_else(|| Error::parse(0, "missing BUDGET line"))?;
        Ok(StrategyFile { budget, y, x })
    }

    /// Checks the file against an instance's `D` and `W`. The file's budget
    /// replaces the instance budget. Returns `None` when nothing is allocated
    /// and no action is modified (the no-decoy configuration).
    pub fn resolve(&self, base: &Mdp, domain: &DefenseDomain) -> Result<Option<DefenseStrategy>> {
        let domain = domain.with_budget(self.budget)?;
        let mut y = vec![None; domain.decoys.len()];
        for (name, v) in &self.y {
            let s = base
                .state_index(name)
                .ok_or_else(|| Error::invalid(format!("unknown state `{name}` in strategy")))?;
            let i = domain
                .decoys
                .binary_search(&s)
                .map_err(|_| Error::invalid(format!("state `{name}` is not a decoy of the instance")))?;
            if y[i].replace(*v).is_some() {
                return Err(Error::invalid(format!("decoy `{name}` listed twice")));
            }
        }
        let mut x = vec![0.0; domain.modifiable.len()];
        let mut seen = vec![false; domain.modifiable.len()];
        for (sname, aname, v) in &self.x {
            let s = base
                .state_index(sname)
                .ok_or_else(|| Error::invalid(format!("unknown state `{sname}` in strategy")))?;
            let a = base
                .action_index(aname)
                .ok_or_else(|| Error::invalid(format!("unknown action `{aname}` in strategy")))?;
            let i = domain
                .modifiable
                .binary_search(&(s, a))
                .map_err(|_| Error::invalid(format!("pair ({sname}, {aname}) is not modifiable in the instance")))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("pair ({sname}, {aname}) listed twice")));
            }
            x[i] = *v;
        }
        if y.iter().all(Option::is_none) {
            if x.iter().any(|&v| v != 0.0) {
                return Err(Error::invalid("action modifications given without decoy allocation"));
            }
            return Ok(None);
        }
        if let Some(i) = y.iter().position(Option::is_none) {
            return Err(Error::invalid(format!(
                "decoy `{}` has no allocation",
                base.state_name(domain.decoys[i])
            )));
        }
        let y: Vec<f64> = y.into_iter().map(|v| v.unwrap_or(0.0)).collect();
        DefenseStrategy::new(domain, x, y).map(Some)
    }
}
