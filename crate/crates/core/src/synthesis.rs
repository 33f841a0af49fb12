//! The outer synthesis loop.
//!
//! Each restart starts from an initial attack policy, projects it onto the
//! realizable set, then alternates a softmax policy-improvement step on the
//! defender's value with another projection until the defender's value
//! stops moving. Restarts run independently and the best one is kept.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fmt::sig6;
use crate::irl::{project_policy, ProjectionConfig};
use crate::mdp::{optimal_value, Mdp, StochasticPolicy};
use crate::par::{map_indexed, Execution};
use crate::perception::{
    attacker_reach, attacker_value, build_perceptual, defender_value, defender_value_discounted, defender_values,
    DefenseDomain, DefenseStrategy, PerceptualMdp,
};
use crate::{Error, Result};

/// How a restart picks its first target policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPolicyKind {
    /// Attacker-optimal policy for a surrogate reward of one on decoys and
    /// zero on real targets: ideal for the defender, usually unrealizable.
    DefenderIdeal,
    /// Seeded random row-stochastic policy.
    Random,
}

impl FromStr for InitialPolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "defender-ideal" => Ok(InitialPolicyKind::DefenderIdeal),
            "random" => Ok(InitialPolicyKind::Random),
            other => Err(Error::invalid(format!("unknown initial policy kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for InitialPolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitialPolicyKind::DefenderIdeal => "defender-ideal",
            InitialPolicyKind::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// Softmax temperature `τ` of the improvement step.
    pub improvement_temperature: f64,
    /// Stop once `|V₁ᵏ⁺¹ − V₁ᵏ| ≤ epsilon`.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub projection: ProjectionConfig,
    /// Restart `r` uses `initial_kinds[r]`, or the last entry once the list
    /// runs out.
    pub initial_kinds: Vec<InitialPolicyKind>,
    pub execution: Execution,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            improvement_temperature: 0.1,
            epsilon: 1e-4,
            max_outer_iters: 200,
            restarts: 3,
            seed: 0,
            projection: ProjectionConfig::default(),
            initial_kinds: vec![InitialPolicyKind::DefenderIdeal, InitialPolicyKind::Random],
            execution: Execution::Parallel,
        }
    }
}

impl SynthesisConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.improvement_temperature > 0.0 && self.improvement_temperature.is_finite()) {
            return Err(Error::invalid("improvement temperature must be positive"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::invalid("stopping threshold must be positive"));
        }
        if self.max_outer_iters == 0 || self.restarts == 0 || self.initial_kinds.is_empty() {
            return Err(Error::invalid("need at least one restart, one kind and one iteration"));
        }
        self.projection.check()
    }

    fn restart_plan(&self, r: usize) -> (InitialPolicyKind, u64) {
        let kind = self.initial_kinds.get(r).or(self.initial_kinds.last()).copied();
        (kind.expect("checked non-empty"), self.seed.wrapping_add(r as u64))
    }
}

/// One outer iterate of a restart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iter: usize,
    /// `V₁` of the projected attacker policy.
    pub defender_value: f64,
    /// `V₂` of the projected attacker policy in its perceptual MDP.
    pub attacker_value: f64,
    pub budget_used: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord {
    pub index: usize,
    pub kind: InitialPolicyKind,
    pub seed: u64,
    pub trace: Vec<TracePoint>,
    /// Stopping threshold met before the iteration cap.
    pub converged: bool,
    pub strategy: DefenseStrategy,
    pub attacker_policy: StochasticPolicy,
    pub defender_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub strategy: DefenseStrategy,
    /// Soft-optimal attacker response `π*` to `strategy`.
    pub attacker_policy: StochasticPolicy,
    /// Probability that `π*` enters a decoy.
    pub defender_value: f64,
    /// `E[γ^T]` at decoy entry time `T` under `π*`.
    pub defender_value_discounted: f64,
    /// Probability that `π*` reaches a real target.
    pub attacker_reach: f64,
    /// Perceived attacker value of `π*`.
    pub attacker_value: f64,
    pub restarts: Vec<RestartRecord>,
    pub best_restart: usize,
    pub upper_bound: f64,
    pub duration: Duration,
}

impl SynthesisResult {
    pub fn upper_bound_gap(&self) -> f64 {
        self.upper_bound - self.defender_value
    }
}

/// Softmax step on the defender's Q-values,
/// `Q₁(s,a) = R₁(s) + γ Σ_{s'} P(s'|s,a)·V₁(s')`, in the perceptual dynamics.
pub fn policy_improvement(
    perceptual: &Mdp,
    decoys: &[usize],
    v1: &[f64],
    temperature: f64,
) -> Result<StochasticPolicy> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("improvement temperature must be positive"));
    }
    let n = perceptual.n_states();
    let m = perceptual.n_actions();
    if v1.len() != n || v1.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("defender values must be finite, one per state"));
    }
    let gamma = perceptual.discount();
    let mut probs = Vec::with_capacity(n * m);
    let mut q = vec![0.0; m];
    for s in 0..n {
        let r1 = if decoys.contains(&s) { 1.0 } else { 0.0 };
        for (a, qa) in q.iter_mut().enumerate() {
            let next: f64 = perceptual.row(s, a).iter().map(|&(t, p)| p * v1[t]).sum();
            *qa = r1 + gamma * next;
        }
        let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = probs.len();
        let mut sum = 0.0;
        for &qa in &q {
            let w = ((qa - max) / temperature).exp();
            probs.push(w);
            sum += w;
        }
        for p in &mut probs[start..] {
            *p /= sum;
        }
    }
    StochasticPolicy::new(m, probs)
}

/// First target policy of a restart.
pub fn make_initial_policy(
    base: &Mdp,
    decoys: &[usize],
    kind: InitialPolicyKind,
    seed: u64,
) -> Result<StochasticPolicy> {
    let n = base.n_states();
    let m = base.n_actions();
    match kind {
        InitialPolicyKind::DefenderIdeal => {
            let dynamics = base.with_terminating_decoys(decoys);
            let reward: Vec<f64> = (0..n * m)
                .map(|i| if decoys.contains(&(i / m)) { 1.0 } else { 0.0 })
                .collect();
            Ok(optimal_value(&dynamics, &reward, base.discount())?.1)
        }
        InitialPolicyKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut probs = Vec::with_capacity(n * m);
            for _ in 0..n {
                // Exponential draws normalize to a flat Dirichlet row.
                let row: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let sum: f64 = row.iter().sum();
                probs.extend(row.iter().map(|w| w / sum));
            }
            StochasticPolicy::new(m, probs)
        }
    }
}

/// Best decoy-reach probability the defender could get by choosing the
/// attacker's actions directly: maximal reachability of `D` with decoys
/// terminating and real targets ending the run.
pub fn defender_upper_bound(base: &Mdp, decoys: &[usize]) -> Result<f64> {
    if decoys.is_empty() {
        return Ok(0.0);
    }
    let dynamics = base.with_terminating_decoys(decoys);
    let n = dynamics.n_states();
    let m = dynamics.n_actions();
    let mut is_decoy = vec![false; n];
    for &d in decoys {
        is_decoy[d] = true;
    }
    let stops = |s: usize| is_decoy[s] || dynamics.is_target(s) || s == dynamics.sink();
    let mut v: Vec<f64> = is_decoy.iter().map(|&d| if d { 1.0 } else { 0.0 }).collect();
    for _ in 0..1_000_000 {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if stops(s) {
                continue;
            }
            let best = (0..m)
                .map(|a| dynamics.row(s, a).iter().map(|&(t, p)| p * v[t]).sum::<f64>())
                .fold(0.0, f64::max);
            delta = delta.max(best - v[s]);
            v[s] = best;
        }
        if delta < 1e-15 {
            break;
        }
    }
    // Exact reach of the greedy policy: achievable, so also a valid floor.
    let greedy: Vec<usize> = (0..n)
        .map(|s| {
            let vals: Vec<f64> = (0..m)
                .map(|a| dynamics.row(s, a).iter().map(|&(t, p)| p * v[t]).sum::<f64>())
                .collect();
            let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vals.iter().position(|&x| x >= best - 1e-12).unwrap_or(0)
        })
        .collect();
    let exact = defender_value(base, decoys, &StochasticPolicy::deterministic(&greedy, m))?;
    let iterated: f64 = base.init().iter().zip(&v).map(|(p, x)| p * x).sum();
    Ok(exact.max(iterated).clamp(0.0, 1.0))
}

fn run_restart(base: &Mdp, domain: &DefenseDomain, config: &SynthesisConfig, index: usize) -> Result<RestartRecord> {
    let (kind, seed) = config.restart_plan(index);
    let start = Instant::now();
    let decoys = domain.decoys();
    let dynamics = base.with_terminating_decoys(decoys);

    let initial = make_initial_policy(base, decoys, kind, seed)?;
    let mut proj = project_policy(base, domain, &initial, &config.projection, None)?;
    let mut v1 = defender_values(base, decoys, &proj.attacker_policy)?;
    let at_init = |v: &[f64]| base.init().iter().zip(v).map(|(p, x)| p * x).sum::<f64>();
    let mut value = at_init(&v1);
    let point =
        |iter: usize, value: f64, strategy: &DefenseStrategy, policy: &StochasticPolicy| -> Result<TracePoint> {
            Ok(TracePoint {
                iter,
                defender_value: value,
                attacker_value: attacker_value(base, strategy, policy)?,
                budget_used: strategy.budget_used(),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        };
    let mut trace = vec![point(0, value, &proj.strategy, &proj.attacker_policy)?];
    let mut converged = false;

    for iter in 1..config.max_outer_iters {
        let target = policy_improvement(&dynamics, decoys, &v1, config.improvement_temperature)?;
        proj = project_policy(base, domain, &target, &config.projection, Some(&proj.strategy))?;
        v1 = defender_values(base, decoys, &proj.attacker_policy)?;
        let next = at_init(&v1);
        trace.push(point(iter, next, &proj.strategy, &proj.attacker_policy)?);
        let delta = (next - value).abs();
        value = next;
        if delta <= config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(RestartRecord {
        index,
        kind,
        seed,
        trace,
        converged,
        strategy: proj.strategy,
        attacker_policy: proj.attacker_policy,
        defender_value: value,
    })
}

/// Multi-start synthesis of a defense strategy over `domain`.
pub fn synthesize(base: &Mdp, domain: &DefenseDomain, config: &SynthesisConfig) -> Result<SynthesisResult> {
    let started = Instant::now();
    config.check()?;
    base.validate().into_result()?;
    if domain.decoys().is_empty() {
        return Err(Error::invalid("synthesis needs at least one decoy state"));
    }
    if domain.budget() <= domain.decoys().len() as f64 * config.projection.y_min {
        return Err(Error::Infeasible(format!(
            "budget {} cannot give {} decoys at least {} each with slack",
            domain.budget(),
            domain.decoys().len(),
            config.projection.y_min
        )));
    }
    let upper_bound = defender_upper_bound(base, domain.decoys())?;
    let restarts = map_indexed(config.execution, config.restarts, |r| {
        run_restart(base, domain, config, r)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, rec) in restarts.iter().enumerate() {
        if rec.defender_value > restarts[best].defender_value {
            best = i;
        }
    }
    let chosen = &restarts[best];
    let decoys = domain.decoys();
    let policy = chosen.attacker_policy.clone();
    Ok(SynthesisResult {
        strategy: chosen.strategy.clone(),
        defender_value: chosen.defender_value,
        defender_value_discounted: defender_value_discounted(base, decoys, &policy)?,
        attacker_reach: attacker_reach(base, decoys, &policy)?,
        attacker_value: attacker_value(base, &chosen.strategy, &policy)?,
        attacker_policy: policy,
        best_restart: best,
        upper_bound,
        duration: started.elapsed(),
        restarts,
    })
}

/// Scenario metrics against a hard-rational attacker.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    /// Attacker best response (deterministic, lowest-index ties).
    pub attacker_policy: StochasticPolicy,
    pub attacker_reach: f64,
    pub defender_value: f64,
    pub defender_value_discounted: f64,
    pub attacker_value: f64,
    pub budget_used: f64,
}

/// Evaluates a strategy, or the no-allocation baseline when `strategy` is
/// `None` (decoys are plain zero-reward sink states).
pub fn evaluate_scenario(
    base: &Mdp,
    domain: &DefenseDomain,
    strategy: Option<&DefenseStrategy>,
) -> Result<ScenarioReport> {
    let perceptual = match strategy {
        Some(s) => build_perceptual(base, s)?,
        None => PerceptualMdp::without_allocation(base, domain),
    };
    let decoys = domain.decoys();
    let (values, policy) = optimal_value(&perceptual.mdp, &perceptual.reward, base.discount())?;
    Ok(ScenarioReport {
        attacker_reach: attacker_reach(base, decoys, &policy)?,
        defender_value: defender_value(base, decoys, &policy)?,
        defender_value_discounted: defender_value_discounted(base, decoys, &policy)?,
        attacker_value: values.at_init(base.init()),
        budget_used: strategy.map_or(0.0, DefenseStrategy::budget_used),
        attacker_policy: policy,
    })
}

/// Restart trace as `iter,defender_value,attacker_value,budget_used,wall_ms`
/// lines. Without `timing` the wall-clock column is written as zero so the
/// file is reproducible byte for byte.
pub fn write_synthesis_trace(record: &RestartRecord, timing: bool) -> String {
    let mut out = String::from("iter,defender_value,attacker_value,budget_used,wall_ms\n");
    for p in &record.trace {
        let wall = if timing { p.wall_ms } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.iter,
            sig6(p.defender_value),
            sig6(p.attacker_value),
            sig6(p.budget_used),
            sig6(wall)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn two_action_choice() -> Mdp {
        // 0: action 0 -> decoy 1, action 1 -> target 2; 3 sink.
        let mut b = MdpBuilder::indexed(4, 2);
        b.transition(0, 0, 1, 1.0).transition(0, 1, 2, 1.0);
        for a in 0..2 {
            b.transition(1, a, 3, 1.0)
                .transition(2, a, 3, 1.0)
                .transition(3, a, 3, 1.0);
            b.reward(2, a, 1.0);
        }
        b.init(0, 1.0).target(2).sink(3).discount(0.9);
        b.build().unwrap()
    }

    #[test]
    fn softmax_of_known_q_values() {
        let mdp = two_action_choice();
        // V1 chosen so Q1(0, ·) = (γ·V1(1), γ·V1(2)) = (1, 0).
        let v1 = [0.0, 1.0 / 0.9, 0.0, 0.0];
        let pi = policy_improvement(&mdp, &[], &v1, 0.5).unwrap();
        let e2 = 2f64.exp();
        assert!((pi.prob(0, 0) - e2 / (e2 + 1.0)).abs() < 1e-12);
        assert!((pi.prob(0, 0) - 0.8808).abs() < 1e-4);
        assert!((pi.prob(0, 1) - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn equal_q_is_uniform_and_hot_is_flat() {
        let mdp = two_action_choice();
        let pi = policy_improvement(&mdp, &[1], &[0.0; 4], 0.1).unwrap();
        assert_eq!(pi.row(0), &[0.5, 0.5]);
        let v1 = [0.3, 1.0, 0.0, 0.0];
        let hot = policy_improvement(&mdp, &[1], &v1, 1e4).unwrap();
        for p in hot.as_slice() {
            assert!((p - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn initial_policy_kinds() {
        let mdp = two_action_choice();
        let ideal = make_initial_policy(&mdp, &[1], InitialPolicyKind::DefenderIdeal, 0).unwrap();
        assert_eq!(ideal.argmax_actions()[0], 0);
        let a = make_initial_policy(&mdp, &[1], InitialPolicyKind::Random, 7).unwrap();
        let b = make_initial_policy(&mdp, &[1], InitialPolicyKind::Random, 7).unwrap();
        let c = make_initial_policy(&mdp, &[1], InitialPolicyKind::Random, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!("sideways".parse::<InitialPolicyKind>().is_err());
    }

    #[test]
    fn upper_bound_simple_cases() {
        let mdp = two_action_choice();
        assert!((defender_upper_bound(&mdp, &[1]).unwrap() - 1.0).abs() < 1e-12);
        // Decoy 0 is the initial state itself; pick an unreachable one instead.
        let mut b = MdpBuilder::indexed(4, 1);
        b.transition(0, 0, 2, 1.0)
            .transition(1, 0, 3, 1.0)
            .transition(2, 0, 3, 1.0)
            .transition(3, 0, 3, 1.0);
        b.reward(2, 0, 1.0).init(0, 1.0).target(2).sink(3);
        let unreachable = b.build().unwrap();
        assert_eq!(defender_upper_bound(&unreachable, &[1]).unwrap(), 0.0);
    }

    #[test]
    fn scenario_baseline_avoids_zero_reward_decoy() {
        let mdp = two_action_choice();
        let domain = DefenseDomain::new(&mdp, &[1], &[], 2.0).unwrap();
        let report = evaluate_scenario(&mdp, &domain, None).unwrap();
        assert_eq!(report.attacker_reach, 1.0);
        assert_eq!(report.defender_value, 0.0);
        let lure = DefenseStrategy::new(domain.clone(), vec![], vec![1.5]).unwrap();
        let report = evaluate_scenario(&mdp, &domain, Some(&lure)).unwrap();
        assert_eq!(report.defender_value, 1.0);
        assert_eq!(report.budget_used, 1.5);
    }
}
