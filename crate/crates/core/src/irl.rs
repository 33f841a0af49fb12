//! Projection of a desired attack policy onto the policies a feasible
//! strategy `(x, y)` can induce.
//!
//! The attacker is modeled as soft-rational: given `(x, y)` he plays the
//! Boltzmann policy of the soft-optimal Q-values at temperature `τ₂` in the
//! perceptual MDP. Projection maximizes the occupancy-weighted
//! log-likelihood of that policy against the target's visitation, with a
//! log barrier `(1/t)·log(h − 1ᵀy)` for the decoy budget:
//!
//! ```text
//! L(x, y) = Σ_{s,a} μ̂(s,a)·log π_{x,y}(a|s) + (1/t)·log(h − 1ᵀy)
//! ```
//!
//! Perceived rewards are linear in `(x, y)` with indicator features, so the
//! likelihood gradient is the familiar MaxEnt feature-matching difference
//! `(μ̂ − μ_{x,y}) / τ₂`, provided `μ̂` is an occupancy measure of the same
//! dynamics, discount and initial distribution.

use std::fmt::Write as _;

use crate::fmt::sig6;
use crate::mdp::{
    induce_chain, kl_divergence, occupancy, soft_solve, Mdp, OccupancyMeasure, SoftSolution, StochasticPolicy,
};
use crate::perception::{perceived_rewards, DefenseDomain, DefenseStrategy, Y_MIN};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionConfig {
    /// Barrier weight `t`; the barrier term is scaled by `1/t`.
    pub barrier_weight: f64,
    pub step_x: f64,
    pub step_y: f64,
    /// Halve rejected steps instead of taking them.
    pub backtracking: bool,
    /// Attacker temperature `τ₂`.
    pub temperature: f64,
    /// Stop once the projected gradient's sup-norm falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub y_min: f64,
    /// Lower clamp for action modifications.
    pub x_min: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            barrier_weight: 1000.0,
            step_x: 0.05,
            step_y: 0.05,
            backtracking: true,
            temperature: 0.2,
            grad_tol: 1e-5,
            max_iters: 2000,
            y_min: Y_MIN,
            x_min: -10.0,
        }
    }
}

impl ProjectionConfig {
    pub fn check(&self) -> Result<()> {
        let positive = [
            ("barrier weight", self.barrier_weight),
            ("x step", self.step_x),
            ("y step", self.step_y),
            ("attacker temperature", self.temperature),
            ("gradient tolerance", self.grad_tol),
            ("y floor", self.y_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.x_min < 0.0 && self.x_min.is_finite()) {
            return Err(Error::invalid(format!("x floor must be negative, got {}", self.x_min)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("projection needs at least one iteration"));
        }
        Ok(())
    }
}

/// One accepted projection iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionStep {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub budget_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub strategy: DefenseStrategy,
    /// Soft-optimal attacker policy under `strategy`.
    pub attacker_policy: StochasticPolicy,
    pub objective_trace: Vec<f64>,
    pub steps: Vec<ProjectionStep>,
    pub converged: bool,
    pub iterations: usize,
}

/// Iteration trace as `iter,objective,grad_norm,budget_used` lines.
pub fn write_projection_trace(result: &ProjectionResult) -> String {
    let mut out = String::from("iter,objective,grad_norm,budget_used\n");
    for st in &result.steps {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            st.iter,
            sig6(st.objective),
            sig6(st.grad_norm),
            sig6(st.budget_used)
        );
    }
    out
}

/// Discounted occupancy of `target` in the perceptual dynamics (decoys
/// terminating), which is what the likelihood is weighted by.
pub fn target_occupancy(base: &Mdp, domain: &DefenseDomain, target: &StochasticPolicy) -> Result<OccupancyMeasure> {
    let dynamics = base.with_terminating_decoys(domain.decoys());
    let chain = induce_chain(&dynamics, target)?;
    occupancy(&chain, target, base.discount())
}

/// Everything that stays fixed while `(x, y)` moves.
struct Problem<'a> {
    base: &'a Mdp,
    dynamics: Mdp,
    domain: &'a DefenseDomain,
    target_occ: &'a OccupancyMeasure,
    config: &'a ProjectionConfig,
}

struct Evaluation {
    objective: f64,
    soft: SoftSolution,
}

impl<'a> Problem<'a> {
    fn new(
        base: &'a Mdp,
        domain: &'a DefenseDomain,
        target_occ: &'a OccupancyMeasure,
        config: &'a ProjectionConfig,
    ) -> Result<Self> {
        config.check()?;
        let n = base.n_states();
        let m = base.n_actions();
        if target_occ.state_occ.len() != n || target_occ.n_actions() != m {
            return Err(Error::invalid("target occupancy does not match the model"));
        }
        Ok(Problem {
            base,
            dynamics: base.with_terminating_decoys(domain.decoys()),
            domain,
            target_occ,
            config,
        })
    }

    fn has_barrier(&self) -> bool {
        !self.domain.decoys().is_empty()
    }

    fn slack(&self, y: &[f64]) -> Result<f64> {
        let slack = self.domain.budget() - y.iter().sum::<f64>();
        if self.has_barrier() && slack <= 0.0 {
            return Err(Error::invalid(format!(
                "decoy rewards exhaust the budget (slack {slack}); outside the barrier domain"
            )));
        }
        Ok(slack)
    }

    fn rewards(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.base.n_actions();
        let mut r = self.base.reward().to_vec();
        for (&d, &v) in self.domain.decoys().iter().zip(y) {
            for a in 0..m {
                r[d * m + a] = v;
            }
        }
        for (&(s, a), &v) in self.domain.modifiable().iter().zip(x) {
            if v < 0.0 {
                r[s * m + a] = v;
            }
        }
        r
    }

    fn evaluate(&self, x: &[f64], y: &[f64], warm: Option<&[f64]>) -> Result<Evaluation> {
        let slack = self.slack(y)?;
        let reward = self.rewards(x, y);
        let soft = soft_solve(
            &self.dynamics,
            &reward,
            self.base.discount(),
            self.config.temperature,
            warm,
        )?;
        let likelihood: f64 = self
            .target_occ
            .state_action_occ
            .iter()
            .zip(&soft.log_policy)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, lp)| w * lp)
            .sum();
        let barrier = if self.has_barrier() {
            slack.ln() / self.config.barrier_weight
        } else {
            0.0
        };
        Ok(Evaluation {
            objective: likelihood + barrier,
            soft,
        })
    }

    fn gradient(&self, y: &[f64], eval: &Evaluation) -> Result<(Vec<f64>, Vec<f64>)> {
        let slack = self.slack(y)?;
        let chain = induce_chain(&self.dynamics, &eval.soft.policy)?;
        let occ = occupancy(&chain, &eval.soft.policy, self.base.discount())?;
        let tau = self.config.temperature;
        let barrier = if self.has_barrier() {
            1.0 / (self.config.barrier_weight * slack)
        } else {
            0.0
        };
        let gy = self
            .domain
            .decoys()
            .iter()
            .map(|&d| (self.target_occ.state(d) - occ.state(d)) / tau - barrier)
            .collect();
        let gx = self
            .domain
            .modifiable()
            .iter()
            .map(|&(s, a)| (self.target_occ.state_action(s, a) - occ.state_action(s, a)) / tau)
            .collect();
        Ok((gx, gy))
    }

    fn check_point(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.domain.modifiable().len() || y.len() != self.domain.decoys().len() {
            return Err(Error::invalid("(x, y) do not match the defense domain"));
        }
        Ok(())
    }
}

/// Barriered log-likelihood `L(x, y)`.
pub fn irl_objective(
    base: &Mdp,
    domain: &DefenseDomain,
    x: &[f64],
    y: &[f64],
    target_occ: &OccupancyMeasure,
    config: &ProjectionConfig,
) -> Result<f64> {
    let problem = Problem::new(base, domain, target_occ, config)?;
    problem.check_point(x, y)?;
    Ok(problem.evaluate(x, y, None)?.objective)
}

/// Gradient of [`irl_objective`] with respect to `x` (over `W`) and `y`
/// (over `D`).
pub fn irl_gradient(
    base: &Mdp,
    domain: &DefenseDomain,
    x: &[f64],
    y: &[f64],
    target_occ: &OccupancyMeasure,
    config: &ProjectionConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let problem = Problem::new(base, domain, target_occ, config)?;
    problem.check_point(x, y)?;
    let eval = problem.evaluate(x, y, None)?;
    problem.gradient(y, &eval)
}

/// Interior starting point: `x = 0`, decoys share half the usable budget.
fn default_start(domain: &DefenseDomain, config: &ProjectionConfig) -> (Vec<f64>, Vec<f64>) {
    let k = domain.decoys().len();
    let x = vec![0.0; domain.modifiable().len()];
    if k == 0 {
        return (x, Vec::new());
    }
    let spare = domain.budget() - k as f64 * config.y_min;
    (x, vec![config.y_min + spare / (2.0 * k as f64); k])
}

fn pull_inside(y: &mut [f64], budget: f64, y_min: f64) {
    let used: f64 = y.iter().sum();
    if used < budget {
        return;
    }
    let floor = y.len() as f64 * y_min;
    let excess = used - floor;
    let room = 0.999 * (budget - floor);
    let shrink = if excess > 0.0 { room / excess } else { 0.0 };
    for v in y.iter_mut() {
        *v = y_min + (*v - y_min) * shrink;
    }
}

/// Projected gradient ascent on [`irl_objective`] with backtracking.
///
/// A trial step is taken at the last accepted step multiplier times two
/// (capped at one) and halved until the new point is inside the barrier
/// domain and does not lower the objective. Runs until the projected
/// gradient's sup-norm is below `grad_tol` or `max_iters` is hit.
pub fn project_policy(
    base: &Mdp,
    domain: &DefenseDomain,
    target: &StochasticPolicy,
    config: &ProjectionConfig,
    warm_start: Option<&DefenseStrategy>,
) -> Result<ProjectionResult> {
    if !domain.decoys().is_empty() && domain.budget() <= domain.decoys().len() as f64 * config.y_min {
        return Err(Error::Infeasible(format!(
            "budget {} leaves no interior point for {} decoys with floor {}",
            domain.budget(),
            domain.decoys().len(),
            config.y_min
        )));
    }
    target.check_shape(base)?;
    let target_occ = target_occupancy(base, domain, target)?;
    let problem = Problem::new(base, domain, &target_occ, config)?;

    let (mut x, mut y) = match warm_start {
        Some(w) if w.domain().decoys() == domain.decoys() && w.domain().modifiable() == domain.modifiable() => {
            let x = w.x().iter().map(|v| v.clamp(config.x_min, 0.0)).collect();
            let mut y: Vec<f64> = w.y().iter().map(|v| v.max(config.y_min)).collect();
            pull_inside(&mut y, domain.budget(), config.y_min);
            (x, y)
        }
        _ => default_start(domain, config),
    };

    let mut current = problem.evaluate(&x, &y, None)?;
    let mut objective_trace = vec![current.objective];
    let mut steps = Vec::new();
    let mut converged = false;
    let mut multiplier: f64 = 1.0;
    let mut iterations = 0;

    for iter in 0..config.max_iters {
        iterations = iter + 1;
        let (gx, gy) = problem.gradient(&y, &current)?;
        let pgx = gx.iter().zip(&x).map(|(&g, &v)| {
            if (v >= 0.0 && g > 0.0) || (v <= config.x_min && g < 0.0) {
                0.0
            } else {
                g
            }
        });
        let pgy = gy
            .iter()
            .zip(&y)
            .map(|(&g, &v)| if v <= config.y_min && g < 0.0 { 0.0 } else { g });
        let grad_norm = pgx.chain(pgy).fold(0.0f64, |acc, g| acc.max(g.abs()));
        steps.push(ProjectionStep {
            iter,
            objective: current.objective,
            grad_norm,
            budget_used: y.iter().sum(),
        });
        if grad_norm < config.grad_tol {
            converged = true;
            break;
        }

        let mut trial_mult = (2.0 * multiplier).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let nx: Vec<f64> = x
                .iter()
                .zip(&gx)
                .map(|(v, g)| (v + trial_mult * config.step_x * g).clamp(config.x_min, 0.0))
                .collect();
            let ny: Vec<f64> = y
                .iter()
                .zip(&gy)
                .map(|(v, g)| (v + trial_mult * config.step_y * g).max(config.y_min))
                .collect();
            if nx == x && ny == y {
                break;
            }
            let inside = !problem.has_barrier() || ny.iter().sum::<f64>() < domain.budget();
            if inside {
                let cand = problem.evaluate(&nx, &ny, Some(&current.soft.values))?;
                if !config.backtracking || cand.objective >= current.objective {
                    accepted = Some((nx, ny, cand));
                    break;
                }
            } else if !config.backtracking {
                break;
            }
            trial_mult *= 0.5;
        }
        match accepted {
            Some((nx, ny, cand)) => {
                x = nx;
                y = ny;
                current = cand;
                multiplier = trial_mult;
                objective_trace.push(current.objective);
            }
            // No ascent direction survives at machine precision.
            None => break,
        }
    }

    let strategy = DefenseStrategy::new(domain.clone(), x, y)?;
    Ok(ProjectionResult {
        strategy,
        attacker_policy: current.soft.policy,
        objective_trace,
        steps,
        converged,
        iterations,
    })
}

/// Soft-optimal attacker policy under a strategy.
pub fn soft_attacker_policy(base: &Mdp, strategy: &DefenseStrategy, temperature: f64) -> Result<StochasticPolicy> {
    let dynamics = base.with_terminating_decoys(strategy.domain().decoys());
    let reward = perceived_rewards(base, strategy);
    Ok(soft_solve(&dynamics, &reward, base.discount(), temperature, None)?.policy)
}

/// KL divergence (truncated at `horizon`) from the chain the target policy
/// induces to the chain the strategy's soft-optimal attacker induces, both
/// in the perceptual dynamics. Diagnostic only.
pub fn kl_report(
    base: &Mdp,
    strategy: &DefenseStrategy,
    target: &StochasticPolicy,
    horizon: usize,
    temperature: f64,
) -> Result<f64> {
    let dynamics = base.with_terminating_decoys(strategy.domain().decoys());
    let projected = soft_attacker_policy(base, strategy, temperature)?;
    let target_chain = induce_chain(&dynamics, target)?;
    let projected_chain = induce_chain(&dynamics, &projected)?;
    kl_divergence(&target_chain, &projected_chain, horizon)
}
