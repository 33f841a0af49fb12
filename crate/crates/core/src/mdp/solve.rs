use super::{induce_chain, Mdp, StochasticPolicy, ValueVector};
use crate::linalg::{self, Row, DENSE_LIMIT};
use crate::{Error, Result};

/// Fixed-point residual every solver here is held to.
pub const SOLVE_TOL: f64 = 1e-10;
/// Q-values closer than this (relative) count as tied.
const TIE_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 2_000_000;

fn check_inputs(mdp: &Mdp, reward: &[f64], discount: f64) -> Result<()> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::invalid(format!("discount {discount} outside (0, 1)")));
    }
    if reward.len() != mdp.n_states() * mdp.n_actions() {
        return Err(Error::invalid(format!(
            "reward has {} entries, expected {}",
            reward.len(),
            mdp.n_states() * mdp.n_actions()
        )));
    }
    if let Some(i) = reward.iter().position(|r| !r.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite reward at ({}, {})",
            mdp.state_name(i / mdp.n_actions()),
            mdp.action_name(i % mdp.n_actions())
        )));
    }
    Ok(())
}

/// `Q(s,a) = r(s,a) + γ Σ_{s'} P(s'|s,a)·V(s')`, row-major.
pub fn q_values(mdp: &Mdp, reward: &[f64], discount: f64, values: &[f64]) -> Vec<f64> {
    let m = mdp.n_actions();
    let mut q = Vec::with_capacity(reward.len());
    for s in 0..mdp.n_states() {
        for a in 0..m {
            let next: f64 = mdp.row(s, a).iter().map(|&(t, p)| p * values[t]).sum();
            q.push(reward[s * m + a] + discount * next);
        }
    }
    q
}

/// Exact value of `policy` under `reward`: the unique solution of
/// `V = r_π + γ P_π V`.
pub fn policy_evaluation(mdp: &Mdp, reward: &[f64], policy: &StochasticPolicy, discount: f64) -> Result<ValueVector> {
    check_inputs(mdp, reward, discount)?;
    let chain = induce_chain(mdp, policy)?;
    let m = mdp.n_actions();
    let r_pi: Vec<f64> = (0..mdp.n_states())
        .map(|s| (0..m).map(|a| policy.prob(s, a) * reward[s * m + a]).sum())
        .collect();
    linalg::solve_fixed_point(chain.rows(), &r_pi, discount, false).map(ValueVector)
}

fn evaluate_deterministic(mdp: &Mdp, reward: &[f64], actions: &[usize], discount: f64) -> Result<Vec<f64>> {
    let m = mdp.n_actions();
    let rows: Vec<Row> = actions
        .iter()
        .enumerate()
        .map(|(s, &a)| mdp.row(s, a).to_vec())
        .collect();
    let r: Vec<f64> = actions.iter().enumerate().map(|(s, &a)| reward[s * m + a]).collect();
    linalg::solve_fixed_point(&rows, &r, discount, false)
}

#[cfg(test)]
fn bellman_residual(mdp: &Mdp, reward: &[f64], discount: f64, values: &[f64]) -> f64 {
    let m = mdp.n_actions();
    let q = q_values(mdp, reward, discount, values);
    values
        .iter()
        .enumerate()
        .map(|(s, v)| {
            let best = q[s * m..(s + 1) * m].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (best - v).abs()
        })
        .fold(0.0, f64::max)
}

/// Optimal values and a greedy deterministic policy.
///
/// Howard policy iteration on models small enough for dense solves, value
/// iteration otherwise. Ties go to the lowest action index.
pub fn optimal_value(mdp: &Mdp, reward: &[f64], discount: f64) -> Result<(ValueVector, StochasticPolicy)> {
    check_inputs(mdp, reward, discount)?;
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let values = if n <= DENSE_LIMIT {
        let mut actions: Vec<usize> = (0..n).map(|s| argmax_first(&reward[s * m..(s + 1) * m])).collect();
        let mut values = evaluate_deterministic(mdp, reward, &actions, discount)?;
        for _ in 0..10_000 {
            let q = q_values(mdp, reward, discount, &values);
            let mut changed = false;
            for s in 0..n {
                let row = &q[s * m..(s + 1) * m];
                let best = argmax_first(row);
                let cur = row[actions[s]];
                if row[best] > cur + 1e-13 * (1.0 + cur.abs()) {
                    actions[s] = best;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            values = evaluate_deterministic(mdp, reward, &actions, discount)?;
        }
        values
    } else {
        let mut values = vec![0.0; n];
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let q = q_values(mdp, reward, discount, &values);
            let mut delta: f64 = 0.0;
            for s in 0..n {
                let best = q[s * m..(s + 1) * m].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((best - values[s]).abs());
                values[s] = best;
            }
            if delta * discount / (1.0 - discount) < SOLVE_TOL * 0.1 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical("value iteration did not converge".into()));
        }
        values
    };
    let q = q_values(mdp, reward, discount, &values);
    let actions: Vec<usize> = (0..n)
        .map(|s| {
            let row = &q[s * m..(s + 1) * m];
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tol = TIE_TOL * best.abs().max(1.0);
            row.iter().position(|&v| v >= best - tol).unwrap_or(0)
        })
        .collect();
    Ok((ValueVector(values), StochasticPolicy::deterministic(&actions, m)))
}

fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    best
}

/// Converged entropy-regularized solution.
#[derive(Debug, Clone)]
pub(crate) struct SoftSolution {
    pub values: Vec<f64>,
    /// Row-major `log π(a|s) = (Q(s,a) − V(s))/τ`.
    pub log_policy: Vec<f64>,
    pub policy: StochasticPolicy,
}

fn soft_backup(q: &[f64], m: usize, temperature: f64, values: &mut [f64]) -> f64 {
    let mut delta: f64 = 0.0;
    for (s, v) in values.iter_mut().enumerate() {
        let row = &q[s * m..(s + 1) * m];
        let next = log_sum_exp(row, temperature);
        delta = delta.max((next - *v).abs());
        *v = next;
    }
    delta
}

/// `τ·log Σ exp(q/τ)` with the max shifted out.
fn log_sum_exp(row: &[f64], temperature: f64) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = row.iter().map(|&v| ((v - max) / temperature).exp()).sum();
    max + temperature * sum.ln()
}

/// Boltzmann policy of `q`, normalized per row against the row's own
/// log-sum-exp so rows sum to one even away from the fixed point.
fn soft_policy(q: &[f64], m: usize, temperature: f64) -> (Vec<f64>, Vec<f64>) {
    let mut log_pi = Vec::with_capacity(q.len());
    let mut pi = Vec::with_capacity(q.len());
    for row in q.chunks(m) {
        let lse = log_sum_exp(row, temperature);
        let mut sum = 0.0;
        let start = pi.len();
        for &qa in row {
            let lp = (qa - lse) / temperature;
            log_pi.push(lp);
            let p = lp.exp();
            pi.push(p);
            sum += p;
        }
        for p in &mut pi[start..] {
            *p /= sum;
        }
    }
    (log_pi, pi)
}

fn soft_residual(mdp: &Mdp, reward: &[f64], discount: f64, temperature: f64, values: &[f64]) -> f64 {
    let m = mdp.n_actions();
    let q = q_values(mdp, reward, discount, values);
    values
        .iter()
        .enumerate()
        .map(|(s, v)| (log_sum_exp(&q[s * m..(s + 1) * m], temperature) - v).abs())
        .fold(0.0, f64::max)
}

/// Soft Bellman solve, optionally warm-started from `warm` values.
///
/// A few value-iteration sweeps bring the iterate close, then soft policy
/// iteration (a Newton method on the soft Bellman operator) polishes it to
/// near machine precision. Models above the dense-solve limit fall back to
/// plain sweeps.
pub(crate) fn soft_solve(
    mdp: &Mdp,
    reward: &[f64],
    discount: f64,
    temperature: f64,
    warm: Option<&[f64]>,
) -> Result<SoftSolution> {
    check_inputs(mdp, reward, discount)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!("temperature {temperature} must be positive")));
    }
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let mut values = match warm {
        Some(w) if w.len() == n => w.to_vec(),
        _ => vec![0.0; n],
    };
    let scale = |v: &[f64]| v.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));

    if n <= DENSE_LIMIT {
        for _ in 0..200 {
            let q = q_values(mdp, reward, discount, &values);
            if soft_backup(&q, m, temperature, &mut values) < 1e-3 {
                break;
            }
        }
        let mut best_residual = f64::INFINITY;
        let mut stalls = 0;
        for _ in 0..60 {
            let q = q_values(mdp, reward, discount, &values);
            let (log_pi, pi) = soft_policy(&q, m, temperature);
            let policy = StochasticPolicy::from_raw(m, pi);
            let chain = induce_chain(mdp, &policy)?;
            let r_pi: Vec<f64> = (0..n)
                .map(|s| {
                    (0..m)
                        .map(|a| {
                            let p = policy.prob(s, a);
                            if p > 0.0 {
                                p * (reward[s * m + a] - temperature * log_pi[s * m + a])
                            } else {
                                0.0
                            }
                        })
                        .sum()
                })
                .collect();
            let next = linalg::solve_fixed_point(chain.rows(), &r_pi, discount, false)?;
            let residual = soft_residual(mdp, reward, discount, temperature, &next);
            if residual < best_residual {
                values = next;
                if residual <= 1e-13 * scale(&values) {
                    break;
                }
                if residual > 0.5 * best_residual {
                    stalls += 1;
                }
                best_residual = residual;
            } else {
                stalls += 1;
            }
            if stalls >= 3 {
                break;
            }
        }
    }
    if soft_residual(mdp, reward, discount, temperature, &values) > SOLVE_TOL * 0.1 * scale(&values) {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let q = q_values(mdp, reward, discount, &values);
            let delta = soft_backup(&q, m, temperature, &mut values);
            if delta * discount / (1.0 - discount) < SOLVE_TOL * 0.1 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical("soft value iteration did not converge".into()));
        }
    }
    let q = q_values(mdp, reward, discount, &values);
    let (log_policy, pi) = soft_policy(&q, m, temperature);
    Ok(SoftSolution {
        values,
        log_policy,
        policy: StochasticPolicy::from_raw(m, pi),
    })
}

/// Fixed point of `V(s) = τ·log Σ_a exp(Q(s,a)/τ)` and the Boltzmann policy
/// `π(a|s) ∝ exp(Q(s,a)/τ)`.
pub fn soft_value_iteration(
    mdp: &Mdp,
    reward: &[f64],
    discount: f64,
    temperature: f64,
) -> Result<(ValueVector, StochasticPolicy)> {
    let sol = soft_solve(mdp, reward, discount, temperature, None)?;
    Ok((ValueVector(sol.values), sol.policy))
}

#[cfg(test)]
pub(crate) fn soft_fixed_point_residual(
    mdp: &Mdp,
    reward: &[f64],
    discount: f64,
    temperature: f64,
    values: &[f64],
) -> f64 {
    soft_residual(mdp, reward, discount, temperature, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn absorbing() -> Mdp {
        let mut b = MdpBuilder::indexed(1, 1);
        b.transition(0, 0, 0, 1.0).init(0, 1.0).sink(0).discount(0.95);
        b.build().unwrap()
    }

    /// State 0 with `m` actions, all leading to the absorbing sink 1.
    fn one_step(rewards: &[f64]) -> (Mdp, Vec<f64>) {
        let m = rewards.len();
        let mut b = MdpBuilder::indexed(2, m);
        let mut r = vec![0.0; 2 * m];
        for a in 0..m {
            b.transition(0, a, 1, 1.0).transition(1, a, 1, 1.0);
            r[a] = rewards[a];
        }
        b.init(0, 1.0).sink(1).discount(0.9);
        (b.build().unwrap(), r)
    }

    #[test]
    fn geometric_series_value() {
        let mdp = absorbing();
        let v = policy_evaluation(&mdp, &[1.0], &StochasticPolicy::uniform(1, 1), 0.95).unwrap();
        assert!((v[0] - 20.0).abs() < 1e-10);
        let zero = policy_evaluation(&mdp, &[0.0], &StochasticPolicy::uniform(1, 1), 0.95).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn evaluation_rejects_non_finite_reward() {
        let mdp = absorbing();
        assert!(policy_evaluation(&mdp, &[f64::NAN], &StochasticPolicy::uniform(1, 1), 0.95).is_err());
    }

    #[test]
    fn picks_larger_immediate_reward() {
        let (mdp, r) = one_step(&[1.0, 0.0]);
        let (v, pi) = optimal_value(&mdp, &r, 0.9).unwrap();
        assert_eq!(pi.argmax_actions()[0], 0);
        assert!((v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let (mdp, r) = one_step(&[0.5, 0.5]);
        let (_, pi) = optimal_value(&mdp, &r, 0.9).unwrap();
        assert_eq!(pi.row(0), &[1.0, 0.0]);
        let (mdp, r) = one_step(&[0.2, 0.7, 0.7]);
        let (_, pi) = optimal_value(&mdp, &r, 0.9).unwrap();
        assert_eq!(pi.argmax_actions()[0], 1);
    }

    #[test]
    fn soft_single_action_equals_hard() {
        let mdp = absorbing();
        let (soft, pi) = soft_value_iteration(&mdp, &[1.0], 0.95, 0.3).unwrap();
        let (hard, _) = optimal_value(&mdp, &[1.0], 0.95).unwrap();
        assert!((soft[0] - hard[0]).abs() < 1e-10);
        assert_eq!(pi.row(0), &[1.0]);
    }

    #[test]
    fn soft_equal_q_is_uniform() {
        let (mdp, r) = one_step(&[0.3, 0.3]);
        let (_, pi) = soft_value_iteration(&mdp, &r, 0.9, 0.05).unwrap();
        assert!((pi.prob(0, 0) - 0.5).abs() < 1e-12);
        assert!((pi.prob(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn soft_rejects_bad_temperature() {
        let mdp = absorbing();
        assert!(soft_value_iteration(&mdp, &[1.0], 0.95, 0.0).is_err());
        assert!(soft_value_iteration(&mdp, &[1.0], 0.95, -1.0).is_err());
    }

    #[test]
    fn soft_residual_is_tight() {
        let (mdp, r) = one_step(&[1.0, 0.2, -0.5]);
        let (v, _) = soft_value_iteration(&mdp, &r, 0.9, 0.05).unwrap();
        assert!(soft_fixed_point_residual(&mdp, &r, 0.9, 0.05, &v.0) <= SOLVE_TOL);
    }

    #[test]
    fn optimal_value_satisfies_bellman() {
        let mdp = crate::environments::random_mdp(8, 3, 0.9, 11).unwrap();
        let r: Vec<f64> = (0..24).map(|i| ((i * 7) % 5) as f64 / 4.0).collect();
        let (v, _) = optimal_value(&mdp, &r, 0.9).unwrap();
        assert!(bellman_residual(&mdp, &r, 0.9, &v.0) < 1e-10);
    }
}
