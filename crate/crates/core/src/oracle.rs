//! Brute-force reference computations for tests.
//!
//! Nothing here calls the solvers in [`crate::mdp`] or [`crate::irl`]; only
//! the model types are shared. Exhaustive enumeration solves its own linear
//! systems and the Monte Carlo estimators sample trajectories directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mdp::{MarkovChain, Mdp, StochasticPolicy};
use crate::par::{map_indexed, Execution};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBudget {
    pub max_policies: u64,
    pub rollouts: usize,
    pub horizon: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_policies: 1_000_000,
            rollouts: 1_000_000,
            horizon: 500,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

impl OracleBudget {
    fn check(&self) -> Result<()> {
        if self.max_policies == 0 || self.rollouts == 0 || self.horizon == 0 {
            return Err(Error::invalid("oracle budget entries must be positive"));
        }
        Ok(())
    }
}

/// Result of [`enumerate_best_response`].
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// Best `ν·V` over all deterministic policies.
    pub value: f64,
    /// Pointwise maximum of `V` over all deterministic policies.
    pub values: Vec<f64>,
    /// First policy (in enumeration order) attaining `value`.
    pub policy: Vec<usize>,
}

/// Dense Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Some(x)
}

fn decode(mut code: u64, n: usize, m: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let a = (code % m as u64) as usize;
            code /= m as u64;
            a
        })
        .collect()
}

/// Values of the deterministic policy `actions`: `(I − γ P_π) V = r_π`.
fn evaluate_deterministic(mdp: &Mdp, reward: &[f64], discount: f64, actions: &[usize]) -> Result<Vec<f64>> {
    let n = mdp.n_states();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s * n + s] += 1.0;
        for &(t, p) in mdp.row(s, actions[s]) {
            a[s * n + t] -= discount * p;
        }
        b[s] = reward[mdp.sa(s, actions[s])];
    }
    gauss_solve(a, b, n).ok_or_else(|| Error::Numerical("singular policy system".into()))
}

/// Evaluates all `mⁿ` deterministic policies and keeps the best.
pub fn enumerate_best_response(
    mdp: &Mdp,
    reward: &[f64],
    discount: f64,
    budget: &OracleBudget,
) -> Result<BestResponse> {
    budget.check()?;
    let n = mdp.n_states();
    let m = mdp.n_actions();
    if reward.len() != n * m {
        return Err(Error::invalid("reward must have one entry per state-action pair"));
    }
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::invalid("discount must lie in (0, 1)"));
    }
    let total = (m as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= budget.max_policies)
        .ok_or_else(|| Error::TooLarge(format!("{m}^{n} policies exceed the enumeration budget")))?;

    const CHUNKS: u64 = 64;
    let per_chunk = total.div_ceil(CHUNKS);
    let partial = map_indexed(budget.execution, CHUNKS as usize, |c| -> Result<Option<BestResponse>> {
        let lo = c as u64 * per_chunk;
        let hi = (lo + per_chunk).min(total);
        let mut best: Option<BestResponse> = None;
        for code in lo..hi {
            let actions = decode(code, n, m);
            let v = evaluate_deterministic(mdp, reward, discount, &actions)?;
            let value: f64 = mdp.init().iter().zip(&v).map(|(p, x)| p * x).sum();
            match &mut best {
                None => {
                    best = Some(BestResponse {
                        value,
                        values: v,
                        policy: actions,
                    })
                }
                Some(b) => {
                    for (bv, x) in b.values.iter_mut().zip(&v) {
                        *bv = bv.max(*x);
                    }
                    if value > b.value {
                        b.value = value;
                        b.policy = actions;
                    }
                }
            }
        }
        Ok(best)
    });
    let mut best: Option<BestResponse> = None;
    for chunk in partial {
        let Some(c) = chunk? else { continue };
        match &mut best {
            None => best = Some(c),
            Some(b) => {
                for (bv, x) in b.values.iter_mut().zip(&c.values) {
                    *bv = bv.max(*x);
                }
                if c.value > b.value {
                    b.value = c.value;
                    b.policy = c.policy;
                }
            }
        }
    }
    best.ok_or_else(|| Error::invalid("nothing to enumerate"))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|mean − value|` in standard errors (zero-width estimates must match
    /// exactly).
    pub fn z_score(&self, value: f64) -> f64 {
        let gap = (self.mean - value).abs();
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, pairs: impl Iterator<Item = (usize, f64)>, fallback: usize) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = fallback;
    for (i, p) in pairs {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Runs `budget.rollouts` seeded samples of `f` in fixed chunks and reduces
/// them in chunk order.
fn monte_carlo<F>(budget: &OracleBudget, f: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    budget.check()?;
    const CHUNKS: usize = 256;
    let total = budget.rollouts;
    // Welford within chunks, Chan's pairwise merge across them: constant
    // samples give their exact value back.
    let parts = map_indexed(budget.execution, CHUNKS, |c| {
        let lo = c * total / CHUNKS;
        let hi = (c + 1) * total / CHUNKS;
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        rng.set_stream(c as u64);
        let (mut count, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for _ in lo..hi {
            let x = f(&mut rng);
            count += 1.0;
            let delta = x - mean;
            mean += delta / count;
            m2 += delta * (x - mean);
        }
        (count, mean, m2)
    });
    let (count, mean, m2) = parts.into_iter().fold((0.0, 0.0, 0.0), |(na, ma, sa), (nb, mb, sb)| {
        if nb == 0.0 {
            return (na, ma, sa);
        }
        let n = na + nb;
        let delta = mb - ma;
        (n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n)
    });
    let var = if count > 1.0 { m2 / (count - 1.0) } else { 0.0 };
    Ok(Estimate {
        mean,
        std_error: (var / count).sqrt(),
    })
}

/// Mean discounted return of `policy` from the initial distribution over
/// `budget.horizon` steps.
pub fn monte_carlo_value(
    mdp: &Mdp,
    policy: &StochasticPolicy,
    reward: &[f64],
    discount: f64,
    budget: &OracleBudget,
) -> Result<Estimate> {
    let m = mdp.n_actions();
    if policy.n_states() != mdp.n_states() || policy.n_actions() != m || reward.len() != mdp.n_states() * m {
        return Err(Error::invalid("policy or reward shape does not match the MDP"));
    }
    let sink = mdp.sink();
    let quiet_sink = (0..m).all(|a| reward[mdp.sa(sink, a)] == 0.0);
    monte_carlo(budget, |rng| {
        let mut s = sample(rng, mdp.init().iter().copied().enumerate(), 0);
        let mut g = 0.0;
        let mut weight = 1.0;
        for _ in 0..budget.horizon {
            if s == sink && quiet_sink {
                break;
            }
            let a = sample(rng, policy.row(s).iter().copied().enumerate(), 0);
            g += weight * reward[mdp.sa(s, a)];
            weight *= discount;
            s = sample(rng, mdp.row(s, a).iter().copied(), s);
        }
        g
    })
}

/// Probability that the chain enters `set` within `budget.horizon` steps.
pub fn monte_carlo_reach(chain: &MarkovChain, set: &[usize], budget: &OracleBudget) -> Result<Estimate> {
    let n = chain.n_states();
    let mut inside = vec![false; n];
    for &s in set {
        if s >= n {
            return Err(Error::invalid(format!("state {s} out of range")));
        }
        inside[s] = true;
    }
    monte_carlo(budget, |rng| {
        let mut s = sample(rng, chain.init().iter().copied().enumerate(), 0);
        for _ in 0..=budget.horizon {
            if inside[s] {
                return 1.0;
            }
            let row = chain.kernel(s);
            if row == [(s, 1.0)] {
                return 0.0;
            }
            s = sample(rng, row.iter().copied(), s);
        }
        0.0
    })
}

/// Worst relative error between `gradient` and central differences of
/// `objective` at `point`. Denominators are floored at `1e-8`.
pub fn finite_difference_check<F>(objective: F, gradient: &[f64], point: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    assert_eq!(gradient.len(), point.len(), "gradient and point differ in length");
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..point.len() {
        x[i] = point[i] + step;
        let up = objective(&x);
        x[i] = point[i] - step;
        let down = objective(&x);
        x[i] = point[i];
        let numeric = (up - down) / (2.0 * step);
        let err = (numeric - gradient[i]).abs() / gradient[i].abs().max(1e-8);
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    #[test]
    fn single_state_picks_the_larger_reward() {
        let mut b = MdpBuilder::indexed(2, 2);
        b.transition(0, 0, 1, 1.0).transition(0, 1, 1, 1.0);
        b.transition(1, 0, 1, 1.0).transition(1, 1, 1, 1.0);
        b.init(0, 1.0).sink(1);
        let mdp = b.build().unwrap();
        let reward = [0.3, 0.7, 0.0, 0.0];
        let best = enumerate_best_response(&mdp, &reward, 0.9, &OracleBudget::default()).unwrap();
        assert_eq!(best.policy[0], 1);
        assert!((best.value - 0.7).abs() < 1e-15);
        let zero = enumerate_best_response(&mdp, &[0.0; 4], 0.9, &OracleBudget::default()).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let mdp = crate::environments::random_mdp(12, 3, 0.9, 0).unwrap();
        let reward = vec![0.0; 36];
        let small = OracleBudget {
            max_policies: 1000,
            ..OracleBudget::default()
        };
        assert!(matches!(
            enumerate_best_response(&mdp, &reward, 0.9, &small),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn gauss_matches_a_known_system() {
        let x = gauss_solve(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(gauss_solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0], 2).is_none());
    }

    #[test]
    fn deterministic_path_is_exact() {
        // 0 -> 1 -> 2(sink), reward 1 on leaving 1.
        let mut b = MdpBuilder::indexed(3, 1);
        b.transition(0, 0, 1, 1.0)
            .transition(1, 0, 2, 1.0)
            .transition(2, 0, 2, 1.0);
        b.init(0, 1.0).sink(2);
        let mdp = b.build().unwrap();
        let pi = StochasticPolicy::uniform(3, 1);
        let budget = OracleBudget {
            rollouts: 10_000,
            ..OracleBudget::default()
        };
        let est = monte_carlo_value(&mdp, &pi, &[0.0, 1.0, 0.0], 0.9, &budget).unwrap();
        assert_eq!(est.mean, 0.9);
        assert_eq!(est.std_error, 0.0);
        let zero = monte_carlo_value(&mdp, &pi, &[0.0; 3], 0.9, &budget).unwrap();
        assert_eq!((zero.mean, zero.std_error), (0.0, 0.0));
    }

    #[test]
    fn reproducible_and_execution_independent() {
        let mdp = crate::environments::random_mdp(6, 2, 0.9, 3).unwrap();
        let pi = StochasticPolicy::uniform(6, 2);
        let reward: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        let par = OracleBudget {
            rollouts: 20_000,
            ..OracleBudget::default()
        };
        let seq = OracleBudget {
            execution: Execution::Sequential,
            ..par.clone()
        };
        let a = monte_carlo_value(&mdp, &pi, &reward, 0.9, &par).unwrap();
        let b = monte_carlo_value(&mdp, &pi, &reward, 0.9, &seq).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quadratic_gradient_is_exact() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1] * x[1];
        let p = [0.7, -1.3];
        let g = [6.0 * p[0] - 2.0 * p[1], -2.0 * p[0] + p[1]];
        assert!(finite_difference_check(f, &g, &p, 1e-3) < 1e-8);
    }

    #[test]
    fn error_shrinks_with_the_step() {
        let f = |x: &[f64]| x[0].sin() * x[1].exp();
        let p = [0.4f64, 0.2];
        let g = [p[0].cos() * p[1].exp(), p[0].sin() * p[1].exp()];
        let errors: Vec<f64> = [0.1, 1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&h| finite_difference_check(f, &g, &p, h))
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "{errors:?}");
        }
    }
}
