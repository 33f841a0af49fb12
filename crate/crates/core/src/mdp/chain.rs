use std::collections::VecDeque;

use super::{Distribution, Mdp, StochasticPolicy};
use crate::linalg::{self, Row};
use crate::{Error, Result, PROB_TOL};

/// Policy-induced Markov chain `M_π` with the MDP's initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    kernel: Vec<Distribution>,
    init: Vec<f64>,
}

impl MarkovChain {
    pub fn new(kernel: Vec<Distribution>, init: Vec<f64>) -> Result<Self> {
        if kernel.len() != init.len() {
            return Err(Error::invalid("kernel and initial distribution differ in size"));
        }
        let n = kernel.len();
        for (s, row) in kernel.iter().enumerate() {
            if row.iter().any(|&(t, p)| t >= n || p < 0.0) {
                return Err(Error::invalid(format!("kernel row {s} is malformed")));
            }
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::invalid(format!("kernel row {s} sums to {sum}")));
            }
        }
        Ok(MarkovChain { kernel, init })
    }

    pub fn n_states(&self) -> usize {
        self.kernel.len()
    }

    pub fn kernel(&self, s: usize) -> &[(usize, f64)] {
        &self.kernel[s]
    }

    pub fn prob(&self, s: usize, next: usize) -> f64 {
        self.kernel[s].iter().filter(|(t, _)| *t == next).map(|(_, p)| p).sum()
    }

    pub fn init(&self) -> &[f64] {
        &self.init
    }

    /// Copy in which every state of `set` loops on itself.
    pub fn with_absorbing(&self, set: &[usize]) -> MarkovChain {
        let mut out = self.clone();
        for &s in set {
            out.kernel[s] = vec![(s, 1.0)];
        }
        out
    }

    pub(crate) fn rows(&self) -> &[Row] {
        &self.kernel
    }

    /// State distribution one step later.
    pub fn step(&self, dist: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; dist.len()];
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(t, p) in &self.kernel[s] {
                next[t] += mass * p;
            }
        }
        next
    }
}

/// `kernel(s)(s') = Σ_a π(s)(a)·P(s'|s,a)`.
pub fn induce_chain(mdp: &Mdp, policy: &StochasticPolicy) -> Result<MarkovChain> {
    policy.check_shape(mdp)?;
    let n = mdp.n_states();
    let m = mdp.n_actions();
    let mut kernel = Vec::with_capacity(n);
    let mut dense = vec![0.0; n];
    let mut touched = Vec::new();
    for s in 0..n {
        for a in 0..m {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            for &(t, p) in mdp.row(s, a) {
                if dense[t] == 0.0 {
                    touched.push(t);
                }
                dense[t] += w * p;
            }
        }
        touched.sort_unstable();
        let row: Distribution = touched
            .iter()
            .map(|&t| (t, dense[t]))
            .filter(|&(_, p)| p > 0.0)
            .collect();
        for &t in &touched {
            dense[t] = 0.0;
        }
        touched.clear();
        kernel.push(row);
    }
    Ok(MarkovChain {
        kernel,
        init: mdp.init().to_vec(),
    })
}

/// Discounted visitation frequencies of a policy-induced chain.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    n_actions: usize,
    pub state_occ: Vec<f64>,
    pub state_action_occ: Vec<f64>,
}

impl OccupancyMeasure {
    pub fn state(&self, s: usize) -> f64 {
        self.state_occ[s]
    }

    pub fn state_action(&self, s: usize, a: usize) -> f64 {
        self.state_action_occ[s * self.n_actions + a]
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn total_mass(&self) -> f64 {
        self.state_occ.iter().sum()
    }
}

/// Solves `ρ = ν + γ·Pᵀρ`, then splits each state's mass by the policy.
pub fn occupancy(chain: &MarkovChain, policy: &StochasticPolicy, discount: f64) -> Result<OccupancyMeasure> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::invalid(format!("discount {discount} outside (0, 1)")));
    }
    if policy.n_states() != chain.n_states() {
        return Err(Error::invalid("policy and chain differ in state count"));
    }
    let state_occ = linalg::solve_fixed_point(chain.rows(), chain.init(), discount, true)?;
    let m = policy.n_actions();
    let mut state_action_occ = vec![0.0; state_occ.len() * m];
    for (s, &rho) in state_occ.iter().enumerate() {
        for (a, p) in policy.row(s).iter().enumerate() {
            state_action_occ[s * m + a] = rho * p;
        }
    }
    Ok(OccupancyMeasure {
        n_actions: m,
        state_occ,
        state_action_occ,
    })
}

/// Probability of ever entering `set` from each state (undiscounted).
///
/// Every state of `set` must already be absorbing in `chain`.
pub fn reach_probabilities(chain: &MarkovChain, set: &[usize]) -> Result<Vec<f64>> {
    let n = chain.n_states();
    let mut in_set = vec![false; n];
    for &s in set {
        if s >= n {
            return Err(Error::invalid(format!("state {s} out of range")));
        }
        if (chain.prob(s, s) - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(format!("state {s} is not absorbing in the chain")));
        }
        in_set[s] = true;
    }
    // States with a positive-probability path into the set.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        for &(t, p) in chain.kernel(s) {
            if p > 0.0 && t != s {
                preds[t].push(s);
            }
        }
    }
    let mut can_reach = in_set.clone();
    let mut queue: VecDeque<usize> = set.iter().copied().collect();
    while let Some(t) = queue.pop_front() {
        for &s in &preds[t] {
            if !can_reach[s] {
                can_reach[s] = true;
                queue.push_back(s);
            }
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| can_reach[s] && !in_set[s]).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        local[s] = i;
    }
    let mut rows: Vec<Row> = Vec::with_capacity(unknown.len());
    let mut rhs = Vec::with_capacity(unknown.len());
    for &s in &unknown {
        let mut row = Vec::new();
        let mut b = 0.0;
        for &(t, p) in chain.kernel(s) {
            if in_set[t] {
                b += p;
            } else if can_reach[t] {
                row.push((local[t], p));
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    let solved = linalg::solve_fixed_point(&rows, &rhs, 1.0, false)?;
    let mut out = vec![0.0; n];
    for s in 0..n {
        if in_set[s] {
            out[s] = 1.0;
        } else if can_reach[s] {
            out[s] = solved[local[s]].clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Hitting probability of `set` from the chain's initial distribution.
pub fn reach_probability(chain: &MarkovChain, set: &[usize]) -> Result<f64> {
    let h = reach_probabilities(chain, set)?;
    Ok(chain
        .init()
        .iter()
        .zip(&h)
        .map(|(p, v)| p * v)
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

fn row_kl(p: &[(usize, f64)], q: &[(usize, f64)]) -> f64 {
    let mut total = 0.0;
    for &(t, pt) in p {
        if pt <= 0.0 {
            continue;
        }
        let qt: f64 = q.iter().filter(|(u, _)| *u == t).map(|(_, v)| v).sum();
        if qt <= 0.0 {
            return f64::INFINITY;
        }
        total += pt * (pt / qt).ln();
    }
    total.max(0.0)
}

/// KL divergence between the length-`horizon` path distributions of two
/// chains over the same state space, accumulated one transition at a time.
pub fn kl_divergence(chain_p: &MarkovChain, chain_q: &MarkovChain, horizon: usize) -> Result<f64> {
    let n = chain_p.n_states();
    if chain_q.n_states() != n {
        return Err(Error::invalid("chains have different state sets"));
    }
    if chain_p
        .init()
        .iter()
        .zip(chain_q.init())
        .any(|(a, b)| (a - b).abs() > PROB_TOL)
    {
        return Err(Error::invalid("chains have different initial distributions"));
    }
    let per_state: Vec<f64> = (0..n).map(|s| row_kl(chain_p.kernel(s), chain_q.kernel(s))).collect();
    let mut dist = chain_p.init().to_vec();
    let mut total = 0.0;
    for _ in 0..horizon {
        for (s, &mass) in dist.iter().enumerate() {
            if mass > 0.0 {
                if per_state[s].is_infinite() {
                    return Ok(f64::INFINITY);
                }
                total += mass * per_state[s];
            }
        }
        dist = chain_p.step(&dist);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::MdpBuilder;

    fn two_state(kernel0: Distribution) -> MarkovChain {
        MarkovChain::new(vec![kernel0, vec![(1, 1.0)]], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn uniform_mixture_kernel() {
        let mut b = MdpBuilder::indexed(3, 2);
        b.transition(0, 0, 1, 1.0).transition(0, 1, 2, 1.0);
        for s in 1..3 {
            for a in 0..2 {
                b.transition(s, a, 2, 1.0);
            }
        }
        b.init(0, 1.0).sink(2);
        let mdp = b.build().unwrap();
        let chain = induce_chain(&mdp, &StochasticPolicy::uniform(3, 2)).unwrap();
        assert_eq!(chain.kernel(0), &[(1, 0.5), (2, 0.5)]);
    }

    #[test]
    fn induce_rejects_short_policy() {
        let mut b = MdpBuilder::indexed(2, 1);
        b.transition(0, 0, 1, 1.0).transition(1, 0, 1, 1.0).init(0, 1.0).sink(1);
        let mdp = b.build().unwrap();
        assert!(induce_chain(&mdp, &StochasticPolicy::uniform(1, 1)).is_err());
    }

    #[test]
    fn occupancy_of_single_absorbing_state() {
        let chain = MarkovChain::new(vec![vec![(0, 1.0)]], vec![1.0]).unwrap();
        let occ = occupancy(&chain, &StochasticPolicy::uniform(1, 1), 0.9).unwrap();
        assert!((occ.state(0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn occupancy_two_state_geometric_sum() {
        let chain = two_state(vec![(1, 1.0)]);
        let occ = occupancy(&chain, &StochasticPolicy::uniform(2, 1), 0.5).unwrap();
        assert!((occ.state(0) - 1.0).abs() < 1e-12);
        assert!((occ.state(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reach_direct_and_coin() {
        let direct = two_state(vec![(1, 1.0)]);
        assert!((reach_probability(&direct, &[1]).unwrap() - 1.0).abs() < 1e-12);
        let coin = MarkovChain::new(
            vec![vec![(1, 0.5), (2, 0.5)], vec![(1, 1.0)], vec![(2, 1.0)]],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!((reach_probability(&coin, &[1]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reach_rejects_non_absorbing_set() {
        let chain = two_state(vec![(1, 1.0)]);
        assert!(reach_probability(&chain, &[0]).is_err());
    }

    #[test]
    fn reach_handles_closed_loops_outside_the_set() {
        // 0 -> {1, 2}; 1 loops with 3 forever; 2 is the set.
        let chain = MarkovChain::new(
            vec![vec![(1, 0.3), (2, 0.7)], vec![(3, 1.0)], vec![(2, 1.0)], vec![(1, 1.0)]],
            vec![1.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        assert!((reach_probability(&chain, &[2]).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn kl_identical_is_zero() {
        let chain = two_state(vec![(0, 0.5), (1, 0.5)]);
        for t in [0, 1, 10, 200] {
            assert_eq!(kl_divergence(&chain, &chain, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn kl_one_step_matches_path_enumeration() {
        let p = two_state(vec![(0, 0.5), (1, 0.5)]);
        let q = two_state(vec![(0, 0.9), (1, 0.1)]);
        let expected = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        let got = kl_divergence(&p, &q, 1).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.5108).abs() < 1e-4);
    }

    #[test]
    fn kl_support_failure_is_infinite() {
        let p = two_state(vec![(0, 0.5), (1, 0.5)]);
        let q = two_state(vec![(1, 1.0)]);
        assert!(kl_divergence(&p, &q, 3).unwrap().is_infinite());
        // q's extra support is harmless in the other direction
        assert!(kl_divergence(&q, &p, 3).unwrap().is_finite());
    }
}
