//! Seeded random instances for property tests and scaling runs.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{Cell, Compass, GridSpec};
use super::Instance;
use crate::mdp::{Mdp, MdpBuilder};
use crate::perception::DefenseDomain;
use crate::{Error, Result};

/// Parameters of [`random_attack_graph`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomGraphSpec {
    /// Total state count, sink included.
    pub n_states: usize,
    pub n_actions: usize,
    /// Successors per `(state, action)`.
    pub branching: usize,
    pub seed: u64,
    pub decoy_count: usize,
    pub target_count: usize,
    pub discount: f64,
}

impl RandomGraphSpec {
    pub fn new(n_states: usize, seed: u64) -> Self {
        RandomGraphSpec {
            n_states,
            n_actions: 3,
            branching: 3,
            seed,
            decoy_count: 2,
            target_count: 1,
            discount: 0.95,
        }
    }
}

fn random_row(rng: &mut ChaCha8Rng, succ: &[usize]) -> Vec<(usize, f64)> {
    let w: Vec<f64> = succ.iter().map(|_| 0.1 + rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    succ.iter().zip(&w).map(|(&t, x)| (t, x / total)).collect()
}

/// Random attack graph. State 0 is the start and the last state the sink;
/// targets reward every action with a value in `[0.5, 1.5]`. A random tree
/// rooted at the start is woven into the edges so every state is reachable,
/// including all targets and decoys. The budget is one unit per decoy plus
/// one, and a quarter of the free states get one modifiable action.
pub fn random_attack_graph(spec: &RandomGraphSpec) -> Result<Instance> {
    let n = spec.n_states;
    let m = spec.n_actions;
    if n < 4 {
        return Err(Error::invalid("a random attack graph needs at least 4 states"));
    }
    if m == 0 || spec.branching == 0 {
        return Err(Error::invalid("need at least one action and one successor"));
    }
    if spec.target_count == 0 || spec.target_count + spec.decoy_count > n - 2 {
        return Err(Error::invalid(format!(
            "{} targets and {} decoys do not fit in {} states besides start and sink",
            spec.target_count,
            spec.decoy_count,
            n - 2
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sink = n - 1;
    let mut inner: Vec<usize> = (1..sink).collect();
    inner.shuffle(&mut rng);
    let targets: Vec<usize> = inner[..spec.target_count].to_vec();
    let decoys: Vec<usize> = inner[spec.target_count..spec.target_count + spec.decoy_count].to_vec();
    let is_target = |s: usize| targets.contains(&s);

    // Attach each state below a random earlier non-target state.
    let mut order: Vec<usize> = (1..sink).collect();
    order.shuffle(&mut rng);
    let mut placed = vec![0usize];
    let mut tree: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in &order {
        let parent = *placed.choose(&mut rng).expect("start is always placed");
        tree[parent].push(v);
        if !is_target(v) {
            placed.push(v);
        }
    }

    let names: Vec<String> = (0..sink).map(|i| format!("s{i}")).chain(["sink".to_string()]).collect();
    let actions: Vec<String> = (0..m).map(|a| format!("a{a}")).collect();
    let mut b = MdpBuilder::new(names, actions);
    let k = spec.branching.min(n);
    for (s, children) in tree.iter().enumerate() {
        for a in 0..m {
            if s == sink || is_target(s) {
                b.transition(s, a, sink, 1.0);
                continue;
            }
            let mut succ: Vec<usize> = index::sample(&mut rng, n, k).into_vec();
            for (i, &child) in children.iter().enumerate() {
                if i % m == a && !succ.contains(&child) {
                    succ.push(child);
                }
            }
            succ.sort_unstable();
            b.row(s, a, random_row(&mut rng, &succ));
        }
    }
    for &t in &targets {
        let r = 0.5 + rng.gen::<f64>();
        b.target(t);
        for a in 0..m {
            b.reward(t, a, r);
        }
    }
    b.init(0, 1.0).sink(sink).discount(spec.discount);
    let mdp = b.build()?;
    mdp.validate().into_result()?;

    let free: Vec<usize> = (0..sink).filter(|s| !is_target(*s) && !decoys.contains(s)).collect();
    let picks = index::sample(&mut rng, free.len(), free.len() / 4);
    let modifiable: Vec<(usize, usize)> = picks.iter().map(|i| (free[i], rng.gen_range(0..m))).collect();
    let domain = DefenseDomain::new(&mdp, &decoys, &modifiable, spec.decoy_count as f64 + 1.0)?;
    Ok(Instance {
        mdp,
        domain,
        sensors: Vec::new(),
        grid: None,
    })
}

/// Random gridworld layout for scaling runs: the attacker starts in the
/// middle of the left column, one unit-reward target and two decoys sit in
/// the right third, about one cell in ten is a sensor, four random
/// `(cell, direction)` pairs are modifiable and the budget is 4.
pub fn random_gridworld(rows: usize, cols: usize, seed: u64) -> Result<Instance> {
    if rows < 3 || cols < 3 {
        return Err(Error::invalid(format!(
            "random gridworld needs at least 3x3 cells, got {rows}x{cols}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = GridSpec::new(rows, cols);
    spec.init = Cell::new(rows / 2, 0);
    let right: Vec<Cell> = (0..rows)
        .flat_map(|r| (cols - cols / 3..cols).map(move |c| Cell::new(r, c)))
        .collect();
    let picks = index::sample(&mut rng, right.len(), 3);
    spec.targets = vec![(right[picks.index(0)], 1.0)];
    spec.decoys = vec![right[picks.index(1)], right[picks.index(2)]];

    let near_start = |c: Cell| c.row.abs_diff(spec.init.row) + c.col.abs_diff(spec.init.col) <= 1;
    let mut free: Vec<Cell> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| Cell::new(r, c)))
        .filter(|&c| !near_start(c) && c != spec.targets[0].0 && !spec.decoys.contains(&c))
        .collect();
    free.shuffle(&mut rng);
    let n_sensors = rows * cols / 10;
    spec.sensors = free[..n_sensors].to_vec();
    let rest = &free[n_sensors..];
    spec.modifiable = index::sample(&mut rng, rest.len(), 4.min(rest.len()))
        .iter()
        .map(|i| (rest[i], Compass::ALL[rng.gen_range(0..4)]))
        .collect();
    spec.budget = 4.0;
    Instance::from_grid(spec)
}

/// Dense random MDP over `n_states` states (the last one the sink) with one
/// unit-reward target; for solver cross-checks under arbitrary rewards.
pub fn random_mdp(n_states: usize, n_actions: usize, discount: f64, seed: u64) -> Result<Mdp> {
    if n_states < 3 || n_actions == 0 {
        return Err(Error::invalid("random MDP needs at least 3 states and 1 action"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sink = n_states - 1;
    let target = n_states - 2;
    let mut b = MdpBuilder::indexed(n_states, n_actions);
    let all: Vec<usize> = (0..n_states).collect();
    for s in 0..n_states {
        for a in 0..n_actions {
            if s == sink || s == target {
                b.transition(s, a, sink, 1.0);
            } else {
                b.row(s, a, random_row(&mut rng, &all));
            }
        }
    }
    for a in 0..n_actions {
        b.reward(target, a, 1.0);
    }
    b.init(0, 1.0).target(target).sink(sink).discount(discount);
    b.build()
}
