//! Shipped example instances: a fourteen-node attack graph, 6×6 and 10×10
//! gridworlds, and a small graph whose only route to the target runs through
//! the decoy.

use num::rational::Ratio;
use num::ToPrimitive;

use super::grid::{Cell, Compass, GridSpec};
use super::Instance;
use crate::mdp::MdpBuilder;
use crate::perception::DefenseDomain;
use crate::{Error, Result};

pub const FIXTURE_NAMES: [&str; 5] = ["fig1", "grid6", "grid6_alt", "grid10", "decoy_on_only_path"];

/// Looks a fixture up by its name in [`FIXTURE_NAMES`].
pub fn fixture(name: &str) -> Result<Instance> {
    match name {
        "fig1" => fig1_analog(),
        "grid6" => grid6_analog(),
        "grid6_alt" => grid6_alt(),
        "grid10" => grid10_analog(),
        "decoy_on_only_path" => decoy_on_only_path(),
        other => Err(Error::invalid(format!(
            "unknown fixture `{other}` (known: {})",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

/// Drawn successors of each node and the index of its thick edge.
const FIG1_EDGES: [(&[usize], Option<usize>); 14] = [
    (&[1, 2, 3, 4], Some(0)),
    (&[5, 6, 8], Some(0)),
    (&[6, 7], Some(0)),
    (&[5, 7], None),
    (&[5, 7], None),
    (&[], None),
    (&[9, 10], None),
    (&[8, 9], Some(1)),
    (&[], None),
    (&[11, 13], None),
    (&[], None),
    (&[12, 13], Some(0)),
    (&[11, 13], None),
    (&[11, 12], Some(1)),
];

/// Successor distribution of `action` over `k` drawn edges: the favored
/// edge gets 7/10 and the others split the rest evenly. Action 0 favors the
/// thick edge (uniform if there is none); action `i` favors the edge `i`
/// places after it.
fn fig1_row(k: usize, thick: Option<usize>, action: usize) -> Vec<Ratio<i64>> {
    if k == 1 {
        return vec![Ratio::from_integer(1)];
    }
    if action == 0 && thick.is_none() {
        return vec![Ratio::new(1, k as i64); k];
    }
    let favored = (thick.unwrap_or(0) + action) % k;
    let rest = Ratio::new(3, 10) / Ratio::from_integer(k as i64 - 1);
    (0..k)
        .map(|j| if j == favored { Ratio::new(7, 10) } else { rest })
        .collect()
}

/// Fourteen-node attack graph with target `10`, decoys `{11, 13}`, budget 3,
/// actions `a..d`, discount 0.95.
///
/// Action `a` follows the drawn edges (thick 0.7, thin edges share the
/// rest), so `P(0, a) = {1: 0.7, 2: 0.1, 3: 0.1, 4: 0.1}`. Actions `b, c, d`
/// rotate which edge is favored. Nodes 5 and 8 have no drawn exits and fall
/// into the sink, as does the target.
pub fn fig1_analog() -> Result<Instance> {
    let names: Vec<String> = (0..14).map(|i| i.to_string()).chain(["sink".to_string()]).collect();
    let mut b = MdpBuilder::new(names, ["a", "b", "c", "d"]);
    let sink = 14;
    for (s, &(succ, thick)) in FIG1_EDGES.iter().enumerate() {
        for a in 0..4 {
            if succ.is_empty() || s == 10 {
                b.transition(s, a, sink, 1.0);
                continue;
            }
            for (&t, p) in succ.iter().zip(fig1_row(succ.len(), thick, a)) {
                b.transition(s, a, t, p.to_f64().expect("small ratio"));
            }
        }
    }
    for a in 0..4 {
        b.transition(sink, a, sink, 1.0).reward(10, a, 1.0);
    }
    b.init(0, 1.0).target(10).sink(sink).discount(0.95);
    let mdp = b.build()?;
    mdp.validate().into_result()?;
    let domain = DefenseDomain::new(&mdp, &[11, 13], &[], 3.0)?;
    Ok(Instance {
        mdp,
        domain,
        sensors: Vec::new(),
        grid: None,
    })
}

fn cells(list: &[(usize, usize)]) -> Vec<Cell> {
    list.iter().map(|&(r, c)| Cell::new(r, c)).collect()
}

fn grid6_base() -> GridSpec {
    let mut g = GridSpec::new(6, 6);
    g.init = Cell::new(2, 0);
    g.targets = vec![(Cell::new(3, 1), 1.0)];
    g.sensors = cells(&[(5, 1), (0, 5), (0, 3)]);
    g.modifiable = Compass::ALL
        .iter()
        .map(|&d| (Cell::new(4, 4), d))
        .chain([0, 1, 2].map(|c| (Cell::new(4, c), Compass::N)))
        .collect();
    g.budget = 4.0;
    g.discount = 0.95;
    g
}

/// 6×6 gridworld starting at `(2,0)` with decoys `{(1,4), (4,5)}`, budget 4,
/// and every action at `(4,4)` plus `N` at `(4,0)`, `(4,1)`, `(4,2)`
/// modifiable.
pub fn grid6_analog() -> Result<Instance> {
    let mut g = grid6_base();
    g.decoys = cells(&[(1, 4), (4, 5)]);
    Instance::from_grid(g)
}

/// [`grid6_analog`] with the decoys moved to `{(0,2), (5,3)}`.
pub fn grid6_alt() -> Result<Instance> {
    let mut g = grid6_base();
    g.decoys = cells(&[(0, 2), (5, 3)]);
    Instance::from_grid(g)
}

/// 10×10 gridworld starting at `(5,1)` with decoys `{(2,8), (6,8)}`.
pub fn grid10_analog() -> Result<Instance> {
    let mut g = GridSpec::new(10, 10);
    g.init = Cell::new(5, 1);
    g.targets = vec![(Cell::new(1, 9), 1.0), (Cell::new(8, 9), 1.0)];
    g.sensors = cells(&[(2, 2), (3, 4), (4, 4), (6, 3), (7, 5), (1, 6), (8, 6), (4, 7)]);
    g.decoys = cells(&[(2, 8), (6, 8)]);
    g.budget = 4.0;
    g.discount = 0.95;
    Instance::from_grid(g)
}

/// Small attack graph whose only way from the start to the target runs
/// through the decoy candidate; every other move runs into a sensor.
pub fn decoy_on_only_path() -> Result<Instance> {
    let mut b = MdpBuilder::new(["start", "mid", "decoy", "target", "sensor", "sink"], ["a", "b"]);
    b.transition(0, 0, 1, 1.0).transition(0, 1, 4, 1.0);
    b.transition(1, 0, 2, 1.0).transition(1, 1, 4, 1.0);
    for a in 0..2 {
        b.transition(2, a, 3, 1.0);
        b.transition(3, a, 5, 1.0).reward(3, a, 1.0);
        b.transition(4, a, 5, 1.0);
        b.transition(5, a, 5, 1.0);
    }
    b.init(0, 1.0).target(3).sink(5).discount(0.9);
    let mdp = b.build()?;
    mdp.validate().into_result()?;
    let domain = DefenseDomain::new(&mdp, &[2], &[], 3.0)?;
    Ok(Instance {
        mdp,
        domain,
        sensors: vec![4],
        grid: None,
    })
}
