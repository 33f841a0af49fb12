//! Problem instances: gridworlds, the text format, shipped example instances
//! and seeded random generators.

mod fixtures;
mod format;
mod grid;
mod random;

pub use fixtures::{decoy_on_only_path, fig1_analog, fixture, grid10_analog, grid6_alt, grid6_analog, FIXTURE_NAMES};
pub use format::{parse_instance, serialize_instance};
pub use grid::{build_gridworld, Cell, Compass, GridSpec};
pub use random::{random_attack_graph, random_gridworld, random_mdp, RandomGraphSpec};

use crate::mdp::Mdp;
use crate::perception::DefenseDomain;
use crate::Result;

/// An attack-planning problem together with the defender's options.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub mdp: Mdp,
    pub domain: DefenseDomain,
    /// States where the attack is detected; informational, their rows
    /// already route to the sink.
    pub sensors: Vec<usize>,
    /// Set when the instance came from a grid description; it is then
    /// serialized in grid shorthand.
    pub grid: Option<GridSpec>,
}

impl Instance {
    pub fn from_grid(spec: GridSpec) -> Result<Instance> {
        let mdp = build_gridworld(&spec)?;
        let decoys: Vec<usize> = spec.decoys.iter().map(|&c| spec.state(c)).collect();
        let modifiable: Vec<(usize, usize)> = spec
            .modifiable
            .iter()
            .map(|&(c, d)| (spec.state(c), d.index()))
            .collect();
        let domain = DefenseDomain::new(&mdp, &decoys, &modifiable, spec.budget)?;
        let mut sensors: Vec<usize> = spec.sensors.iter().map(|&c| spec.state(c)).collect();
        sensors.sort_unstable();
        Ok(Instance {
            mdp,
            domain,
            sensors,
            grid: Some(spec),
        })
    }

    pub fn decoys(&self) -> &[usize] {
        self.domain.decoys()
    }
}
