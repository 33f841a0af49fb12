//! Stochastic gridworlds with compass moves and lateral slip.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num::{BigRational, One, ToPrimitive, Zero};

use crate::mdp::{Mdp, MdpBuilder};
use crate::{Error, Result};

/// A grid cell, written `r,c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

impl FromStr for Cell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("`{s}` is not a cell (expected `row,col`)"));
        let (r, c) = s.split_once(',').ok_or_else(bad)?;
        Ok(Cell::new(
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Compass {
    N,
    S,
    E,
    W,
}

impl Compass {
    /// Action order of every gridworld MDP.
    pub const ALL: [Compass; 4] = [Compass::N, Compass::S, Compass::E, Compass::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Compass::N => "N",
            Compass::S => "S",
            Compass::E => "E",
            Compass::W => "W",
        }
    }

    /// The two directions a move can slip into.
    pub fn laterals(self) -> [Compass; 2] {
        match self {
            Compass::N | Compass::S => [Compass::W, Compass::E],
            Compass::E | Compass::W => [Compass::N, Compass::S],
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Compass::N => (-1, 0),
            Compass::S => (1, 0),
            Compass::E => (0, 1),
            Compass::W => (0, -1),
        }
    }
}

impl FromStr for Compass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Compass::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown compass action `{s}`")))
    }
}

/// Everything needed to build a gridworld instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Slip probability to each lateral neighbour.
    pub alpha: f64,
    pub init: Cell,
    /// Cells where the attack is detected and fails.
    pub sensors: Vec<Cell>,
    /// Real targets with the attacker's reward for entering them.
    pub targets: Vec<(Cell, f64)>,
    pub decoys: Vec<Cell>,
    pub modifiable: Vec<(Cell, Compass)>,
    pub budget: f64,
    pub discount: f64,
}

impl GridSpec {
    /// Empty `rows × cols` grid with `α = 0.1`, `γ = 0.95`, start `(0,0)`.
    pub fn new(rows: usize, cols: usize) -> Self {
        GridSpec {
            rows,
            cols,
            alpha: 0.1,
            init: Cell::new(0, 0),
            sensors: Vec::new(),
            targets: Vec::new(),
            decoys: Vec::new(),
            modifiable: Vec::new(),
            budget: 0.0,
            discount: 0.95,
        }
    }

    pub fn n_states(&self) -> usize {
        self.rows * self.cols + 1
    }

    pub fn state(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn cell(&self, state: usize) -> Option<Cell> {
        (state < self.rows * self.cols).then(|| Cell::new(state / self.cols, state % self.cols))
    }

    pub fn sink(&self) -> usize {
        self.rows * self.cols
    }

    fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn check(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("grid needs at least one row and one column"));
        }
        if !(0.0..0.5).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "slip probability {} outside [0, 0.5)",
                self.alpha
            )));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::invalid(format!("discount {} outside (0, 1)", self.discount)));
        }
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(Error::invalid(format!(
                "budget {} must be finite and nonnegative",
                self.budget
            )));
        }
        let named = std::iter::once(("initial", self.init))
            .chain(self.sensors.iter().map(|&c| ("sensor", c)))
            .chain(self.targets.iter().map(|&(c, _)| ("target", c)))
            .chain(self.decoys.iter().map(|&c| ("decoy", c)))
            .chain(self.modifiable.iter().map(|&(c, _)| ("modifiable", c)));
        for (role, cell) in named {
            if !self.contains(cell) {
                return Err(Error::invalid(format!(
                    "{role} cell ({cell}) outside the {}x{} grid",
                    self.rows, self.cols
                )));
            }
        }
        let mut role_of = std::collections::BTreeMap::new();
        let roles = self
            .sensors
            .iter()
            .map(|&c| ("sensor", c))
            .chain(self.targets.iter().map(|&(c, _)| ("target", c)))
            .chain(self.decoys.iter().map(|&c| ("decoy", c)));
        for (role, cell) in roles {
            if let Some(prev) = role_of.insert(cell, role) {
                return Err(Error::invalid(format!("cell ({cell}) is both {prev} and {role}")));
            }
        }
        if let Some(role) = role_of.get(&self.init) {
            return Err(Error::invalid(format!("initial cell ({}) is a {role}", self.init)));
        }
        for &(cell, r) in &self.targets {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("target ({cell}) has invalid reward {r}")));
            }
        }
        let mut seen = BTreeSet::new();
        for &(cell, dir) in &self.modifiable {
            if !seen.insert((cell, dir)) {
                return Err(Error::invalid(format!(
                    "modifiable pair ({cell}) {} listed twice",
                    dir.name()
                )));
            }
            if let Some(role) = role_of.get(&cell) {
                return Err(Error::invalid(format!(
                    "modifiable pair ({cell}) {} sits on a {role}",
                    dir.name()
                )));
            }
        }
        Ok(())
    }

    fn neighbour(&self, cell: Cell, dir: Compass) -> Cell {
        let (dr, dc) = dir.delta();
        let r = cell.row as isize + dr;
        let c = cell.col as isize + dc;
        if r < 0 || c < 0 || r >= self.rows as isize || c >= self.cols as isize {
            cell
        } else {
            Cell::new(r as usize, c as usize)
        }
    }

    /// Exact successor distribution of a move from a free cell; blocked
    /// moves leave their mass on `cell`.
    pub fn move_distribution(&self, cell: Cell, dir: Compass) -> Result<Vec<(Cell, BigRational)>> {
        let alpha = BigRational::from_float(self.alpha)
            .ok_or_else(|| Error::invalid("slip probability is not a finite number"))?;
        let two = BigRational::from_integer(2.into());
        let mut parts = vec![(self.neighbour(cell, dir), BigRational::one() - &two * &alpha)];
        for lateral in dir.laterals() {
            parts.push((self.neighbour(cell, lateral), alpha.clone()));
        }
        let mut merged: Vec<(Cell, BigRational)> = Vec::new();
        for (c, p) in parts {
            match merged.iter_mut().find(|(m, _)| *m == c) {
                Some((_, q)) => *q += p,
                None => merged.push((c, p)),
            }
        }
        merged.retain(|(_, p)| !p.is_zero());
        merged.sort_by_key(|&(c, _)| c);
        let total: BigRational = merged.iter().map(|(_, p)| p.clone()).sum();
        if !total.is_one() {
            return Err(Error::Numerical(format!(
                "move ({cell}) {} does not conserve mass",
                dir.name()
            )));
        }
        Ok(merged)
    }
}

/// Builds the gridworld MDP: states are cells in row-major order named
/// `r,c`, followed by `sink`; actions are `N, S, E, W`.
pub fn build_gridworld(spec: &GridSpec) -> Result<Mdp> {
    spec.check()?;
    let names: Vec<String> = (0..spec.rows * spec.cols)
        .map(|s| spec.cell(s).map(|c| c.to_string()).unwrap_or_default())
        .chain(std::iter::once("sink".to_string()))
        .collect();
    let mut b = MdpBuilder::new(names, Compass::ALL.map(Compass::name));
    let sink = spec.sink();
    let stops: BTreeSet<Cell> = spec
        .sensors
        .iter()
        .copied()
        .chain(spec.targets.iter().map(|&(c, _)| c))
        .collect();
    for s in 0..sink {
        let cell = spec.cell(s).expect("state below sink is a cell");
        for dir in Compass::ALL {
            let a = dir.index();
            if stops.contains(&cell) {
                b.transition(s, a, sink, 1.0);
                continue;
            }
            for (next, p) in spec.move_distribution(cell, dir)? {
                let p = p
                    .to_f64()
                    .ok_or_else(|| Error::Numerical("probability not representable".into()))?;
                b.transition(s, a, spec.state(next), p);
            }
        }
    }
    for a in 0..4 {
        b.transition(sink, a, sink, 1.0);
    }
    for &(cell, r) in &spec.targets {
        let s = spec.state(cell);
        b.target(s);
        for a in 0..4 {
            b.reward(s, a, r);
        }
    }
    b.init(spec.state(spec.init), 1.0).sink(sink).discount(spec.discount);
    let mdp = b.build()?;
    mdp.validate().into_result()?;
    Ok(mdp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        let mut g = GridSpec::new(6, 6);
        g.targets.push((Cell::new(0, 5), 1.0));
        g.sensors.push(Cell::new(3, 3));
        g
    }

    fn row(mdp: &Mdp, cell: &str, dir: Compass) -> Vec<(String, f64)> {
        let s = mdp.state_index(cell).unwrap();
        mdp.row(s, dir.index())
            .iter()
            .map(|&(t, p)| (mdp.state_name(t).to_string(), p))
            .collect()
    }

    #[test]
    fn interior_north_slips_west_and_east() {
        let mdp = build_gridworld(&grid()).unwrap();
        let r = row(&mdp, "2,2", Compass::N);
        assert_eq!(r, vec![("1,2".into(), 0.8), ("2,1".into(), 0.1), ("2,3".into(), 0.1)]);
    }

    #[test]
    fn corner_folds_blocked_mass() {
        let mdp = build_gridworld(&grid()).unwrap();
        let r = row(&mdp, "0,0", Compass::N);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].0, "0,0");
        assert!((r[0].1 - 0.9).abs() < 1e-15);
        assert_eq!(r[1], ("0,1".into(), 0.1));
    }

    #[test]
    fn zero_slip_is_deterministic() {
        let mut g = grid();
        g.alpha = 0.0;
        let mdp = build_gridworld(&g).unwrap();
        for s in 0..mdp.n_states() {
            for a in 0..4 {
                assert_eq!(mdp.row(s, a).len(), 1);
            }
        }
    }

    #[test]
    fn sensors_and_targets_route_to_sink() {
        let mdp = build_gridworld(&grid()).unwrap();
        assert_eq!(mdp.n_states(), 37);
        for cell in ["3,3", "0,5"] {
            let s = mdp.state_index(cell).unwrap();
            for a in 0..4 {
                assert_eq!(mdp.row(s, a), &[(36, 1.0)]);
            }
        }
        assert_eq!(mdp.reward()[mdp.sa(5, 0)], 1.0);
        assert!(mdp.validate().is_valid());
    }

    #[test]
    fn exact_mass_for_awkward_alpha() {
        let mut g = grid();
        g.alpha = 0.3333333333333333;
        for s in 0..36 {
            for dir in Compass::ALL {
                g.move_distribution(g.cell(s).unwrap(), dir).unwrap();
            }
        }
    }

    #[test]
    fn malformed_specs_name_the_cell() {
        let mut g = grid();
        g.decoys.push(Cell::new(6, 1));
        let err = build_gridworld(&g).unwrap_err().to_string();
        assert!(err.contains("6,1"), "{err}");

        let mut g = grid();
        g.decoys.push(Cell::new(3, 3));
        let err = build_gridworld(&g).unwrap_err().to_string();
        assert!(err.contains("3,3") && err.contains("sensor"), "{err}");

        let mut g = grid();
        g.modifiable.push((Cell::new(0, 5), Compass::S));
        assert!(build_gridworld(&g).is_err());

        let mut g = grid();
        g.alpha = 0.5;
        assert!(build_gridworld(&g).is_err());
    }

    #[test]
    fn cell_and_compass_parse() {
        assert_eq!("4,5".parse::<Cell>().unwrap(), Cell::new(4, 5));
        assert!("4;5".parse::<Cell>().is_err());
        assert_eq!("E".parse::<Compass>().unwrap(), Compass::E);
        assert!("NE".parse::<Compass>().is_err());
    }
}
