//! Line-oriented instance format.
//!
//! One record per line, whitespace separated, `#` starts a comment:
//!
//! ```text
//! GAMMA 0.95
//! ACTION a
//! STATE s0
//! STATE goal
//! STATE sink
//! SINK sink
//! INIT s0 1
//! TRANS s0 a goal 1
//! TRANS goal a sink 1
//! TRANS sink a sink 1
//! TARGET goal * 1      # `*` sets the reward for every action
//! SENSOR <state>
//! DECOY <state>
//! MODIFIABLE <state> <action>
//! BUDGET 3
//! ```
//!
//! A file containing `GRID <rows> <cols>` is a gridworld instead: it may use
//! `ALPHA`, `GAMMA`, `INIT`, `TARGET <cell> * <reward>`, `SENSOR`, `DECOY`,
//! `MODIFIABLE <cell> <N|S|E|W>` and `BUDGET`, with cells written `r,c`,
//! and the transitions are generated.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::grid::{Cell, Compass, GridSpec};
use super::Instance;
use crate::mdp::{MdpBuilder, Violation};
use crate::perception::DefenseDomain;
use crate::{Error, Result, PROB_TOL};

struct Record<'a> {
    line: usize,
    keyword: &'a str,
    args: Vec<&'a str>,
}

impl<'a> Record<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn expect_args(&self, n: usize) -> Result<()> {
        if self.args.len() == n {
            Ok(())
        } else {
            Err(self.err(format!(
                "{} takes {n} argument(s), found {}",
                self.keyword,
                self.args.len()
            )))
        }
    }

    fn number(&self, i: usize) -> Result<f64> {
        let raw = self.args[i];
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(format!("`{raw}` is not a finite number"))),
        }
    }

    fn cell(&self, i: usize, spec: &GridSpec) -> Result<Cell> {
        let cell: Cell = self.args[i].parse().map_err(|e: Error| self.err(e.to_string()))?;
        if cell.row >= spec.rows || cell.col >= spec.cols {
            return Err(self.err(format!("cell ({cell}) outside the {}x{} grid", spec.rows, spec.cols)));
        }
        Ok(cell)
    }
}

fn records(text: &str) -> Vec<Record<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("");
            let mut words = content.split_whitespace();
            let keyword = words.next()?;
            Some(Record {
                line: i + 1,
                keyword,
                args: words.collect(),
            })
        })
        .collect()
}

/// Parses an instance; every error carries the offending line number.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let recs = records(text);
    if recs.iter().any(|r| r.keyword == "GRID") {
        parse_grid(&recs)
    } else {
        parse_explicit(&recs, text.lines().count().max(1))
    }
}

fn once<T>(slot: &mut Option<(T, usize)>, rec: &Record<'_>, value: T) -> Result<()> {
    if let Some((_, prev)) = slot {
        return Err(rec.err(format!("{} already given on line {prev}", rec.keyword)));
    }
    *slot = Some((value, rec.line));
    Ok(())
}

fn parse_grid(recs: &[Record<'_>]) -> Result<Instance> {
    let grid_rec = recs.iter().find(|r| r.keyword == "GRID").expect("caller checked");
    grid_rec.expect_args(2)?;
    let dim = |i: usize| -> Result<usize> {
        match grid_rec.args[i].parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(grid_rec.err(format!("`{}` is not a positive grid size", grid_rec.args[i]))),
        }
    };
    let mut spec = GridSpec::new(dim(0)?, dim(1)?);
    let mut grid_seen = false;
    let mut alpha = None;
    let mut gamma = None;
    let mut budget = None;
    let mut init = None;
    let mut roles: BTreeMap<Cell, (&str, usize)> = BTreeMap::new();
    let mut pairs = BTreeSet::new();

    for rec in recs {
        let mut claim = |cell: Cell, role: &'static str| -> Result<()> {
            if let Some((prev, line)) = roles.insert(cell, (role, rec.line)) {
                return Err(rec.err(format!("cell ({cell}) already declared {prev} on line {line}")));
            }
            Ok(())
        };
        match rec.keyword {
            "GRID" => {
                if grid_seen {
                    return Err(rec.err("GRID given twice"));
                }
                grid_seen = true;
            }
            "ALPHA" => {
                rec.expect_args(1)?;
                let a = rec.number(0)?;
                if !(0.0..0.5).contains(&a) {
                    return Err(rec.err(format!("slip probability {a} outside [0, 0.5)")));
                }
                once(&mut alpha, rec, a)?;
            }
            "GAMMA" => {
                rec.expect_args(1)?;
                let g = rec.number(0)?;
                if !(g > 0.0 && g < 1.0) {
                    return Err(rec.err(format!("discount {g} outside (0, 1)")));
                }
                once(&mut gamma, rec, g)?;
            }
            "BUDGET" => {
                rec.expect_args(1)?;
                let h = rec.number(0)?;
                if h < 0.0 {
                    return Err(rec.err("budget must be nonnegative"));
                }
                once(&mut budget, rec, h)?;
            }
            "INIT" => {
                rec.expect_args(2)?;
                let cell = rec.cell(0, &spec)?;
                if (rec.number(1)? - 1.0).abs() > PROB_TOL {
                    return Err(rec.err("a grid starts in a single cell with probability 1"));
                }
                once(&mut init, rec, cell)?;
            }
            "TARGET" => {
                rec.expect_args(3)?;
                let cell = rec.cell(0, &spec)?;
                if rec.args[1] != "*" {
                    return Err(rec.err("grid targets reward every action; write `*` for the action"));
                }
                let r = rec.number(2)?;
                if r < 0.0 {
                    return Err(rec.err("target reward must be nonnegative"));
                }
                claim(cell, "target")?;
                spec.targets.push((cell, r));
            }
            "SENSOR" | "DECOY" => {
                rec.expect_args(1)?;
                let cell = rec.cell(0, &spec)?;
                if rec.keyword == "SENSOR" {
                    claim(cell, "sensor")?;
                    spec.sensors.push(cell);
                } else {
                    claim(cell, "decoy")?;
                    spec.decoys.push(cell);
                }
            }
            "MODIFIABLE" => {
                rec.expect_args(2)?;
                let cell = rec.cell(0, &spec)?;
                let dir: Compass = rec.args[1].parse().map_err(|e: Error| rec.err(e.to_string()))?;
                if !pairs.insert((cell, dir)) {
                    return Err(rec.err(format!("modifiable pair ({cell}) {} listed twice", dir.name())));
                }
                spec.modifiable.push((cell, dir));
            }
            "STATE" | "ACTION" | "TRANS" | "SINK" => {
                return Err(rec.err(format!("{} is not allowed in a GRID instance", rec.keyword)));
            }
            other => return Err(rec.err(format!("unknown keyword `{other}`"))),
        }
    }

    let (start, init_line) = init.ok_or_else(|| grid_rec.err("grid instance without INIT"))?;
    if let Some((role, _)) = roles.get(&start) {
        return Err(Error::parse(init_line, format!("initial cell ({start}) is a {role}")));
    }
    let pair_lines: HashMap<(Cell, Compass), usize> = recs
        .iter()
        .filter(|r| r.keyword == "MODIFIABLE")
        .filter_map(|r| Some(((r.args[0].parse().ok()?, r.args[1].parse().ok()?), r.line)))
        .collect();
    for &(cell, dir) in &spec.modifiable {
        if let Some((role, _)) = roles.get(&cell) {
            return Err(Error::parse(
                pair_lines[&(cell, dir)],
                format!("modifiable pair ({cell}) {} sits on a {role}", dir.name()),
            ));
        }
    }
    spec.init = start;
    if let Some((a, _)) = alpha {
        spec.alpha = a;
    }
    if let Some((g, _)) = gamma {
        spec.discount = g;
    }
    spec.budget = budget.map_or(0.0, |(h, _)| h);
    Instance::from_grid(spec).map_err(|e| grid_rec.err(e.to_string()))
}

fn valid_name(name: &str) -> bool {
    name != "*" && !name.contains('#')
}

fn parse_explicit(recs: &[Record<'_>], last_line: usize) -> Result<Instance> {
    let mut gamma = None;
    let mut budget = None;
    let mut sink = None;
    let mut actions: Vec<String> = Vec::new();
    let mut action_idx: HashMap<&str, usize> = HashMap::new();
    let mut states: Vec<String> = Vec::new();
    let mut state_idx: HashMap<&str, usize> = HashMap::new();
    let mut state_line: Vec<usize> = Vec::new();
    let mut init: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    let mut trans: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    let mut row_line: HashMap<(usize, usize), usize> = HashMap::new();
    let mut seen_trans: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut targets: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rewards: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    let mut sensors: Vec<(usize, usize)> = Vec::new();
    let mut decoys: Vec<(usize, usize)> = Vec::new();
    let mut modifiable: Vec<((usize, usize), usize)> = Vec::new();

    let state_of = |rec: &Record<'_>, i: usize, idx: &HashMap<&str, usize>| -> Result<usize> {
        idx.get(rec.args[i])
            .copied()
            .ok_or_else(|| rec.err(format!("undeclared state `{}`", rec.args[i])))
    };
    let action_of = |rec: &Record<'_>, i: usize, idx: &HashMap<&str, usize>| -> Result<usize> {
        idx.get(rec.args[i])
            .copied()
            .ok_or_else(|| rec.err(format!("undeclared action `{}`", rec.args[i])))
    };

    for rec in recs {
        match rec.keyword {
            "GAMMA" => {
                rec.expect_args(1)?;
                let g = rec.number(0)?;
                if !(g > 0.0 && g < 1.0) {
                    return Err(rec.err(format!("discount {g} outside (0, 1)")));
                }
                once(&mut gamma, rec, g)?;
            }
            "BUDGET" => {
                rec.expect_args(1)?;
                let h = rec.number(0)?;
                if h < 0.0 {
                    return Err(rec.err("budget must be nonnegative"));
                }
                once(&mut budget, rec, h)?;
            }
            "ACTION" => {
                rec.expect_args(1)?;
                let name = rec.args[0];
                if !valid_name(name) || action_idx.insert(name, actions.len()).is_some() {
                    return Err(rec.err(format!("duplicate or invalid action name `{name}`")));
                }
                actions.push(name.to_string());
            }
            "STATE" => {
                rec.expect_args(1)?;
                let name = rec.args[0];
                if !valid_name(name) || state_idx.insert(name, states.len()).is_some() {
                    return Err(rec.err(format!("duplicate or invalid state name `{name}`")));
                }
                states.push(name.to_string());
                state_line.push(rec.line);
            }
            "SINK" => {
                rec.expect_args(1)?;
                let s = state_of(rec, 0, &state_idx)?;
                once(&mut sink, rec, s)?;
            }
            "INIT" => {
                rec.expect_args(2)?;
                let s = state_of(rec, 0, &state_idx)?;
                let p = rec.number(1)?;
                if p < 0.0 {
                    return Err(rec.err("negative initial probability"));
                }
                if init.insert(s, (p, rec.line)).is_some() {
                    return Err(rec.err(format!("duplicate INIT for `{}`", rec.args[0])));
                }
            }
            "TRANS" => {
                rec.expect_args(4)?;
                let s = state_of(rec, 0, &state_idx)?;
                let a = action_of(rec, 1, &action_idx)?;
                let t = state_of(rec, 2, &state_idx)?;
                let p = rec.number(3)?;
                if p < 0.0 {
                    return Err(rec.err("negative transition probability"));
                }
                if let Some(prev) = seen_trans.insert((s, a, t), rec.line) {
                    return Err(rec.err(format!(
                        "duplicate transition {} {} {} (first on line {prev})",
                        rec.args[0], rec.args[1], rec.args[2]
                    )));
                }
                trans.entry((s, a)).or_default().push((t, p));
                row_line.insert((s, a), rec.line);
            }
            "TARGET" => {
                rec.expect_args(3)?;
                let s = state_of(rec, 0, &state_idx)?;
                let r = rec.number(2)?;
                if r < 0.0 {
                    return Err(rec.err("target reward must be nonnegative"));
                }
                let acts: Vec<usize> = if rec.args[1] == "*" {
                    (0..actions.len()).collect()
                } else {
                    vec![action_of(rec, 1, &action_idx)?]
                };
                for a in acts {
                    if let Some((_, prev)) = rewards.insert((s, a), (r, rec.line)) {
                        return Err(rec.err(format!("reward for this target action already set on line {prev}")));
                    }
                }
                targets.entry(s).or_insert(rec.line);
            }
            "SENSOR" => {
                rec.expect_args(1)?;
                sensors.push((state_of(rec, 0, &state_idx)?, rec.line));
            }
            "DECOY" => {
                rec.expect_args(1)?;
                decoys.push((state_of(rec, 0, &state_idx)?, rec.line));
            }
            "MODIFIABLE" => {
                rec.expect_args(2)?;
                let s = state_of(rec, 0, &state_idx)?;
                let a = action_of(rec, 1, &action_idx)?;
                modifiable.push(((s, a), rec.line));
            }
            "ALPHA" => return Err(rec.err("ALPHA is only valid in a GRID instance")),
            other => return Err(rec.err(format!("unknown keyword `{other}`"))),
        }
    }

    let n = states.len();
    let m = actions.len();
    if n == 0 || m == 0 {
        return Err(Error::parse(last_line, "instance declares no states or no actions"));
    }
    let (sink, sink_line) = sink.ok_or_else(|| Error::parse(last_line, "no SINK record"))?;

    let mut b = MdpBuilder::new(states.clone(), actions.clone());
    for s in 0..n {
        for a in 0..m {
            let Some(row) = trans.get(&(s, a)) else {
                return Err(Error::parse(
                    state_line[s],
                    format!("state `{}` has no transitions under action `{}`", states[s], actions[a]),
                ));
            };
            let sum: f64 = row.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::parse(
                    row_line[&(s, a)],
                    format!("transition row ({}, {}) sums to {sum}", states[s], actions[a]),
                ));
            }
            b.row(s, a, row.clone());
        }
    }
    for (&s, &(p, _)) in &init {
        b.init(s, p);
    }
    for &s in targets.keys() {
        b.target(s);
    }
    for (&(s, a), &(r, _)) in &rewards {
        b.reward(s, a, r);
    }
    if let Some((g, _)) = gamma {
        b.discount(g);
    }
    b.sink(sink);
    let mdp = b.build().map_err(|e| Error::parse(last_line, e.to_string()))?;
    if let Some(v) = mdp.validate().violations.first() {
        let line = match *v {
            Violation::RowSum { state, action, .. } | Violation::NegativeProbability { state, action } => {
                row_line[&(state, action)]
            }
            Violation::TargetNotTerminating { state, .. } | Violation::RewardSupport { state, .. } => {
                targets.get(&state).copied().unwrap_or(state_line[state])
            }
            Violation::InitDistribution { .. } => init.values().map(|&(_, l)| l).max().unwrap_or(last_line),
            Violation::SinkNotAbsorbing { .. } | Violation::SinkIsTarget => sink_line,
        };
        return Err(Error::parse(line, v.to_string()));
    }

    let mut decoy_set = BTreeSet::new();
    for &(s, line) in &decoys {
        if s == sink || mdp.is_target(s) {
            return Err(Error::parse(
                line,
                format!("decoy `{}` is the sink or a target", states[s]),
            ));
        }
        if !decoy_set.insert(s) {
            return Err(Error::parse(line, format!("decoy `{}` listed twice", states[s])));
        }
    }
    let mut sensor_set = BTreeSet::new();
    for &(s, line) in &sensors {
        let terminates = (0..m).all(|a| mdp.row(s, a) == [(sink, 1.0)]);
        if !terminates || s == sink || mdp.is_target(s) || decoy_set.contains(&s) {
            return Err(Error::parse(
                line,
                format!("sensor `{}` must be a plain state that moves to the sink", states[s]),
            ));
        }
        if !sensor_set.insert(s) {
            return Err(Error::parse(line, format!("sensor `{}` listed twice", states[s])));
        }
    }
    let mut pair_set = BTreeSet::new();
    for &((s, a), line) in &modifiable {
        if s == sink || mdp.is_target(s) || decoy_set.contains(&s) {
            return Err(Error::parse(
                line,
                format!(
                    "modifiable pair ({}, {}) sits on a target, decoy or the sink",
                    states[s], actions[a]
                ),
            ));
        }
        if !pair_set.insert((s, a)) {
            return Err(Error::parse(line, "modifiable pair listed twice"));
        }
    }
    let (h, budget_line) = budget.unwrap_or((0.0, last_line));
    let decoys: Vec<usize> = decoy_set.into_iter().collect();
    let pairs: Vec<(usize, usize)> = pair_set.into_iter().collect();
    let domain = DefenseDomain::new(&mdp, &decoys, &pairs, h).map_err(|e| Error::parse(budget_line, e.to_string()))?;
    Ok(Instance {
        mdp,
        domain,
        sensors: sensor_set.into_iter().collect(),
        grid: None,
    })
}

/// Writes an instance so that [`parse_instance`] reads it back unchanged.
pub fn serialize_instance(instance: &Instance) -> String {
    match &instance.grid {
        Some(spec) => serialize_grid(spec),
        None => serialize_explicit(instance),
    }
}

fn serialize_grid(spec: &GridSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "GRID {} {}", spec.rows, spec.cols);
    let _ = writeln!(out, "ALPHA {}", spec.alpha);
    let _ = writeln!(out, "GAMMA {}", spec.discount);
    let _ = writeln!(out, "INIT {} 1", spec.init);
    for &(c, r) in &spec.targets {
        let _ = writeln!(out, "TARGET {c} * {r}");
    }
    for c in &spec.sensors {
        let _ = writeln!(out, "SENSOR {c}");
    }
    for c in &spec.decoys {
        let _ = writeln!(out, "DECOY {c}");
    }
    for (c, d) in &spec.modifiable {
        let _ = writeln!(out, "MODIFIABLE {c} {}", d.name());
    }
    let _ = writeln!(out, "BUDGET {}", spec.budget);
    out
}

fn serialize_explicit(instance: &Instance) -> String {
    let mdp = &instance.mdp;
    let state = |s: usize| mdp.state_name(s);
    let action = |a: usize| mdp.action_name(a);
    let mut out = String::new();
    let _ = writeln!(out, "GAMMA {}", mdp.discount());
    for a in 0..mdp.n_actions() {
        let _ = writeln!(out, "ACTION {}", action(a));
    }
    for s in 0..mdp.n_states() {
        let _ = writeln!(out, "STATE {}", state(s));
    }
    let _ = writeln!(out, "SINK {}", state(mdp.sink()));
    for (s, &p) in mdp.init().iter().enumerate() {
        if p != 0.0 {
            let _ = writeln!(out, "INIT {} {p}", state(s));
        }
    }
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            for &(t, p) in mdp.row(s, a) {
                let _ = writeln!(out, "TRANS {} {} {} {p}", state(s), action(a), state(t));
            }
        }
    }
    for &s in mdp.targets() {
        let rewards: Vec<f64> = (0..mdp.n_actions()).map(|a| mdp.reward()[mdp.sa(s, a)]).collect();
        if rewards.iter().all(|&r| r == rewards[0]) {
            let _ = writeln!(out, "TARGET {} * {}", state(s), rewards[0]);
        } else {
            for (a, r) in rewards.iter().enumerate() {
                let _ = writeln!(out, "TARGET {} {} {r}", state(s), action(a));
            }
        }
    }
    for &s in &instance.sensors {
        let _ = writeln!(out, "SENSOR {}", state(s));
    }
    for &s in instance.domain.decoys() {
        let _ = writeln!(out, "DECOY {}", state(s));
    }
    for &(s, a) in instance.domain.modifiable() {
        let _ = writeln!(out, "MODIFIABLE {} {}", state(s), action(a));
    }
    let _ = writeln!(out, "BUDGET {}", instance.domain.budget());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
GAMMA 0.9
ACTION go
STATE start
STATE sink
SINK sink
INIT start 1
TRANS start go sink 1
TRANS sink go sink 1
";

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn minimal_round_trip_is_exact() {
        let inst = parse_instance(MINIMAL).unwrap();
        let text = serialize_instance(&inst);
        assert_eq!(text, format!("{MINIMAL}BUDGET 0\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn short_row_names_its_line() {
        let text = MINIMAL.replace("TRANS start go sink 1", "TRANS start go sink 0.999999");
        assert_eq!(line_of(parse_instance(&text).unwrap_err()), 7);
    }

    #[test]
    fn format_errors_carry_lines() {
        let cases = [
            (format!("{MINIMAL}FOO bar\n"), 9),
            (format!("{MINIMAL}TRANS start go sink 1\n"), 9),
            (format!("{MINIMAL}TRANS start jump sink 1\n"), 9),
            (format!("{MINIMAL}DECOY nowhere\n"), 9),
            (MINIMAL.replace("TRANS sink go sink 1", "TRANS sink go start 1"), 5),
            (MINIMAL.replace("GAMMA 0.9", "GAMMA 1.5"), 1),
        ];
        for (text, line) in cases {
            assert_eq!(line_of(parse_instance(&text).unwrap_err()), line, "{text}");
        }
        let missing = MINIMAL.replace("TRANS sink go sink 1\n", "");
        assert_eq!(line_of(parse_instance(&missing).unwrap_err()), 4);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!(
            "# header\n\n{}",
            MINIMAL.replace("INIT start 1", "INIT start 1   # start here")
        );
        assert_eq!(parse_instance(&text).unwrap(), parse_instance(MINIMAL).unwrap());
    }

    #[test]
    fn target_must_terminate() {
        let text = "ACTION go\nSTATE a\nSTATE t\nSTATE z\nSINK z\nINIT a 1\n\
                    TRANS a go t 1\nTRANS t go a 1\nTRANS z go z 1\nTARGET t * 1\n";
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("target not terminating"), "{err}");
        assert_eq!(line_of(err), 10);
    }

    #[test]
    fn grid_shorthand_round_trips() {
        let text = "GRID 3 4\nALPHA 0.1\nGAMMA 0.9\nINIT 2,0 1\nTARGET 0,3 * 1\nSENSOR 1,1\nDECOY 0,0\n\
                    MODIFIABLE 2,1 N\nBUDGET 2\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.mdp.n_states(), 13);
        assert_eq!(inst.domain.decoys(), &[0]);
        assert_eq!(inst.domain.modifiable(), &[(9, 0)]);
        assert_eq!(serialize_instance(&inst), text);
        assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn grid_errors_carry_lines() {
        let base = "GRID 3 3\nINIT 2,0 1\nTARGET 0,2 * 1\n";
        let cases = [
            (format!("{base}DECOY 0,2\n"), 4),
            (format!("{base}SENSOR 3,0\n"), 4),
            (format!("{base}TRANS 0,0 N 0,1 1\n"), 4),
            (format!("{base}MODIFIABLE 0,2 S\n"), 4),
            (format!("{base}ALPHA 0.5\n"), 4),
            (format!("{base}DECOY 2,0\n"), 2),
        ];
        for (text, line) in cases {
            assert_eq!(line_of(parse_instance(&text).unwrap_err()), line, "{text}");
        }
    }
}
