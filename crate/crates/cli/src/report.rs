//! Plain `key: value` reports.

use std::fmt::Write as _;

use decoy_synth_core::environments::Instance;
use decoy_synth_core::fmt::sig6;
use decoy_synth_core::mdp::Mdp;
use decoy_synth_core::perception::DefenseStrategy;
use decoy_synth_core::synthesis::{ScenarioReport, SynthesisResult};

#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key}: {value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.field(key, sig6(value))
    }

    pub fn section(&mut self, title: &str) -> &mut Self {
        let _ = writeln!(self.text, "[{title}]");
        self
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn summary(&mut self, inst: &Instance) -> &mut Self {
        let mdp = &inst.mdp;
        let names = |states: &[usize]| -> String {
            let v: Vec<&str> = states.iter().map(|&s| mdp.state_name(s)).collect();
            if v.is_empty() {
                "-".to_string()
            } else {
                v.join(" ")
            }
        };
        self.field("states", mdp.n_states())
            .field("actions", mdp.n_actions())
            .field("targets", names(mdp.targets()))
            .field("decoys", names(inst.domain.decoys()))
            .field("sensors", names(&inst.sensors))
            .field("modifiable", inst.domain.modifiable().len())
            .num("budget", inst.domain.budget())
            .num("gamma", mdp.discount())
    }

    /// Metrics against the hard-rational attacker. `evaluate` and `solve`
    /// print this block identically for the same strategy.
    pub fn scenario(&mut self, sc: &ScenarioReport) -> &mut Self {
        self.section("best response")
            .num("attacker_reach", sc.attacker_reach)
            .num("defender_value", sc.defender_value)
            .num("defender_value_discounted", sc.defender_value_discounted)
            .num("attacker_value", sc.attacker_value)
            .num("budget_used", sc.budget_used)
    }

    pub fn synthesis(&mut self, mdp: &Mdp, res: &SynthesisResult) -> &mut Self {
        self.section("synthesis")
            .num("defender_value", res.defender_value)
            .num("defender_value_discounted", res.defender_value_discounted)
            .num("attacker_reach", res.attacker_reach)
            .num("attacker_value", res.attacker_value)
            .num("upper_bound", res.upper_bound)
            .field("best_restart", res.best_restart);
        for rec in &res.restarts {
            let iters = rec.trace.last().map_or(0, |p| p.iter);
            let _ = writeln!(
                self.text,
                "restart {}: kind {}, seed {}, iterations {}, converged {}, defender_value {}",
                rec.index,
                rec.kind,
                rec.seed,
                iters,
                if rec.converged { "yes" } else { "no" },
                sig6(rec.defender_value)
            );
        }
        self.allocation(mdp, &res.strategy)
    }

    fn allocation(&mut self, mdp: &Mdp, strategy: &DefenseStrategy) -> &mut Self {
        self.section("allocation");
        let domain = strategy.domain();
        for (&s, &y) in domain.decoys().iter().zip(strategy.y()) {
            let _ = writeln!(self.text, "y {}: {}", mdp.state_name(s), sig6(y));
        }
        for (&(s, a), &x) in domain.modifiable().iter().zip(strategy.x()) {
            let _ = writeln!(self.text, "x {} {}: {}", mdp.state_name(s), mdp.action_name(a), sig6(x));
        }
        self
    }
}
