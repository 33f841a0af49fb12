use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Context};
use decoy_synth_core::environments::{
    fixture, grid10_analog, grid6_analog, parse_instance, random_attack_graph, random_gridworld, serialize_instance,
    Cell, Compass, GridSpec, Instance, RandomGraphSpec,
};
use decoy_synth_core::fmt::sig6;
use decoy_synth_core::par::Execution;
use decoy_synth_core::perception::{write_strategy, StrategyFile};
use decoy_synth_core::synthesis::{
    defender_upper_bound, evaluate_scenario, synthesize, write_synthesis_trace, SynthesisConfig,
};
use decoy_synth_core::PROB_TOL;
use serde_json::json;

use crate::args::{
    BenchArgs, EvaluateArgs, GenerateArgs, GenerateKind, GridArgs, Mode, SolveArgs, SynthFlags, ValidateArgs,
};
use crate::manifest::Outputs;
use crate::report::Report;
use crate::{CmdResult, Failure};

fn read(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)
}

fn with_path(path: &Path, err: decoy_synth_core::Error) -> Failure {
    match Failure::from(err) {
        Failure::Input(e) => Failure::Input(e.context(path.display().to_string())),
        other => other,
    }
}

fn load_instance(path: &Path) -> CmdResult<Instance> {
    parse_instance(&read(path)?).map_err(|e| with_path(path, e))
}

fn apply_overrides(inst: &mut Instance, budget: Option<f64>, gamma: Option<f64>) -> CmdResult {
    if let Some(g) = gamma {
        inst.mdp = inst.mdp.with_discount(g)?;
    }
    if let Some(h) = budget {
        inst.domain = inst.domain.with_budget(h)?;
    }
    Ok(())
}

fn synthesis_config(flags: &SynthFlags) -> SynthesisConfig {
    let mut cfg = SynthesisConfig::default();
    if let Some(v) = flags.tau {
        cfg.improvement_temperature = v;
    }
    if let Some(v) = flags.tau2 {
        cfg.projection.temperature = v;
    }
    if let Some(v) = flags.barrier_t {
        cfg.projection.barrier_weight = v;
    }
    if let Some(v) = flags.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = flags.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.max_iters {
        cfg.max_outer_iters = v;
    }
    if flags.sequential {
        cfg.execution = Execution::Sequential;
    }
    cfg
}

fn overrides(flags: &SynthFlags) -> BTreeMap<String, serde_json::Value> {
    let mut map = BTreeMap::new();
    let mut put = |k: &str, v: Option<serde_json::Value>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    put("budget", flags.budget.map(|v| json!(v)));
    put("gamma", flags.gamma.map(|v| json!(v)));
    put("tau", flags.tau.map(|v| json!(v)));
    put("tau2", flags.tau2.map(|v| json!(v)));
    put("barrier_t", flags.barrier_t.map(|v| json!(v)));
    put("epsilon", flags.epsilon.map(|v| json!(v)));
    put("restarts", flags.restarts.map(|v| json!(v)));
    put("seed", flags.seed.map(|v| json!(v)));
    put("max_iters", flags.max_iters.map(|v| json!(v)));
    put("sequential", flags.sequential.then_some(json!(true)));
    map
}

pub fn validate(args: &ValidateArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let mut report = Report::new();
    report.field("valid", "yes").summary(&inst);
    report.field("budget_interior", if inst.domain.has_interior() { "yes" } else { "no" });
    if !inst.decoys().is_empty() {
        report.num("upper_bound", defender_upper_bound(&inst.mdp, inst.decoys())?);
    }
    print!("{}", report.as_str());
    Ok(())
}

pub fn solve(args: &SolveArgs) -> CmdResult {
    let started = Instant::now();
    let mut inst = load_instance(&args.instance)?;
    apply_overrides(&mut inst, args.flags.budget, args.flags.gamma)?;
    if args.mode == Mode::Decoy {
        inst.domain = inst.domain.without_modifications();
    }
    let config = synthesis_config(&args.flags);
    let mdp = &inst.mdp;

    let mut report = Report::new();
    report.field("mode", args.mode.name()).summary(&inst);
    let mut files: Vec<(String, String)> = Vec::new();
    let mut best_trace = None;
    if args.mode == Mode::NoDecoy {
        report.scenario(&evaluate_scenario(mdp, &inst.domain, None)?);
    } else {
        let res = synthesize(mdp, &inst.domain, &config)?;
        log::info!(
            "synthesis finished in {:.2} s; best restart {}",
            res.duration.as_secs_f64(),
            res.best_restart
        );
        report.scenario(&evaluate_scenario(mdp, &inst.domain, Some(&res.strategy))?);
        report.synthesis(mdp, &res);
        files.push(("strategy.txt".into(), write_strategy(mdp, &res.strategy)));
        for rec in &res.restarts {
            files.push((
                format!("trace_restart{}.csv", rec.index),
                write_synthesis_trace(rec, args.trace_timing),
            ));
        }
        best_trace = Some(write_synthesis_trace(
            &res.restarts[res.best_restart],
            args.trace_timing,
        ));
    }
    print!("{}", report.as_str());

    let mut outputs = Outputs::default();
    if let Some(path) = &args.trace {
        match &best_trace {
            Some(t) => outputs.write(path, t.as_bytes())?,
            None => log::warn!("no-decoy mode runs no synthesis; no trace written"),
        }
    }
    if let Some(dir) = &args.out {
        outputs.write(&dir.join("report.txt"), report.as_str().as_bytes())?;
        for (name, text) in &files {
            outputs.write(&dir.join(name), text.as_bytes())?;
        }
        let manifest = outputs.into_manifest(
            &args.instance,
            overrides(&args.flags),
            config.seed,
            started.elapsed().as_secs_f64(),
        );
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Other(e.into()))?;
        fs::write(dir.join("manifest.json"), json + "\n")?;
    }
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> CmdResult {
    let mut inst = load_instance(&args.instance)?;
    apply_overrides(&mut inst, args.budget, args.gamma)?;
    let file = StrategyFile::parse(&read(&args.strategy)?).map_err(|e| with_path(&args.strategy, e))?;
    let strategy = file
        .resolve(&inst.mdp, &inst.domain)
        .map_err(|e| with_path(&args.strategy, e))?;
    if let Some(s) = &strategy {
        let allowed = inst.domain.budget();
        if s.budget_used() > allowed + PROB_TOL {
            return Err(Failure::Input(anyhow!(
                "{}: strategy spends {} but the budget is {}",
                args.strategy.display(),
                sig6(s.budget_used()),
                sig6(allowed)
            )));
        }
    }
    let sc = evaluate_scenario(&inst.mdp, &inst.domain, strategy.as_ref())?;
    let mut report = Report::new();
    report.summary(&inst).scenario(&sc);
    print!("{}", report.as_str());
    if let Some(path) = &args.out {
        Outputs::default().write(path, report.as_str().as_bytes())?;
    }
    Ok(())
}

fn parse_cell(raw: &str) -> CmdResult<Cell> {
    raw.parse::<Cell>()
        .map_err(|e| Failure::input(anyhow!("bad cell `{raw}`: {e}")))
}

fn grid_spec(args: &GridArgs) -> CmdResult<GridSpec> {
    let mut spec = GridSpec::new(args.rows, args.cols);
    spec.alpha = args.alpha;
    spec.discount = args.gamma;
    spec.budget = args.budget;
    spec.init = parse_cell(&args.init)?;
    for raw in &args.targets {
        let (cell, reward) = match raw.split_once('=') {
            Some((c, r)) => {
                let r: f64 = r
                    .parse()
                    .map_err(|_| Failure::input(anyhow!("bad reward in target `{raw}`")))?;
                (c, r)
            }
            None => (raw.as_str(), 1.0),
        };
        spec.targets.push((parse_cell(cell)?, reward));
    }
    spec.sensors = args.sensors.iter().map(|c| parse_cell(c)).collect::<CmdResult<_>>()?;
    spec.decoys = args.decoys.iter().map(|c| parse_cell(c)).collect::<CmdResult<_>>()?;
    for raw in &args.modifiable {
        let (cell, dir) = raw
            .split_once(':')
            .ok_or_else(|| Failure::input(anyhow!("modifiable move `{raw}` should look like r,c:N")))?;
        let dir: Compass = dir
            .parse()
            .map_err(|e| Failure::input(anyhow!("bad direction in `{raw}`: {e}")))?;
        spec.modifiable.push((parse_cell(cell)?, dir));
    }
    Ok(spec)
}

pub fn generate(args: &GenerateArgs) -> CmdResult {
    let (inst, out) = match &args.kind {
        GenerateKind::Gridworld(g) => (Instance::from_grid(grid_spec(g)?)?, &g.out),
        GenerateKind::Random(r) => {
            let spec = RandomGraphSpec {
                n_states: r.states,
                n_actions: r.actions,
                branching: r.branching,
                seed: r.seed,
                decoy_count: r.decoys,
                target_count: r.targets,
                discount: r.gamma,
            };
            (random_attack_graph(&spec)?, &r.out)
        }
        GenerateKind::RandomGrid(g) => (random_gridworld(g.rows, g.cols, g.seed)?, &g.out),
        GenerateKind::Fixture(f) => (fixture(&f.name)?, &f.out),
    };
    let text = serialize_instance(&inst);
    let mut summary = Report::new();
    summary.summary(&inst);
    match out {
        Some(path) => {
            Outputs::default().write(path, text.as_bytes())?;
            print!("{}", summary.as_str());
        }
        None => {
            print!("{text}");
            eprint!("{}", summary.as_str());
        }
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> CmdResult {
    let config = synthesis_config(&args.flags);
    let mut sizes = args.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let mut table = String::from("size,states,decoys,seconds,defender_value\n");
    println!("size,states,decoys,seconds,defender_value");
    for n in sizes {
        let mut inst = match n {
            6 => grid6_analog()?,
            10 => grid10_analog()?,
            _ => random_gridworld(n, n, config.seed)?,
        };
        apply_overrides(&mut inst, args.flags.budget, args.flags.gamma)?;
        log::info!("synthesizing on the {n}x{n} grid");
        let res = synthesize(&inst.mdp, &inst.domain, &config)?;
        let row = format!(
            "{n},{},{},{},{}",
            inst.mdp.n_states(),
            inst.decoys().len(),
            sig6(res.duration.as_secs_f64()),
            sig6(res.defender_value)
        );
        println!("{row}");
        table.push_str(&row);
        table.push('\n');
    }
    if let Some(path) = &args.out {
        Outputs::default().write(path, table.as_bytes())?;
    }
    Ok(())
}
