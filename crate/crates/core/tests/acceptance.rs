//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use decoy_synth_core::environments::{
    decoy_on_only_path, fig1_analog, grid10_analog, grid6_alt, grid6_analog, random_attack_graph, random_mdp, Instance,
    RandomGraphSpec,
};
use decoy_synth_core::irl::{irl_gradient, irl_objective, target_occupancy, ProjectionConfig};
use decoy_synth_core::mdp::{induce_chain, optimal_value, policy_evaluation, reach_probability, Mdp};
use decoy_synth_core::oracle::{
    enumerate_best_response, finite_difference_check, monte_carlo_reach, monte_carlo_value, OracleBudget,
};
use decoy_synth_core::par::Execution;
use decoy_synth_core::perception::{build_perceptual, defender_value, write_strategy, DefenseStrategy};
use decoy_synth_core::synthesis::{
    evaluate_scenario, make_initial_policy, synthesize, write_synthesis_trace, InitialPolicyKind, SynthesisConfig,
    SynthesisResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdicts {
    failed: Vec<usize>,
}

impl Verdicts {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id:>2} {}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn random_reward(rng: &mut ChaCha8Rng, mdp: &Mdp) -> Vec<f64> {
    let m = mdp.n_actions();
    (0..mdp.n_states() * m)
        .map(|i| {
            if i / m == mdp.sink() {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect()
}

fn oracle_equivalence(v: &mut Verdicts) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let budget = OracleBudget::default();
    for seed in 0..100u64 {
        let n = rng.gen_range(3..=6);
        let m = rng.gen_range(1..=3);
        let gamma = rng.gen_range(0.5..0.99);
        let mdp = random_mdp(n, m, gamma, seed).unwrap();
        let reward = if seed % 2 == 0 {
            mdp.reward().to_vec()
        } else {
            random_reward(&mut rng, &mdp)
        };
        let (values, _) = optimal_value(&mdp, &reward, gamma).unwrap();
        let oracle = enumerate_best_response(&mdp, &reward, gamma, &budget).unwrap();
        for (a, b) in values.values().iter().zip(&oracle.values) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((values.at_init(mdp.init()) - oracle.value).abs());
    }
    let t = secs(started.elapsed());
    v.record(
        1,
        worst <= 1e-8 && t < 60.0,
        format!("oracle equivalence on 100 MDPs, max |dV| = {worst:.2e} (tol 1e-8), {t:.1} s (limit 60 s)"),
    );
}

fn random_point(rng: &mut ChaCha8Rng, inst: &Instance) -> (Vec<f64>, Vec<f64>) {
    let k = inst.decoys().len() as f64;
    let x = inst
        .domain
        .modifiable()
        .iter()
        .map(|_| rng.gen_range(-1.0..0.0))
        .collect();
    let y = inst
        .decoys()
        .iter()
        .map(|_| rng.gen_range(0.05..0.9) * inst.domain.budget() / k)
        .collect();
    (x, y)
}

fn gradient_check(v: &mut Verdicts) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let config = ProjectionConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let inst = random_attack_graph(&RandomGraphSpec::new(8 + (seed as usize % 8), seed)).unwrap();
        let target = make_initial_policy(&inst.mdp, inst.decoys(), InitialPolicyKind::Random, seed).unwrap();
        let occ = target_occupancy(&inst.mdp, &inst.domain, &target).unwrap();
        let (x, y) = random_point(&mut rng, &inst);
        let (gx, gy) = irl_gradient(&inst.mdp, &inst.domain, &x, &y, &occ, &config).unwrap();
        let nx = x.len();
        let point: Vec<f64> = x.iter().chain(&y).copied().collect();
        let grad: Vec<f64> = gx.iter().chain(&gy).copied().collect();
        let objective = |p: &[f64]| irl_objective(&inst.mdp, &inst.domain, &p[..nx], &p[nx..], &occ, &config).unwrap();
        worst = worst.max(finite_difference_check(objective, &grad, &point, 1e-5));
    }
    let t = secs(started.elapsed());
    v.record(
        2,
        worst < 1e-4 && t < 30.0,
        format!("gradient vs central differences on 20 instances, max rel err = {worst:.2e} (tol 1e-4), {t:.1} s (limit 30 s)"),
    );
}

fn monte_carlo_agreement(v: &mut Verdicts) {
    let started = Instant::now();
    let mut worst_z: f64 = 0.0;
    for seed in 0..20u64 {
        let inst = random_attack_graph(&RandomGraphSpec::new(10 + seed as usize, 100 + seed)).unwrap();
        let mdp = &inst.mdp;
        let policy = make_initial_policy(mdp, inst.decoys(), InitialPolicyKind::Random, seed).unwrap();
        let budget = OracleBudget {
            seed,
            ..OracleBudget::default()
        };
        let exact = policy_evaluation(mdp, mdp.reward(), &policy, mdp.discount()).unwrap();
        let est = monte_carlo_value(mdp, &policy, mdp.reward(), mdp.discount(), &budget).unwrap();
        worst_z = worst_z.max(est.z_score(exact.at_init(mdp.init())));

        let chain = induce_chain(mdp, &policy).unwrap().with_absorbing(mdp.targets());
        let reach = reach_probability(&chain, mdp.targets()).unwrap();
        let est = monte_carlo_reach(&chain, mdp.targets(), &budget).unwrap();
        worst_z = worst_z.max(est.z_score(reach));
    }
    let t = secs(started.elapsed());
    v.record(
        3,
        worst_z <= 3.0,
        format!("evaluation and reachability vs 10^6 rollouts on 20 instances, max z = {worst_z:.2} (tol 3), {t:.1} s"),
    );
}

fn support_invariance(v: &mut Verdicts) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for pair in 0..50u64 {
        let inst = if pair % 5 == 0 {
            grid6_analog().unwrap()
        } else {
            random_attack_graph(&RandomGraphSpec::new(12, pair)).unwrap()
        };
        let base = &inst.mdp;
        let (x, y1) = random_point(&mut rng, &inst);
        let (_, y2) = random_point(&mut rng, &inst);
        let s1 = DefenseStrategy::new(inst.domain.clone(), x.clone(), y1).unwrap();
        let s2 = DefenseStrategy::new(inst.domain.clone(), x, y2).unwrap();
        let policy = make_initial_policy(base, inst.decoys(), InitialPolicyKind::Random, pair).unwrap();
        let p1 = build_perceptual(base, &s1).unwrap();
        let p2 = build_perceptual(base, &s2).unwrap();
        let reach = |mdp: &Mdp| {
            let chain = induce_chain(mdp, &policy).unwrap();
            let stop: Vec<usize> = mdp.targets().iter().chain(inst.decoys()).copied().collect();
            reach_probability(&chain.with_absorbing(&stop), inst.decoys()).unwrap()
        };
        let v1 = reach(&p1.mdp);
        let v2 = reach(&p2.mdp);
        let direct = defender_value(base, inst.decoys(), &policy).unwrap();
        worst = worst.max((v1 - v2).abs()).max((v1 - direct).abs());
    }
    v.record(
        4,
        worst <= 1e-12,
        format!("defender value under 50 support-matched (y1, y2) pairs, max |dV1| = {worst:.2e} (tol 1e-12)"),
    );
}

fn config(seed: u64) -> SynthesisConfig {
    SynthesisConfig {
        seed,
        ..SynthesisConfig::default()
    }
}

fn run(inst: &Instance, decoy_only: bool) -> SynthesisResult {
    let domain = if decoy_only {
        inst.domain.without_modifications()
    } else {
        inst.domain.clone()
    };
    synthesize(&inst.mdp, &domain, &config(0)).unwrap()
}

fn converged_spread(res: &SynthesisResult) -> (bool, f64, usize) {
    let all = res.restarts.iter().all(|r| r.converged);
    let values: Vec<f64> = res.restarts.iter().map(|r| r.defender_value).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let iters = res.restarts.iter().map(|r| r.trace.last().unwrap().iter).max().unwrap();
    (all, hi - lo, iters)
}

fn main() {
    let mut v = Verdicts { failed: Vec::new() };
    oracle_equivalence(&mut v);
    gradient_check(&mut v);
    monte_carlo_agreement(&mut v);
    support_invariance(&mut v);

    let g6 = grid6_analog().unwrap();
    let base6 = evaluate_scenario(&g6.mdp, &g6.domain, None).unwrap();
    let decoy6 = run(&g6, true);
    let hard6 = evaluate_scenario(&g6.mdp, &g6.domain, Some(&decoy6.strategy)).unwrap();
    let h = g6.domain.budget();
    let reduction = 1.0 - hard6.attacker_reach / base6.attacker_reach;
    v.record(
        5,
        reduction >= 0.8 && base6.defender_value < 0.01 && hard6.defender_value > 0.3 && hard6.budget_used < h,
        format!(
            "6x6 decoy-only: reach {:.4} -> {:.4} (cut {:.1}%, need >= 80%), defender value {:.3e} -> {:.4} \
             (need < 0.01 -> > 0.3), budget used {:.4} < {h}",
            base6.attacker_reach,
            hard6.attacker_reach,
            100.0 * reduction,
            base6.defender_value,
            hard6.defender_value,
            hard6.budget_used
        ),
    );

    let action6 = run(&g6, false);
    v.record(
        6,
        action6.defender_value >= decoy6.defender_value - 1e-3,
        format!(
            "6x6 decoy+action V1 {:.6} vs decoy-only {:.6} (tol 1e-3)",
            action6.defender_value, decoy6.defender_value
        ),
    );

    let g10 = grid10_analog().unwrap();
    let res10 = run(&g10, false);
    let path = decoy_on_only_path().unwrap();
    let path_res = run(&path, false);
    let others = [
        ("fig1", run(&fig1_analog().unwrap(), false)),
        ("grid6_alt", run(&grid6_alt().unwrap(), false)),
    ];
    let mut worst_excess = f64::NEG_INFINITY;
    for res in [&action6, &res10, &path_res]
        .into_iter()
        .chain(others.iter().map(|(_, r)| r))
    {
        worst_excess = worst_excess.max(res.defender_value - res.upper_bound);
    }
    let path_gap = path_res.upper_bound - path_res.defender_value;
    v.record(
        7,
        worst_excess <= 1e-6 && path_gap <= 1e-3,
        format!(
            "all fixtures max V1 - bound = {worst_excess:.2e} (tol 1e-6); only-path gap = {path_gap:.2e} (tol 1e-3)"
        ),
    );

    let (c6, s6, i6) = converged_spread(&action6);
    let (c10, s10, i10) = converged_spread(&res10);
    v.record(
        8,
        c6 && c10 && s6 <= 0.05 && s10 <= 0.05,
        format!(
            "6x6: all converged {c6} by iter {i6}, spread {s6:.2e}; 10x10: all converged {c10} by iter {i10}, \
             spread {s10:.2e} (limits 200 iters, 0.05)"
        ),
    );

    let t6 = secs(action6.duration);
    let t10 = secs(res10.duration);
    v.record(
        9,
        t6 <= 25.0 && t10 <= 190.0,
        format!("6x6 synthesis {t6:.1} s (limit 25 s); 10x10 synthesis {t10:.1} s (limit 190 s)"),
    );

    let mut identical = true;
    let first = synthesize(&g6.mdp, &g6.domain, &config(11)).unwrap();
    for execution in [Execution::Parallel, Execution::Sequential] {
        let cfg = SynthesisConfig {
            execution,
            ..config(11)
        };
        let again = synthesize(&g6.mdp, &g6.domain, &cfg).unwrap();
        identical &= write_strategy(&g6.mdp, &first.strategy) == write_strategy(&g6.mdp, &again.strategy);
        for (a, b) in first.restarts.iter().zip(&again.restarts) {
            identical &= write_synthesis_trace(a, false) == write_synthesis_trace(b, false);
        }
    }
    v.record(
        10,
        identical,
        "repeated runs (parallel and sequential) give byte-identical strategy files and traces".to_string(),
    );

    if !v.failed.is_empty() {
        eprintln!("failed criteria: {:?}", v.failed);
        std::process::exit(1);
    }
}
