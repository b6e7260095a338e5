//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Arguments select criteria by number (`cargo test --test acceptance -- 1 8`);
//! without arguments every criterion runs.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use batchsched_core::constructive::wmct_wavga;
use batchsched_core::format::{instance_to_string, solution_to_string, write_instance};
use batchsched_core::generate::{benchmark_params, generate_benchmark, generate_instance, generate_small_profile_instance, generate_tiny_instance};
use batchsched_core::ig::{accept, cooling_schedule, SaState};
use batchsched_core::local_search::{apply_move, neighborhood_moves, rvnd, NeighborhoodId};
use batchsched_core::model::{Batch, Machine, Operation};
use batchsched_core::oracle::{brute_force_optimum, for_each_solution, oracle_evaluate, OracleLimits};
use batchsched_core::perturb::{
    destroy_count, greedy_repair, pseudo_greedy_repair, pseudo_random_destroy, random_destroy, random_moves_perturbation,
};
use batchsched_core::{check_integrity, evaluate_solution, rng_from_seed, rpd, run, IgConfig, Instance, Solution, Toggles, Variant};
use rand::Rng as _;

const MASTER_SEED: u64 = 1;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const BUDGETS: [usize; 3] = [2500, 4500, 7000];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn c1_aggregation() -> Outcome {
    let op = |p: i64, j: usize| Operation { proc_time: p, release: 0, size: 1, family: 0, eligible: vec![0], jobs: vec![j] };
    let inst = Instance::new(
        vec![Machine { release: 0, capacity: 10 }],
        vec![0],
        vec![3, 2, 1],
        vec![op(45, 0), op(20, 1), op(5, 2)],
    );
    let sol = Solution { machines: vec![vec![Batch::new(0, vec![0, 1, 2])]] };
    let t = Instant::now();
    let ev = evaluate_solution(&inst, &sol, 1.0).unwrap();
    let elapsed = t.elapsed();
    let ok = ev.completion_job == [45, 65, 70] && ev.twct == 335 && within(elapsed, Duration::from_millis(1));
    outcome(ok, format!("completions {:?} twct {} in {:?}", ev.completion_job, ev.twct, elapsed))
}

fn c2_oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let limits = OracleLimits { include_capacity_violations: true, ..OracleLimits::default() };
    let mut compared = 0u64;
    let mut mismatches = 0u64;
    for seed in 0..200u64 {
        let inst = generate_tiny_instance(20_000 + seed, 6, 2);
        for_each_solution(&inst, &limits, |s| {
            let a = evaluate_solution(&inst, s, 1.0).unwrap();
            let b = oracle_evaluate(&inst, s);
            compared += 1;
            if a.twct != b.twct || a.violation != b.violation || a.completion_job != b.job_completion || a.completion_op != b.op_completion {
                mismatches += 1;
            }
        })
        .unwrap();
    }
    let elapsed = t.elapsed();
    let ok = mismatches == 0 && compared > 0 && within(elapsed, Duration::from_secs(300));
    outcome(ok, format!("{compared} solutions on 200 instances, {mismatches} mismatches, {}", fmt_secs(elapsed)))
}

fn c3_tiny_optimum() -> Outcome {
    let t = Instant::now();
    let limits = OracleLimits::default();
    let (mut hits, mut below) = (0, 0);
    let total = 30;
    for seed in 0..total {
        let inst = generate_tiny_instance(30_000 + seed, 6, 2);
        let (opt, _) = brute_force_optimum(&inst, &limits).unwrap();
        let cfg = IgConfig { eta: 2500, variant: Variant::RG, seed, ..IgConfig::default() };
        let r = run(&inst, &cfg).unwrap();
        hits += usize::from(r.best_cost == opt);
        below += usize::from(r.best_cost < opt);
    }
    let elapsed = t.elapsed();
    let ok = hits * 10 >= total as usize * 9 && below == 0 && within(elapsed, Duration::from_secs(600));
    outcome(ok, format!("optimum on {hits}/{total}, below optimum {below}, {}", fmt_secs(elapsed)))
}

fn c4_local_optimality() -> Outcome {
    let t = Instant::now();
    let mut improving = 0;
    let mut scanned = 0usize;
    for seed in 0..50u64 {
        let m = if seed % 2 == 0 { 4 } else { 8 };
        let o = 15 + (seed as usize % 11);
        let inst = generate_small_profile_instance(m, o, 40_000 + seed);
        let mut rng = rng_from_seed(seed);
        let (start, _) = random_moves_perturbation(&inst, &wmct_wavga(&inst), destroy_count(o, 0.5), &mut rng);
        let out = rvnd(&inst, &start, 1.0, &mut rng);
        let base = evaluate_solution(&inst, &out, 1.0).unwrap().penalized;
        for id in NeighborhoodId::ALL {
            for mv in neighborhood_moves(&inst, &out, id) {
                scanned += 1;
                let neighbor = apply_move(&inst, &out, &mv).unwrap();
                // rho = 1 keeps penalized costs integral, so the comparison is exact.
                if evaluate_solution(&inst, &neighbor, 1.0).unwrap().penalized < base {
                    improving += 1;
                }
            }
        }
    }
    let elapsed = t.elapsed();
    let ok = improving == 0 && within(elapsed, Duration::from_secs(600));
    outcome(ok, format!("{scanned} neighbors of 50 descents, {improving} improving, {}", fmt_secs(elapsed)))
}

/// One solver run in the large-instance matrix.
#[derive(Clone, Copy)]
struct Sample {
    instance: usize,
    cost: i64,
    secs: f64,
}

/// The 12 o=50 instances: every (m, q, f) cell of replicate 1 and four cells of replicate 2.
fn matrix_instances() -> Vec<(String, Instance)> {
    let second = ["m5_o50_q3_f3_r2", "m5_o50_q5_f5_r2", "m10_o50_q3_f5_r2", "m10_o50_q5_f3_r2"];
    benchmark_params(MASTER_SEED)
        .into_iter()
        .filter(|p| p.o == 50 && (p.replicate == 1 || second.contains(&p.name().as_str())))
        .map(|p| (p.name(), generate_instance(&p)))
        .collect()
}

struct Matrix {
    instances: Vec<(String, Instance)>,
    runs: BTreeMap<String, Vec<Sample>>,
}

impl Matrix {
    fn new() -> Self {
        Matrix { instances: matrix_instances(), runs: BTreeMap::new() }
    }

    fn ensure(&mut self, label: &str, eta: usize, variant: Variant, toggles: Toggles) {
        if self.runs.contains_key(label) {
            return;
        }
        let t = Instant::now();
        let mut samples = Vec::new();
        for (i, (_, inst)) in self.instances.iter().enumerate() {
            for &seed in &SEEDS {
                let cfg = IgConfig { eta, variant, toggles, seed, ..IgConfig::default() };
                let r = run(inst, &cfg).unwrap();
                assert!(r.feasible);
                samples.push(Sample { instance: i, cost: r.best_cost, secs: r.wall_time.as_secs_f64() });
            }
        }
        eprintln!("  matrix {label}: {} runs in {}", samples.len(), fmt_secs(t.elapsed()));
        self.runs.insert(label.to_string(), samples);
    }

    fn rg(&mut self, eta: usize) -> String {
        let label = format!("RG@{eta}");
        self.ensure(&label, eta, Variant::RG, Toggles::default());
        label
    }

    fn variant(&mut self, v: Variant) -> String {
        if v == Variant::RG {
            return self.rg(2500);
        }
        let label = format!("{v}@2500");
        self.ensure(&label, 2500, v, Toggles::default());
        label
    }

    fn ablation(&mut self, name: &str, toggles: Toggles) -> String {
        if toggles == Toggles::default() {
            return self.rg(2500);
        }
        let label = format!("RG@2500 {name}");
        self.ensure(&label, 2500, Variant::RG, toggles);
        label
    }

    /// Lowest cost per instance over every run made so far.
    fn reference(&self) -> Vec<i64> {
        let mut best = vec![i64::MAX; self.instances.len()];
        for s in self.runs.values().flatten() {
            best[s.instance] = best[s.instance].min(s.cost);
        }
        best
    }

    fn mean_rpd(&self, label: &str, reference: &[i64]) -> f64 {
        let s = &self.runs[label];
        s.iter().map(|x| rpd(x.cost, reference[x.instance]).unwrap()).sum::<f64>() / s.len() as f64
    }

    fn mean_secs(&self, label: &str) -> f64 {
        let s = &self.runs[label];
        s.iter().map(|x| x.secs).sum::<f64>() / s.len() as f64
    }
}

fn c5_budget_trend(mx: &mut Matrix) -> Outcome {
    let t = Instant::now();
    let labels: Vec<String> = BUDGETS.iter().map(|&eta| mx.rg(eta)).collect();
    let elapsed = t.elapsed();
    let reference = mx.reference();
    let rpds: Vec<f64> = labels.iter().map(|l| mx.mean_rpd(l, &reference)).collect();
    let secs: Vec<f64> = labels.iter().map(|l| mx.mean_secs(l)).collect();
    let monotone = rpds[2] <= rpds[1] && rpds[1] <= rpds[0];
    let ratios: Vec<f64> = (1..3)
        .map(|i| (secs[i] / secs[0]) / (BUDGETS[i] as f64 / BUDGETS[0] as f64))
        .collect();
    let linear = ratios.iter().all(|r| (r - 1.0).abs() <= 0.25);
    let ok = monotone && linear && within(elapsed, Duration::from_secs(7200));
    outcome(
        ok,
        format!(
            "mean RPD {:.4}/{:.4}/{:.4} at eta 2500/4500/7000, mean time {:.2}s/{:.2}s/{:.2}s, time per iteration ratios {:.3}/{:.3}, {}",
            rpds[0],
            rpds[1],
            rpds[2],
            secs[0],
            secs[1],
            secs[2],
            ratios[0],
            ratios[1],
            fmt_secs(elapsed)
        ),
    )
}

fn c6_variant_order(mx: &mut Matrix) -> Outcome {
    let labels: BTreeMap<Variant, String> = Variant::ALL.iter().map(|&v| (v, mx.variant(v))).collect();
    let reference = mx.reference();
    let rg = mx.mean_rpd(&labels[&Variant::RG], &reference);
    let pp = mx.mean_rpd(&labels[&Variant::PP], &reference);
    let greedy = (mx.mean_secs(&labels[&Variant::RG]) + mx.mean_secs(&labels[&Variant::PG])) / 2.0;
    let pseudo = (mx.mean_secs(&labels[&Variant::RP]) + mx.mean_secs(&labels[&Variant::PP])) / 2.0;
    let ok = rg <= pp && greedy < pseudo;
    let per: Vec<String> = Variant::ALL
        .iter()
        .map(|v| format!("{v} {:.4}% {:.2}s", mx.mean_rpd(&labels[v], &reference), mx.mean_secs(&labels[v])))
        .collect();
    outcome(
        ok,
        format!("{}; greedy-repair mean time {greedy:.2}s vs pseudo-greedy {pseudo:.2}s", per.join(", ")),
    )
}

fn c7_ablation(mx: &mut Matrix) -> Outcome {
    let set = Toggles::ablation_set();
    let labels: Vec<(&str, String)> = set.iter().map(|(name, tg)| (*name, mx.ablation(name, *tg))).collect();
    let reference = mx.reference();
    let rpds: Vec<(&str, f64)> = labels.iter().map(|(n, l)| (*n, mx.mean_rpd(l, &reference))).collect();
    let get = |name: &str| rpds.iter().find(|r| r.0 == name).unwrap().1;
    let no_ls = get("No LS");
    let complete = get("Complete");
    let ls_worst = rpds.iter().filter(|r| r.0 != "No LS").all(|r| r.1 < no_ls);
    let complete_ok = rpds.iter().filter(|r| r.0 != "Complete").all(|r| complete <= r.1 + 0.1);
    let detail: Vec<String> = rpds.iter().map(|(n, v)| format!("{n} {v:.4}%")).collect();
    outcome(ls_worst && complete_ok, detail.join(", "))
}

fn c8_schedule() -> Outcome {
    let c = IgConfig::default();
    let mut sa = cooling_schedule(10_000.0, c.delta1, c.delta2, 2500).unwrap();
    for _ in 0..2500 {
        sa.cool();
    }
    let rel = ((sa.tau - sa.tau_f) / sa.tau_f).abs();
    let mut rng = rng_from_seed(8);
    let trials = 100_000;
    let at_tau0 = SaState { tau: sa.tau0, ..sa };
    let hits = (0..trials).filter(|_| accept(500.0 + sa.tau0, 500.0, &at_tau0, &mut rng)).count();
    let freq = hits as f64 / trials as f64;
    let ok = rel < 1e-9 && (freq - (-1f64).exp()).abs() <= 0.01;
    outcome(ok, format!("relative tau error {rel:.3e}, acceptance frequency at delta = tau {freq:.4}"))
}

fn run_fingerprint(inst: &Instance, cfg: &IgConfig) -> (String, String) {
    let r = run(inst, cfg).unwrap();
    let trace: String = r.trace.iter().map(|t| format!("{t:?}\n")).collect();
    (trace, solution_to_string(&r.best_solution))
}

fn files_of(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn c9_determinism() -> Outcome {
    let mut same_runs = true;
    let insts = [generate_small_profile_instance(4, 25, 90), generate_tiny_instance(91, 6, 2)];
    for inst in &insts {
        for (variant, toggles) in [(Variant::RG, Toggles::default()), (Variant::PP, Toggles::default()), (Variant::PG, Toggles { destroy_repair: false, ..Toggles::default() })] {
            let cfg = IgConfig { eta: 150, variant, toggles, seed: 77, ..IgConfig::default() };
            same_runs &= run_fingerprint(inst, &cfg) == run_fingerprint(inst, &cfg);
        }
    }
    let base = std::env::temp_dir().join(format!("batchsched-acceptance-{}", std::process::id()));
    let mut dirs = Vec::new();
    for pass in 0..2 {
        let dir = base.join(format!("pass{pass}"));
        std::fs::create_dir_all(&dir).unwrap();
        for (name, inst) in generate_benchmark(MASTER_SEED) {
            write_instance(&inst, dir.join(format!("{name}.txt")), Some(&name)).unwrap();
        }
        dirs.push(files_of(&dir));
    }
    std::fs::remove_dir_all(&base).ok();
    let same_files = dirs[0].len() == 72 && dirs[0] == dirs[1];
    let text_stable = generate_benchmark(MASTER_SEED)
        .iter()
        .zip(generate_benchmark(MASTER_SEED).iter())
        .all(|(a, b)| instance_to_string(&a.1, None) == instance_to_string(&b.1, None));
    outcome(
        same_runs && same_files && text_stable,
        format!("repeated runs identical: {same_runs}; 72-instance files identical: {same_files}"),
    )
}

fn c10_integrity() -> Outcome {
    let t = Instant::now();
    let insts: Vec<Instance> = (0..8).map(|s| generate_small_profile_instance(if s % 2 == 0 { 4 } else { 8 }, 15 + 5 * (s as usize % 3), 100 + s)).collect();
    let mut current: Vec<Solution> = insts.iter().map(wmct_wavga).collect();
    let mut rng = rng_from_seed(10);
    let (mut applications, mut violations, mut incomplete) = (0u64, 0u64, 0u64);
    while applications < 100_000 {
        let k = rng.gen_range(0..insts.len());
        let inst = &insts[k];
        let sol = &current[k];
        let kind = rng.gen_range(0..10);
        let next = if kind < 7 {
            let id = NeighborhoodId::ALL[rng.gen_range(0..4)];
            let moves = neighborhood_moves(inst, sol, id);
            if moves.is_empty() {
                sol.clone()
            } else {
                apply_move(inst, sol, &moves[rng.gen_range(0..moves.len())]).unwrap()
            }
        } else {
            let d = rng.gen_range(1..=4);
            let repaired = match kind {
                7 => greedy_repair(inst, &random_destroy(inst, sol, d, &mut rng), 1.0),
                8 => {
                    let part = pseudo_random_destroy(inst, sol, d, 1.0, &mut rng);
                    pseudo_greedy_repair(inst, &part, 1.0, &mut rng)
                }
                _ => random_moves_perturbation(inst, sol, d, &mut rng).0,
            };
            if !evaluate_solution(inst, &repaired, 1.0).unwrap().is_complete() {
                incomplete += 1;
            }
            repaired
        };
        if !check_integrity(inst, &next, true).is_empty() {
            violations += 1;
        }
        current[k] = next;
        applications += 1;
        // Occasionally restart from the constructive solution to vary the states visited.
        if applications % 5000 == 0 {
            current[k] = wmct_wavga(inst);
        }
    }
    let elapsed = t.elapsed();
    let ok = violations == 0 && incomplete == 0 && within(elapsed, Duration::from_secs(600));
    outcome(
        ok,
        format!("{applications} applications, {violations} integrity violations, {incomplete} incomplete repairs, {}", fmt_secs(elapsed)),
    )
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wants = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut matrix = Matrix::new();
    let mut failed = 0;
    let mut report = |n: u32, title: &str, o: Outcome| {
        println!("criterion {n:>2} [{}] {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    if wants(1) {
        report(1, "job completion aggregation", c1_aggregation());
    }
    if wants(2) {
        report(2, "evaluator equivalence with the reference oracle", c2_oracle_equivalence());
    }
    if wants(3) {
        report(3, "IG-RG reaches the oracle optimum on tiny instances", c3_tiny_optimum());
    }
    if wants(4) {
        report(4, "descent output is a local optimum of all four neighborhoods", c4_local_optimality());
    }
    if wants(5) {
        report(5, "iteration budget trend", c5_budget_trend(&mut matrix));
    }
    if wants(6) {
        report(6, "variant ordering", c6_variant_order(&mut matrix));
    }
    if wants(7) {
        report(7, "ablation coherence", c7_ablation(&mut matrix));
    }
    if wants(8) {
        report(8, "annealing schedule and acceptance probability", c8_schedule());
    }
    if wants(9) {
        report(9, "determinism and reproducibility", c9_determinism());
    }
    if wants(10) {
        report(10, "integrity under random moves, destroy and repair", c10_integrity());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
