//! `generate`, `solve`, `evaluate` and `verify`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use batchsched_core::eval::{check_integrity, evaluate_solution};
use batchsched_core::format::{instance_to_string, read_instance, read_solution, solution_to_string};
use batchsched_core::generate::{generate_benchmark, generate_small_profile_set, generate_tiny_instance};
use batchsched_core::oracle::{brute_force_optimum, for_each_solution, oracle_evaluate, OracleLimits};
use batchsched_core::{run, IgConfig, Instance};
use sha2::{Digest, Sha256};

use crate::args::{EvaluateArgs, GenerateArgs, Profile, SolveArgs, VerifyArgs};
use crate::{CliError, CliResult};

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn load_instance(path: &Path) -> CliResult<Instance> {
    read_instance(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn create_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    create_parent(path)?;
    fs::write(path, contents).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

/// Writes the instance files and `manifest.csv` (name, file, sha256), then
/// prints the manifest and its digest.
pub fn generate(args: &GenerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let set = match args.profile {
        Profile::Large => generate_benchmark(args.seed),
        Profile::SmallLike => {
            if args.replicates == 0 {
                return Err(CliError::Usage("--replicates must be at least 1".into()));
            }
            generate_small_profile_set(args.seed, args.replicates)
        }
    };
    fs::create_dir_all(&args.out_dir)?;
    let mut manifest = String::from("name,file,sha256\n");
    for (name, inst) in &set {
        let file = format!("{name}.txt");
        let text = instance_to_string(inst, Some(&format!("{name} seed={}", args.seed)));
        write_file(&args.out_dir.join(&file), text.as_bytes())?;
        manifest.push_str(&format!("{name},{file},{}\n", sha256_hex(text.as_bytes())));
    }
    write_file(&args.out_dir.join("manifest.csv"), manifest.as_bytes())?;
    out.write_all(manifest.as_bytes())?;
    writeln!(out, "instances={} manifest_digest={}", set.len(), sha256_hex(manifest.as_bytes()))?;
    Ok(())
}

/// Solver configuration from defaults, an optional TOML file and flags, in
/// increasing precedence.
pub fn solve_config(args: &SolveArgs) -> CliResult<IgConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            toml::from_str::<IgConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => IgConfig::default(),
    };
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if let Some(eta) = args.eta {
        cfg.eta = eta;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.toggles = args.toggles.apply(cfg.toggles);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn default_solution_path(args: &SolveArgs) -> PathBuf {
    let stem = args.instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "solution".into());
    args.out_dir.join(format!("{stem}.sol"))
}

pub fn solve(args: &SolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = solve_config(args)?;
    let inst = load_instance(&args.instance)?;
    let res = run(&inst, &cfg)?;
    let path = args.out.clone().unwrap_or_else(|| default_solution_path(args));
    write_file(&path, solution_to_string(&res.best_solution).as_bytes())?;
    if let Some(tp) = &args.trace {
        let mut text = String::from("# iteration current_twct current_violation best_twct tau rho accepted feasible\n");
        for r in &res.trace {
            text.push_str(&format!("{r}\n"));
        }
        write_file(tp, text.as_bytes())?;
    }
    writeln!(
        out,
        "twct={} feasible={} time_s={:.3} iterations_to_best={}",
        res.best_cost,
        res.feasible,
        res.wall_time.as_secs_f64(),
        res.iterations_to_best
    )?;
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let inst = load_instance(&args.instance)?;
    let sol = read_solution(&args.solution, &inst)
        .map_err(|e| CliError::Domain(format!("{}: {e}", args.solution.display())))?;
    let problems = check_integrity(&inst, &sol, false);
    if let Some(p) = problems.first() {
        return Err(CliError::Domain(format!("invalid solution: {p}")));
    }
    let ev = evaluate_solution(&inst, &sol, 1.0)?;
    let verdict = if !ev.is_complete() {
        "incomplete"
    } else if ev.is_feasible() {
        "feasible"
    } else {
        "infeasible"
    };
    writeln!(out, "twct={}", ev.twct)?;
    writeln!(out, "violation={}", ev.violation)?;
    writeln!(out, "feasible={}", ev.is_feasible())?;
    writeln!(out, "complete={}", ev.is_complete())?;
    writeln!(out, "verdict={verdict}")?;
    for (j, c) in ev.completion_job.iter().enumerate() {
        writeln!(out, "job {j} weight={} completion={c}", inst.weight(j))?;
    }
    Ok(())
}

/// Tiny instances checked by `verify`, drawn from consecutive seeds.
pub fn tiny_suite(seed: u64, count: usize) -> Vec<Instance> {
    (0..count as u64).map(|t| generate_tiny_instance(seed.wrapping_add(t), 6, 2)).collect()
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct VerifySummary {
    pub instances: usize,
    pub solutions_checked: u64,
    pub mismatches: u64,
    pub optimal: usize,
    pub below_optimum: usize,
}

/// Compares the evaluator with the oracle on every enumerated solution and
/// the solver with the exhaustive optimum.
pub fn verify_suite(seed: u64, count: usize, eta: usize) -> CliResult<VerifySummary> {
    let mut s = VerifySummary::default();
    let all = OracleLimits { include_capacity_violations: true, ..OracleLimits::default() };
    for (t, inst) in tiny_suite(seed, count).iter().enumerate() {
        s.instances += 1;
        s.solutions_checked += for_each_solution(inst, &all, |sol| {
            let o = oracle_evaluate(inst, sol);
            let matches = match evaluate_solution(inst, sol, 1.0) {
                Ok(e) => e.twct == o.twct && e.violation == o.violation && e.completion_job == o.job_completion,
                Err(_) => false,
            };
            if !matches {
                s.mismatches += 1;
            }
        })?;
        let (opt, _) = brute_force_optimum(inst, &OracleLimits::default())?;
        let cfg = IgConfig { eta, seed: seed.wrapping_add(t as u64), ..IgConfig::default() };
        let res = run(inst, &cfg)?;
        if res.best_cost == opt {
            s.optimal += 1;
        } else if res.best_cost < opt {
            s.below_optimum += 1;
        }
    }
    Ok(s)
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.count == 0 || args.eta == 0 {
        return Err(CliError::Usage("--count and --eta must be at least 1".into()));
    }
    let s = verify_suite(args.seed, args.count, args.eta)?;
    writeln!(
        out,
        "instances={} solutions_checked={} mismatches={} optimal={}/{} below_optimum={}",
        s.instances, s.solutions_checked, s.mismatches, s.optimal, s.instances, s.below_optimum
    )?;
    if s.mismatches > 0 || s.below_optimum > 0 {
        return Err(CliError::Domain("verification failed".into()));
    }
    Ok(())
}
