//! Exhaustive search and a second, separately written evaluator for tiny
//! instances.

use crate::error::{Error, Result};
use crate::model::{Batch, Cost, Instance, OpId, Solution, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_operations: usize,
    pub max_machines: usize,
    pub max_enumerated_solutions: u64,
    /// Also yield solutions whose batches exceed a machine capacity.
    pub include_capacity_violations: bool,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_operations: 6,
            max_machines: 2,
            max_enumerated_solutions: 100_000_000,
            include_capacity_violations: false,
        }
    }
}

/// Result of the reference evaluator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleEval {
    pub op_completion: Vec<Option<Time>>,
    pub job_completion: Vec<Time>,
    pub twct: Cost,
    pub violation: i64,
}

/// Straightforward schedule simulation. Unscheduled operations contribute 0
/// to their jobs.
pub fn oracle_evaluate(inst: &Instance, sol: &Solution) -> OracleEval {
    let mut op_completion: Vec<Option<Time>> = vec![None; inst.num_operations()];
    let mut violation = 0;
    for (k, batches) in sol.machines.iter().enumerate() {
        let machine = inst.machine(k);
        let mut clock = machine.release;
        for batch in batches {
            let mut latest_release = 0;
            let mut load = 0;
            for &i in &batch.ops {
                latest_release = latest_release.max(inst.op(i).release);
                load += inst.op(i).size;
            }
            if load > machine.capacity {
                violation += load - machine.capacity;
            }
            if latest_release > clock {
                clock = latest_release;
            }
            clock += inst.setup(batch.family);
            for &i in &batch.ops {
                clock += inst.op(i).proc_time;
                op_completion[i] = Some(clock);
            }
        }
    }
    let mut job_completion = vec![0; inst.num_jobs()];
    for (i, c) in op_completion.iter().enumerate() {
        if let Some(c) = *c {
            for &j in &inst.op(i).jobs {
                if c > job_completion[j] {
                    job_completion[j] = c;
                }
            }
        }
    }
    let twct = job_completion.iter().zip(inst.weights()).map(|(c, w)| c * w).sum();
    OracleEval { op_completion, job_completion, twct, violation }
}

fn check_limits(inst: &Instance, limits: &OracleLimits) -> Result<()> {
    if inst.num_operations() > limits.max_operations {
        return Err(Error::LimitExceeded(format!(
            "{} operations, oracle limit is {}",
            inst.num_operations(),
            limits.max_operations
        )));
    }
    if inst.num_machines() > limits.max_machines {
        return Err(Error::LimitExceeded(format!(
            "{} machines, oracle limit is {}",
            inst.num_machines(),
            limits.max_machines
        )));
    }
    Ok(())
}

/// Next lexicographic permutation in place; false after the last one.
fn next_permutation(v: &mut [OpId]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Every batched sequence of `ops` on machine `k`.
fn machine_schedules(inst: &Instance, k: usize, ops: &[OpId], keep_violations: bool) -> Vec<Vec<Batch>> {
    let mut out = Vec::new();
    let mut perm = ops.to_vec();
    perm.sort_unstable();
    if perm.is_empty() {
        out.push(Vec::new());
        return out;
    }
    let gaps = perm.len() - 1;
    loop {
        let forced: u32 = (0..gaps)
            .filter(|&g| inst.op(perm[g]).family != inst.op(perm[g + 1]).family)
            .fold(0, |acc, g| acc | (1 << g));
        for mask in 0u32..(1 << gaps) {
            if mask & forced != forced {
                continue;
            }
            let mut batches: Vec<Batch> = Vec::new();
            let mut current = vec![perm[0]];
            for g in 0..gaps {
                if mask & (1 << g) != 0 {
                    let fam = inst.op(current[0]).family;
                    batches.push(Batch::new(fam, std::mem::take(&mut current)));
                }
                current.push(perm[g + 1]);
            }
            batches.push(Batch::new(inst.op(current[0]).family, current));
            let fits = batches
                .iter()
                .all(|b| b.ops.iter().map(|&i| inst.op(i).size).sum::<i64>() <= inst.machine(k).capacity);
            if fits || keep_violations {
                out.push(batches);
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out
}

/// Visits every complete solution: each assignment of operations to eligible
/// machines, each processing order per machine and each contiguous split of
/// that order into single-family batches. Returns the number visited.
pub fn for_each_solution(inst: &Instance, limits: &OracleLimits, mut f: impl FnMut(&Solution)) -> Result<u64> {
    check_limits(inst, limits)?;
    let o = inst.num_operations();
    let m = inst.num_machines();
    let choices: Vec<Vec<usize>> = (0..o).map(|i| inst.op(i).eligible.clone()).collect();
    if choices.iter().any(|c| c.is_empty()) {
        return Ok(0);
    }
    let mut pick = vec![0usize; o];
    let mut count = 0u64;
    loop {
        let mut per_machine: Vec<Vec<OpId>> = vec![Vec::new(); m];
        for i in 0..o {
            per_machine[choices[i][pick[i]]].push(i);
        }
        let options: Vec<Vec<Vec<Batch>>> = (0..m)
            .map(|k| machine_schedules(inst, k, &per_machine[k], limits.include_capacity_violations))
            .collect();
        if options.iter().all(|opt| !opt.is_empty()) {
            let mut idx = vec![0usize; m];
            loop {
                count += 1;
                if count > limits.max_enumerated_solutions {
                    return Err(Error::LimitExceeded(format!(
                        "more than {} solutions",
                        limits.max_enumerated_solutions
                    )));
                }
                let sol = Solution { machines: (0..m).map(|k| options[k][idx[k]].clone()).collect() };
                f(&sol);
                let mut k = 0;
                while k < m {
                    idx[k] += 1;
                    if idx[k] < options[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == m {
                    break;
                }
            }
        }
        let mut i = 0;
        while i < o {
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
        if i == o {
            break;
        }
    }
    Ok(count)
}

pub fn enumerate_solutions(inst: &Instance, limits: &OracleLimits) -> Result<Vec<Solution>> {
    let mut out = Vec::new();
    for_each_solution(inst, limits, |s| out.push(s.clone()))?;
    Ok(out)
}

/// Minimum total weighted completion time over all capacity-feasible
/// solutions, with the first optimal solution met.
pub fn brute_force_optimum(inst: &Instance, limits: &OracleLimits) -> Result<(Cost, Solution)> {
    let limits = OracleLimits { include_capacity_violations: false, ..*limits };
    let mut best: Option<(Cost, Solution)> = None;
    for_each_solution(inst, &limits, |s| {
        let e = oracle_evaluate(inst, s);
        if best.as_ref().is_none_or(|(c, _)| e.twct < *c) {
            best = Some((e.twct, s.clone()));
        }
    })?;
    best.ok_or(Error::NoFeasibleSolution)
}
