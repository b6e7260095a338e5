//! Schedule evaluation.
//!
//! Batches on a machine run back to back. A batch cannot start before the
//! machine is ready nor before the latest release date among its operations
//! (setups are non-anticipatory). Each operation completes as soon as its own
//! processing ends, so completions inside a batch are staggered.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Batch, Cost, Instance, JobId, MachineId, OpId, Solution, Time};

/// Timing of one machine's batch sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineEval {
    /// `(op, completion)` in processing order.
    pub completions: Vec<(OpId, Time)>,
    /// Start time of each batch (the moment its setup begins).
    pub batch_starts: Vec<Time>,
    pub finish: Time,
    /// Sum over batches of the load in excess of the machine capacity.
    pub excess: i64,
}

pub fn evaluate_machine(inst: &Instance, machine: MachineId, batches: &[Batch]) -> Result<MachineEval> {
    if machine >= inst.num_machines() {
        return Err(Error::UnknownMachine(machine));
    }
    let mach = inst.machine(machine);
    let mut seen = std::collections::HashSet::new();
    let mut ready = mach.release;
    let mut out = MachineEval {
        completions: Vec::new(),
        batch_starts: Vec::with_capacity(batches.len()),
        finish: ready,
        excess: 0,
    };
    for (b, batch) in batches.iter().enumerate() {
        if batch.ops.is_empty() {
            return Err(Error::EmptyBatch { machine, batch: b });
        }
        let mut start = ready;
        let mut load = 0;
        for &i in &batch.ops {
            if i >= inst.num_operations() {
                return Err(Error::UnknownOperation(i));
            }
            if !seen.insert(i) {
                return Err(Error::Duplicate { op: i });
            }
            if !inst.is_eligible(i, machine) {
                return Err(Error::Ineligible { op: i, machine });
            }
            if inst.op(i).family != batch.family {
                return Err(Error::MixedFamily { machine, batch: b, op: i });
            }
            start = start.max(inst.op(i).release);
            load += inst.op(i).size;
        }
        out.batch_starts.push(start);
        out.excess += (load - mach.capacity).max(0);
        let mut cursor = start + inst.setup(batch.family);
        for &i in &batch.ops {
            cursor += inst.op(i).proc_time;
            out.completions.push((i, cursor));
        }
        ready = cursor;
    }
    out.finish = ready;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `None` for operations a partial solution leaves out.
    pub completion_op: Vec<Option<Time>>,
    pub completion_job: Vec<Time>,
    pub twct: Cost,
    pub violation: i64,
    pub penalized: f64,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.violation == 0
    }

    pub fn is_complete(&self) -> bool {
        self.completion_op.iter().all(Option::is_some)
    }
}

#[inline]
pub fn penalized_cost(twct: Cost, violation: i64, rho: f64) -> f64 {
    if violation == 0 {
        twct as f64
    } else {
        twct as f64 + rho * violation as f64
    }
}

/// Difference `penalized(a) - penalized(b)`, formed from the integer deltas so
/// that equal violations compare exactly.
#[inline]
pub fn penalized_delta(twct_a: Cost, viol_a: i64, twct_b: Cost, viol_b: i64, rho: f64) -> f64 {
    let dv = viol_a - viol_b;
    if dv == 0 {
        (twct_a - twct_b) as f64
    } else {
        (twct_a - twct_b) as f64 + rho * dv as f64
    }
}

/// Total weighted completion time over the given job completions.
pub fn weighted_sum(inst: &Instance, completion_job: &[Time]) -> Cost {
    completion_job
        .iter()
        .enumerate()
        .map(|(j, &c)| inst.weight(j) * c)
        .sum()
}

pub fn evaluate_solution(inst: &Instance, sol: &Solution, rho: f64) -> Result<Evaluation> {
    if sol.machines.len() != inst.num_machines() {
        return Err(Error::UnknownMachine(sol.machines.len().saturating_sub(1)));
    }
    let mut completion_op = vec![None; inst.num_operations()];
    let mut violation = 0;
    for (k, batches) in sol.machines.iter().enumerate() {
        let me = evaluate_machine(inst, k, batches)?;
        for (i, c) in me.completions {
            if completion_op[i].is_some() {
                return Err(Error::Duplicate { op: i });
            }
            completion_op[i] = Some(c);
        }
        violation += me.excess;
    }
    let completion_job: Vec<Time> = (0..inst.num_jobs())
        .map(|j: JobId| {
            inst.ops_of_job(j)
                .iter()
                .filter_map(|&i| completion_op[i])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let twct = weighted_sum(inst, &completion_job);
    Ok(Evaluation {
        completion_op,
        completion_job,
        twct,
        violation,
        penalized: penalized_cost(twct, violation, rho),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntegrityViolation {
    Duplicate { op: OpId },
    Ineligible { op: OpId, machine: MachineId },
    MixedFamily { machine: MachineId, batch: usize, op: OpId },
    EmptyBatch { machine: MachineId, batch: usize },
    UnknownOperation { op: OpId },
    MachineCount { expected: usize, found: usize },
    Missing { op: OpId },
}

impl fmt::Display for IntegrityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use IntegrityViolation::*;
        match self {
            Duplicate { op } => write!(f, "operation {op} appears more than once"),
            Ineligible { op, machine } => {
                write!(f, "operation {op} is not eligible on machine {machine}")
            }
            MixedFamily { machine, batch, op } => write!(
                f,
                "operation {op} breaks family homogeneity of batch {batch} on machine {machine}"
            ),
            EmptyBatch { machine, batch } => write!(f, "batch {batch} on machine {machine} is empty"),
            UnknownOperation { op } => write!(f, "unknown operation {op}"),
            MachineCount { expected, found } => {
                write!(f, "expected {expected} machines, found {found}")
            }
            Missing { op } => write!(f, "operation {op} is not scheduled"),
        }
    }
}

pub fn check_integrity(inst: &Instance, sol: &Solution, require_complete: bool) -> Vec<IntegrityViolation> {
    use IntegrityViolation::*;
    let mut out = Vec::new();
    if sol.machines.len() != inst.num_machines() {
        out.push(MachineCount { expected: inst.num_machines(), found: sol.machines.len() });
    }
    let mut count = vec![0usize; inst.num_operations()];
    for (k, batches) in sol.machines.iter().enumerate() {
        for (b, batch) in batches.iter().enumerate() {
            if batch.ops.is_empty() {
                out.push(EmptyBatch { machine: k, batch: b });
            }
            for &i in &batch.ops {
                if i >= inst.num_operations() {
                    out.push(UnknownOperation { op: i });
                    continue;
                }
                count[i] += 1;
                if count[i] == 2 {
                    out.push(Duplicate { op: i });
                }
                if !inst.is_eligible(i, k) {
                    out.push(Ineligible { op: i, machine: k });
                }
                if inst.op(i).family != batch.family {
                    out.push(MixedFamily { machine: k, batch: b, op: i });
                }
            }
        }
    }
    if require_complete {
        out.extend(
            count
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == 0)
                .map(|(i, _)| Missing { op: i }),
        );
    }
    out
}

/// Relative percentage deviation of `sol_cost` from `best_cost`. Negative
/// values mean `sol_cost` beats the reference.
pub fn rpd(sol_cost: Cost, best_cost: Cost) -> Result<f64> {
    if best_cost <= 0 {
        return Err(Error::NonPositiveBest(best_cost));
    }
    Ok((sol_cost - best_cost) as f64 / best_cost as f64 * 100.0)
}
