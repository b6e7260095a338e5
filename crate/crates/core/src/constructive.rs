//! WMCT-WAVGA constructive heuristic.
//!
//! Operations are dispatched one at a time. The next operation is the one with
//! the largest ratio between its adaptive weight (each job's weight spread over
//! the job's still unscheduled operations) and its earliest possible
//! completion. It is then placed either at the end of a machine's current
//! batch or in a new batch on that machine, whichever adds the least weighted
//! completion time. All comparisons are exact rationals.
//!
//! Ties: highest priority then lowest operation id; cheapest placement then
//! lowest machine id, current batch before new batch.

use std::cmp::Ordering;

use num_rational::Ratio;

use crate::model::{Batch, FamilyId, Instance, MachineId, OpId, Solution, Time};

pub type Weight = Ratio<i128>;

/// Dispatch priority `weight / denom`, compared by cross-multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Priority {
    pub weight: Weight,
    pub denom: i128,
}

impl Priority {
    pub fn value(&self) -> f64 {
        let w = *self.weight.numer() as f64 / *self.weight.denom() as f64;
        w / self.denom as f64
    }

    pub fn as_ratio(&self) -> Option<Weight> {
        (self.denom != 0).then(|| self.weight / Weight::from_integer(self.denom))
    }
}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.weight * Weight::from_integer(other.denom))
            .cmp(&(other.weight * Weight::from_integer(self.denom)))
    }
}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum InsertMode {
    CurrentBatch,
    NewBatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub machine: MachineId,
    pub mode: InsertMode,
    /// Completion time of the inserted operation.
    pub completion: Time,
    pub cost: Weight,
}

#[derive(Debug, Clone)]
struct MachineState {
    batch_start: Time,
    completion: Time,
    load: i64,
    family: Option<FamilyId>,
    batch_ops: Vec<OpId>,
    batch_weight: Weight,
}

#[derive(Debug, Clone)]
pub struct ConstructiveState<'a> {
    inst: &'a Instance,
    machines: Vec<MachineState>,
    unscheduled: Vec<bool>,
    remaining: usize,
    job_remaining: Vec<i64>,
    schedule: Vec<Vec<Batch>>,
}

impl<'a> ConstructiveState<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        let machines = inst
            .machines()
            .iter()
            .map(|m| MachineState {
                batch_start: m.release,
                completion: m.release,
                load: 0,
                family: None,
                batch_ops: Vec::new(),
                batch_weight: Weight::from_integer(0),
            })
            .collect();
        let job_remaining = (0..inst.num_jobs()).map(|j| inst.ops_of_job(j).len() as i64).collect();
        ConstructiveState {
            inst,
            machines,
            unscheduled: vec![true; inst.num_operations()],
            remaining: inst.num_operations(),
            job_remaining,
            schedule: vec![Vec::new(); inst.num_machines()],
        }
    }

    pub fn is_done(&self) -> bool {
        self.remaining == 0
    }

    pub fn is_unscheduled(&self, op: OpId) -> bool {
        self.unscheduled[op]
    }

    /// Machine completion time `C_k`.
    pub fn machine_completion(&self, k: MachineId) -> Time {
        self.machines[k].completion
    }

    /// Start of the current batch on machine `k`.
    pub fn batch_start(&self, k: MachineId) -> Time {
        self.machines[k].batch_start
    }

    /// Adaptive weight: each job weight divided by that job's number of
    /// unscheduled operations, summed over the operation's jobs.
    pub fn adaptive_weight(&self, op: OpId) -> Weight {
        self.inst
            .op(op)
            .jobs
            .iter()
            .map(|&j| Weight::new(self.inst.weight(j) as i128, self.job_remaining[j].max(1) as i128))
            .fold(Weight::from_integer(0), |a, b| a + b)
    }

    pub fn priority(&self, op: OpId) -> Priority {
        let o = self.inst.op(op);
        let earliest = o
            .eligible
            .iter()
            .map(|&k| self.machines[k].completion)
            .min()
            .unwrap_or(0);
        Priority {
            weight: self.adaptive_weight(op),
            denom: (earliest.max(o.release) + o.proc_time + self.inst.setup(o.family)) as i128,
        }
    }

    /// Unscheduled operation with the largest priority, lowest id on ties.
    pub fn select(&self) -> Option<OpId> {
        let mut best: Option<(OpId, Priority)> = None;
        for op in (0..self.unscheduled.len()).filter(|&i| self.unscheduled[i]) {
            let p = self.priority(op);
            if best.as_ref().is_none_or(|(_, bp)| p > *bp) {
                best = Some((op, p));
            }
        }
        best.map(|(op, _)| op)
    }

    /// Current-batch and new-batch placements of `op` on each eligible machine,
    /// in machine order with the current-batch option first.
    pub fn insertion_candidates(&self, op: OpId) -> Vec<Candidate> {
        let inst = self.inst;
        let o = inst.op(op);
        let w = self.adaptive_weight(op);
        let fits_somewhere = o.eligible.iter().any(|&k| o.size <= inst.machine(k).capacity);
        let mut out = Vec::new();
        for &k in &o.eligible {
            let ms = &self.machines[k];
            let cap = inst.machine(k).capacity;
            if ms.family == Some(o.family) && ms.load + o.size <= cap {
                let shift = (o.release - ms.batch_start).max(0);
                let completion = ms.completion + shift + o.proc_time;
                let cost = w * Weight::from_integer(completion as i128)
                    + ms.batch_weight * Weight::from_integer(shift as i128);
                out.push(Candidate { machine: k, mode: InsertMode::CurrentBatch, completion, cost });
            }
            if o.size <= cap || !fits_somewhere {
                let completion = o.release.max(ms.completion) + inst.setup(o.family) + o.proc_time;
                let cost = w * Weight::from_integer(completion as i128);
                out.push(Candidate { machine: k, mode: InsertMode::NewBatch, completion, cost });
            }
        }
        out
    }

    /// Applies a placement produced by [`Self::insertion_candidates`].
    pub fn assign(&mut self, op: OpId, cand: &Candidate) {
        let inst = self.inst;
        let o = inst.op(op);
        let w = self.adaptive_weight(op);
        let ms = &mut self.machines[cand.machine];
        match cand.mode {
            InsertMode::CurrentBatch => {
                ms.batch_start = ms.batch_start.max(o.release);
                ms.load += o.size;
                ms.batch_ops.push(op);
                ms.batch_weight += w;
                self.schedule[cand.machine].last_mut().expect("current batch").ops.push(op);
            }
            InsertMode::NewBatch => {
                ms.batch_start = o.release.max(ms.completion);
                ms.load = o.size;
                ms.batch_ops.clear();
                ms.batch_ops.push(op);
                ms.batch_weight = w;
                self.schedule[cand.machine].push(Batch::new(o.family, vec![op]));
            }
        }
        ms.completion = cand.completion;
        ms.family = Some(o.family);
        self.unscheduled[op] = false;
        self.remaining -= 1;
        for &j in &o.jobs {
            self.job_remaining[j] -= 1;
        }
    }

    /// Runs one dispatch step. Returns the placed operation and its placement.
    pub fn step(&mut self) -> Option<(OpId, Candidate)> {
        let op = self.select()?;
        let cands = self.insertion_candidates(op);
        let best = cands
            .into_iter()
            .reduce(|a, b| if b.cost < a.cost { b } else { a })?;
        self.assign(op, &best);
        Some((op, best))
    }

    pub fn partial_solution(&self) -> Solution {
        Solution { machines: self.schedule.clone() }
    }

    pub fn into_solution(self) -> Solution {
        Solution { machines: self.schedule }
    }
}

/// Builds a complete solution with the WMCT-WAVGA rule.
pub fn wmct_wavga(inst: &Instance) -> Solution {
    let mut state = ConstructiveState::new(inst);
    while !state.is_done() {
        if state.step().is_none() {
            break;
        }
    }
    state.into_solution()
}
