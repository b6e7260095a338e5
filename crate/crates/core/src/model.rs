//! Problem data and the solution representation.
//!
//! An [`Instance`] is immutable once built. A [`Solution`] stores, per machine,
//! an ordered list of [`Batch`]es; each batch carries one family setup followed
//! by its operations in processing order.

use std::fmt;

use serde::{Deserialize, Serialize};

pub type OpId = usize;
pub type JobId = usize;
pub type MachineId = usize;
pub type FamilyId = usize;
/// Integer time units.
pub type Time = i64;
/// Objective values (weighted sums of completion times).
pub type Cost = i64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub proc_time: Time,
    pub release: Time,
    pub size: i64,
    pub family: FamilyId,
    /// Machines allowed to process this operation, ascending.
    pub eligible: Vec<MachineId>,
    /// Jobs this operation belongs to, ascending.
    pub jobs: Vec<JobId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    pub release: Time,
    pub capacity: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    ops: Vec<Operation>,
    weights: Vec<i64>,
    machines: Vec<Machine>,
    setups: Vec<Time>,
    ops_of_job: Vec<Vec<OpId>>,
    eligible: Vec<bool>,
    core: Vec<OpCore>,
    job_list: Vec<JobId>,
}

/// Timing data of one operation packed for the evaluation loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct OpCore {
    pub proc_time: Time,
    pub release: Time,
    pub size: i64,
    pub setup: Time,
    pub family: FamilyId,
    pub jobs: (u32, u32),
}

impl Instance {
    /// Builds an instance, deriving the job -> operations index from the
    /// per-operation job lists.
    pub fn new(
        machines: Vec<Machine>,
        setups: Vec<Time>,
        weights: Vec<i64>,
        ops: Vec<Operation>,
    ) -> Self {
        let mut ops_of_job = vec![Vec::new(); weights.len()];
        for (i, op) in ops.iter().enumerate() {
            for &j in &op.jobs {
                if let Some(list) = ops_of_job.get_mut(j) {
                    list.push(i);
                }
            }
        }
        Self::with_job_index(machines, setups, weights, ops, ops_of_job)
    }

    /// Builds an instance with an explicit job -> operations index. The index
    /// is not checked here; see [`validate_instance`].
    pub fn with_job_index(
        machines: Vec<Machine>,
        setups: Vec<Time>,
        weights: Vec<i64>,
        ops: Vec<Operation>,
        ops_of_job: Vec<Vec<OpId>>,
    ) -> Self {
        let m = machines.len();
        let mut eligible = vec![false; ops.len() * m];
        for (i, op) in ops.iter().enumerate() {
            for &k in &op.eligible {
                if k < m {
                    eligible[i * m + k] = true;
                }
            }
        }
        let mut job_list = Vec::new();
        let mut core = Vec::with_capacity(ops.len());
        for op in &ops {
            let start = job_list.len() as u32;
            job_list.extend_from_slice(&op.jobs);
            core.push(OpCore {
                proc_time: op.proc_time,
                release: op.release,
                size: op.size,
                setup: setups.get(op.family).copied().unwrap_or(0),
                family: op.family,
                jobs: (start, job_list.len() as u32),
            });
        }
        Instance {
            ops,
            weights,
            machines,
            setups,
            ops_of_job,
            eligible,
            core,
            job_list,
        }
    }

    pub fn num_operations(&self) -> usize {
        self.ops.len()
    }

    pub fn num_jobs(&self) -> usize {
        self.weights.len()
    }

    pub fn num_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn num_families(&self) -> usize {
        self.setups.len()
    }

    #[inline]
    pub fn op(&self, i: OpId) -> &Operation {
        &self.ops[i]
    }

    pub fn operations(&self) -> &[Operation] {
        &self.ops
    }

    #[inline]
    pub fn machine(&self, k: MachineId) -> &Machine {
        &self.machines[k]
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    #[inline]
    pub fn setup(&self, g: FamilyId) -> Time {
        self.setups[g]
    }

    pub fn setups(&self) -> &[Time] {
        &self.setups
    }

    #[inline]
    pub fn weight(&self, j: JobId) -> i64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    #[inline]
    pub fn ops_of_job(&self, j: JobId) -> &[OpId] {
        &self.ops_of_job[j]
    }

    #[inline]
    pub(crate) fn core(&self, i: OpId) -> &OpCore {
        &self.core[i]
    }

    /// Jobs of operation `i`.
    #[inline]
    pub(crate) fn jobs_of(&self, i: OpId) -> &[JobId] {
        self.jobs_in(&self.core[i])
    }

    #[inline]
    pub(crate) fn jobs_in(&self, c: &OpCore) -> &[JobId] {
        &self.job_list[c.jobs.0 as usize..c.jobs.1 as usize]
    }

    #[inline]
    pub fn is_eligible(&self, i: OpId, k: MachineId) -> bool {
        k < self.machines.len() && self.eligible[i * self.machines.len() + k]
    }
}

/// One broken instance invariant, with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceViolation {
    NoEligibleMachine { op: OpId },
    UnknownMachine { op: OpId, machine: MachineId },
    UnknownFamily { op: OpId, family: FamilyId },
    UnknownJob { op: OpId, job: JobId },
    NoJob { op: OpId },
    EmptyJob { job: JobId },
    DuplicateEntry { op: OpId },
    InverseMismatch { op: OpId, job: JobId },
    NegativeValue { what: &'static str, index: usize },
    NonPositiveWeight { job: JobId },
    OversizedOperation { op: OpId },
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use InstanceViolation::*;
        match self {
            NoEligibleMachine { op } => write!(f, "operation {op} has no eligible machine"),
            UnknownMachine { op, machine } => {
                write!(f, "operation {op} lists unknown machine {machine}")
            }
            UnknownFamily { op, family } => {
                write!(f, "operation {op} has unknown family {family}")
            }
            UnknownJob { op, job } => write!(f, "operation {op} lists unknown job {job}"),
            NoJob { op } => write!(f, "operation {op} belongs to no job"),
            EmptyJob { job } => write!(f, "job {job} has no operation"),
            DuplicateEntry { op } => write!(f, "operation {op} has a repeated list entry"),
            InverseMismatch { op, job } => write!(
                f,
                "job index and operation {op} disagree about membership in job {job}"
            ),
            NegativeValue { what, index } => write!(f, "negative {what} at index {index}"),
            NonPositiveWeight { job } => write!(f, "job {job} has weight < 1"),
            OversizedOperation { op } => write!(
                f,
                "operation {op} is larger than the capacity of every eligible machine"
            ),
        }
    }
}

fn has_duplicates(list: &[usize]) -> bool {
    let mut sorted = list.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Reports every broken instance invariant. An empty report means the
/// instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<InstanceViolation> {
    use InstanceViolation::*;
    let mut out = Vec::new();
    let (m, n, f) = (inst.num_machines(), inst.num_jobs(), inst.num_families());

    for (k, mach) in inst.machines.iter().enumerate() {
        if mach.release < 0 {
            out.push(NegativeValue { what: "machine release", index: k });
        }
        if mach.capacity < 0 {
            out.push(NegativeValue { what: "machine capacity", index: k });
        }
    }
    for (g, &s) in inst.setups.iter().enumerate() {
        if s < 0 {
            out.push(NegativeValue { what: "setup time", index: g });
        }
    }
    for (j, &w) in inst.weights.iter().enumerate() {
        if w < 1 {
            out.push(NonPositiveWeight { job: j });
        }
    }

    for (i, op) in inst.ops.iter().enumerate() {
        if op.proc_time < 0 {
            out.push(NegativeValue { what: "processing time", index: i });
        }
        if op.release < 0 {
            out.push(NegativeValue { what: "operation release", index: i });
        }
        if op.size < 0 {
            out.push(NegativeValue { what: "operation size", index: i });
        }
        if op.family >= f {
            out.push(UnknownFamily { op: i, family: op.family });
        }
        if op.eligible.is_empty() {
            out.push(NoEligibleMachine { op: i });
        }
        for &k in &op.eligible {
            if k >= m {
                out.push(UnknownMachine { op: i, machine: k });
            }
        }
        if has_duplicates(&op.eligible) || has_duplicates(&op.jobs) {
            out.push(DuplicateEntry { op: i });
        }
        if op.jobs.is_empty() {
            out.push(NoJob { op: i });
        }
        for &j in &op.jobs {
            if j >= n {
                out.push(UnknownJob { op: i, job: j });
            } else if !inst.ops_of_job.get(j).is_some_and(|l| l.contains(&i)) {
                out.push(InverseMismatch { op: i, job: j });
            }
        }
        let fits = op
            .eligible
            .iter()
            .any(|&k| k < m && inst.machines[k].capacity >= op.size);
        if !op.eligible.is_empty() && !fits {
            out.push(OversizedOperation { op: i });
        }
    }

    for j in 0..n {
        let list = inst.ops_of_job.get(j).map(Vec::as_slice).unwrap_or(&[]);
        if list.is_empty() {
            out.push(EmptyJob { job: j });
        }
        for &i in list {
            if i >= inst.ops.len() || !inst.ops[i].jobs.contains(&j) {
                out.push(InverseMismatch { op: i, job: j });
            }
        }
    }
    if inst.ops_of_job.len() != n {
        out.push(InverseMismatch { op: usize::MAX, job: inst.ops_of_job.len() });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Batch {
    pub family: FamilyId,
    pub ops: Vec<OpId>,
}

impl Batch {
    pub fn new(family: FamilyId, ops: Vec<OpId>) -> Self {
        Batch { family, ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Per-machine batch sequences. Partial solutions simply leave some
/// operations out.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution {
    pub machines: Vec<Vec<Batch>>,
}

impl Solution {
    pub fn empty(num_machines: usize) -> Self {
        Solution {
            machines: vec![Vec::new(); num_machines],
        }
    }

    pub fn num_scheduled(&self) -> usize {
        self.machines
            .iter()
            .flat_map(|bs| bs.iter())
            .map(Batch::len)
            .sum()
    }

    /// Iterates `(machine, batch index, slot, op)` in canonical order.
    pub fn positions(&self) -> impl Iterator<Item = (MachineId, usize, usize, OpId)> + '_ {
        self.machines.iter().enumerate().flat_map(|(k, bs)| {
            bs.iter().enumerate().flat_map(move |(b, batch)| {
                batch.ops.iter().enumerate().map(move |(s, &op)| (k, b, s, op))
            })
        })
    }

    /// Position of `op`, if scheduled.
    pub fn locate(&self, op: OpId) -> Option<(MachineId, usize, usize)> {
        self.positions()
            .find(|&(_, _, _, o)| o == op)
            .map(|(k, b, s, _)| (k, b, s))
    }
}
