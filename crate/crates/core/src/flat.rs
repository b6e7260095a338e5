//! Flat machine sequences and incremental cost bookkeeping used by the search.
//!
//! A machine is stored as its operations in processing order plus a `head`
//! flag marking the first operation of every batch. The sequence is kept
//! normalized: position 0 and every family change are heads. A head whose
//! family equals its predecessor's is a deliberate split.

use crate::eval::penalized_delta;
use crate::model::{Batch, Cost, FamilyId, Instance, JobId, MachineId, OpCore, OpId, Solution, Time};

pub(crate) const UNSCHEDULED: usize = usize::MAX;

#[derive(Debug, Default, PartialEq, Eq)]
pub(crate) struct MachineSeq {
    pub ops: Vec<OpId>,
    pub head: Vec<bool>,
}

impl Clone for MachineSeq {
    fn clone(&self) -> Self {
        MachineSeq { ops: self.ops.clone(), head: self.head.clone() }
    }

    fn clone_from(&mut self, source: &Self) {
        self.ops.clone_from(&source.ops);
        self.head.clone_from(&source.head);
    }
}

impl MachineSeq {
    pub fn from_batches(batches: &[Batch]) -> Self {
        let mut seq = MachineSeq::default();
        for b in batches {
            for (s, &op) in b.ops.iter().enumerate() {
                seq.ops.push(op);
                seq.head.push(s == 0);
            }
        }
        seq
    }

    pub fn to_batches(&self, inst: &Instance) -> Vec<Batch> {
        let mut out: Vec<Batch> = Vec::new();
        for (i, &op) in self.ops.iter().enumerate() {
            if self.head[i] || out.is_empty() {
                out.push(Batch::new(inst.op(op).family, Vec::new()));
            }
            out.last_mut().unwrap().ops.push(op);
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    /// Index of the first operation of every batch.
    pub fn starts_into(&self, out: &mut Vec<usize>) {
        out.clear();
        out.extend((0..self.ops.len()).filter(|&i| self.head[i]));
    }

    #[inline]
    fn fam(inst: &Instance, op: OpId) -> FamilyId {
        inst.op(op).family
    }

    #[inline]
    fn renorm(&mut self, inst: &Instance, i: usize) {
        if i < self.ops.len() {
            let brk = i == 0 || Self::fam(inst, self.ops[i]) != Self::fam(inst, self.ops[i - 1]);
            self.head[i] |= brk;
        }
    }

    /// Puts `op` in place of the operation at `pos`. A family mismatch with the
    /// hosting batch splits it around the newcomer.
    pub fn replace(&mut self, inst: &Instance, pos: usize, op: OpId) {
        self.ops[pos] = op;
        self.renorm(inst, pos);
        self.renorm(inst, pos + 1);
    }

    pub fn remove(&mut self, pos: usize) -> OpId {
        if self.head[pos] && pos + 1 < self.ops.len() && !self.head[pos + 1] {
            self.head[pos + 1] = true;
        }
        self.head.remove(pos);
        self.ops.remove(pos)
    }

    /// Inserts `op` at `slot` of the batch starting at flat index `start`.
    pub fn insert_in_batch(&mut self, inst: &Instance, start: usize, slot: usize, op: OpId) {
        let pos = start + slot;
        let batch_family = Self::fam(inst, self.ops[start]);
        if Self::fam(inst, op) == batch_family {
            if slot == 0 {
                self.ops.insert(pos, op);
                self.head.insert(pos, true);
                self.head[pos + 1] = false;
            } else {
                self.ops.insert(pos, op);
                self.head.insert(pos, false);
            }
        } else {
            self.ops.insert(pos, op);
            self.head.insert(pos, true);
            if pos + 1 < self.ops.len() {
                self.head[pos + 1] = true;
            }
        }
    }

    /// Inserts `op` as a singleton batch at flat index `pos`, which must be a
    /// batch boundary.
    pub fn insert_new_batch(&mut self, pos: usize, op: OpId) {
        self.ops.insert(pos, op);
        self.head.insert(pos, true);
    }
}

/// Evaluates a machine sequence, reporting each `(op, completion)`.
/// Returns `(finish, capacity excess)`.
#[inline]
pub(crate) fn eval_seq(
    inst: &Instance,
    machine: MachineId,
    seq: &MachineSeq,
    mut sink: impl FnMut(OpId, &OpCore, Time),
) -> (Time, i64) {
    let mach = inst.machine(machine);
    let ops = &seq.ops[..];
    let head = &seq.head[..ops.len()];
    let n = ops.len();
    let mut ready = mach.release;
    let mut excess = 0;
    let mut i = 0;
    while i < n {
        let first = inst.core(ops[i]);
        let mut start = ready.max(first.release);
        let mut load = first.size;
        let mut j = i + 1;
        while j < n && !head[j] {
            let c = inst.core(ops[j]);
            start = start.max(c.release);
            load += c.size;
            j += 1;
        }
        if load > mach.capacity {
            excess += load - mach.capacity;
        }
        let mut cursor = start + first.setup;
        for &o in &ops[i..j] {
            let c = inst.core(o);
            cursor += c.proc_time;
            sink(o, c, cursor);
        }
        ready = cursor;
        i = j;
    }
    (ready, excess)
}

/// Current solution in flat form with cached completions, plus scratch space
/// for scoring candidate machine sequences without committing them.
///
/// For every job the workspace keeps the latest completion of its operations
/// on each machine and the three largest of those per-machine values, so a
/// change confined to one or two machines is scored from the changed machines
/// alone.
#[derive(Clone)]
pub(crate) struct Workspace<'a> {
    pub inst: &'a Instance,
    pub seqs: Vec<MachineSeq>,
    pub op_machine: Vec<usize>,
    pub completion: Vec<Time>,
    pub excess: Vec<i64>,
    pub twct: Cost,
    pub violation: i64,
    job_machine_max: Vec<Time>,
    jobs: Vec<JobState>,
    stamp: u32,
    touched: Vec<JobId>,
    cand_excess: Vec<(MachineId, i64)>,
}

#[derive(Debug, Clone, Copy)]
struct JobState {
    weight: Cost,
    completion: Time,
    top: [(Time, usize); 3],
    mark: u32,
    new: Time,
}

/// One machine of a two-machine change, evaluated ahead of time.
#[derive(Debug, Clone, Default)]
pub(crate) struct Prepared {
    machine: MachineId,
    excess: i64,
    len: usize,
    jobs: Vec<(JobId, Time)>,
}

const NO_MACHINE: usize = usize::MAX;

impl<'a> Workspace<'a> {
    pub fn new(inst: &'a Instance, sol: &Solution) -> Self {
        let seqs = sol.machines.iter().map(|b| MachineSeq::from_batches(b)).collect();
        Self::from_seqs(inst, seqs)
    }

    pub fn from_seqs(inst: &'a Instance, seqs: Vec<MachineSeq>) -> Self {
        let (o, n, m) = (inst.num_operations(), inst.num_jobs(), inst.num_machines());
        let mut ws = Workspace {
            inst,
            seqs,
            op_machine: vec![UNSCHEDULED; o],
            completion: vec![0; o],
            excess: vec![0; m],
            twct: 0,
            violation: 0,
            job_machine_max: vec![0; n * m],
            jobs: (0..n)
                .map(|j| JobState { weight: inst.weight(j), completion: 0, top: [(0, NO_MACHINE); 3], mark: 0, new: 0 })
                .collect(),
            stamp: 0,
            touched: Vec::new(),
            cand_excess: Vec::new(),
        };
        ws.recompute();
        ws
    }

    /// Full re-evaluation of the cached values.
    pub fn recompute(&mut self) {
        let inst = self.inst;
        let m = inst.num_machines();
        self.op_machine.fill(UNSCHEDULED);
        self.completion.fill(0);
        self.job_machine_max.fill(0);
        self.violation = 0;
        for (k, seq) in self.seqs.iter().enumerate() {
            let (completion, op_machine, jmm) = (&mut self.completion, &mut self.op_machine, &mut self.job_machine_max);
            let (_, ex) = eval_seq(inst, k, seq, |op, oc, c| {
                completion[op] = c;
                op_machine[op] = k;
                for &j in inst.jobs_in(oc) {
                    let e = &mut jmm[j * m + k];
                    *e = (*e).max(c);
                }
            });
            self.excess[k] = ex;
            self.violation += ex;
        }
        self.twct = 0;
        for j in 0..inst.num_jobs() {
            self.rebuild_top(j);
            self.twct += self.jobs[j].weight * self.jobs[j].completion;
        }
    }

    fn rebuild_top(&mut self, j: JobId) {
        let m = self.inst.num_machines();
        let mut top = [(0, NO_MACHINE); 3];
        for (k, &c) in self.job_machine_max[j * m..(j + 1) * m].iter().enumerate() {
            if c > top[2].0 {
                top[2] = (c, k);
                if top[2].0 > top[1].0 {
                    top.swap(1, 2);
                    if top[1].0 > top[0].0 {
                        top.swap(0, 1);
                    }
                }
            }
        }
        let js = &mut self.jobs[j];
        js.top = top;
        js.completion = top[0].0;
    }

    #[cfg(test)]
    pub fn job_completions(&self) -> Vec<Time> {
        self.jobs.iter().map(|js| js.completion).collect()
    }

    pub fn to_solution(&self) -> Solution {
        Solution {
            machines: self.seqs.iter().map(|s| s.to_batches(self.inst)).collect(),
        }
    }

    pub fn num_scheduled(&self) -> usize {
        self.seqs.iter().map(MachineSeq::len).sum()
    }

    fn next_stamp(&mut self) {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.jobs.iter_mut().for_each(|js| js.mark = 0);
            self.stamp = 1;
        }
    }

    /// Evaluates the changed machines and returns the candidate
    /// `(twct, violation)`. Affected jobs are left in `touched` with their
    /// latest completion on the changed machines in `JobState::new`.
    ///
    /// A change may move operations between the changed machines, add
    /// operations to them or remove operations from them, but may not both
    /// add and remove.
    fn stage(&mut self, changes: &[(MachineId, &MachineSeq)]) -> (Cost, i64) {
        debug_assert!(changes.len() <= 2);
        self.begin();
        let mut violation = self.violation;
        let (mut new_len, mut old_len) = (0, 0);
        for &(k, seq) in changes {
            let ex = self.absorb(k, seq);
            violation += ex - self.excess[k];
            new_len += seq.len();
            old_len += self.seqs[k].len();
        }
        if new_len < old_len {
            let stamp = self.stamp;
            for &(k, _) in changes {
                for &op in &self.seqs[k].ops {
                    for &j in self.inst.jobs_of(op) {
                        let js = &mut self.jobs[j];
                        if js.mark != stamp {
                            js.mark = stamp;
                            js.new = 0;
                            self.touched.push(j);
                        }
                    }
                }
            }
        }
        let k1 = changes.first().map_or(NO_MACHINE, |c| c.0);
        let k2 = changes.get(1).map_or(NO_MACHINE, |c| c.0);
        (self.finish(k1, k2), violation)
    }

    fn begin(&mut self) {
        self.next_stamp();
        self.touched.clear();
        self.cand_excess.clear();
    }

    /// Evaluates one candidate machine into the marked jobs.
    #[inline]
    fn absorb(&mut self, k: MachineId, seq: &MachineSeq) -> i64 {
        let stamp = self.stamp;
        let (jobs, touched) = (&mut self.jobs, &mut self.touched);
        let inst = self.inst;
        let (_, ex) = eval_seq(inst, k, seq, |_, oc, c| {
            for &j in inst.jobs_in(oc) {
                let js = &mut jobs[j];
                if js.mark != stamp {
                    js.mark = stamp;
                    js.new = c;
                    touched.push(j);
                } else if c > js.new {
                    js.new = c;
                }
            }
        });
        self.cand_excess.push((k, ex));
        ex
    }

    fn finish(&self, k1: MachineId, k2: MachineId) -> Cost {
        let mut twct = self.twct;
        for &j in &self.touched {
            let js = &self.jobs[j];
            let outside = js.top.iter().find(|e| e.1 != k1 && e.1 != k2).map_or(0, |e| e.0);
            twct += js.weight * (outside.max(js.new) - js.completion);
        }
        twct
    }

    /// Evaluates one side of a two-machine change once, for reuse by
    /// [`Workspace::delta_prepared`].
    pub fn prepare(&mut self, k: MachineId, seq: &MachineSeq, out: &mut Prepared) {
        self.begin();
        out.excess = self.absorb(k, seq);
        out.machine = k;
        out.len = seq.len();
        out.jobs.clear();
        out.jobs.extend(self.touched.iter().map(|&j| (j, self.jobs[j].new)));
    }

    /// Same as `delta(&[(prepared machine, prepared seq), (k, seq)], rho)`.
    pub fn delta_prepared(&mut self, pre: &Prepared, k: MachineId, seq: &MachineSeq, rho: f64) -> f64 {
        debug_assert!(k != pre.machine);
        debug_assert_eq!(pre.len + seq.len(), self.seqs[pre.machine].len() + self.seqs[k].len());
        self.begin();
        let stamp = self.stamp;
        for &(j, c) in &pre.jobs {
            let js = &mut self.jobs[j];
            js.mark = stamp;
            js.new = c;
            self.touched.push(j);
        }
        self.cand_excess.push((pre.machine, pre.excess));
        let ex = self.absorb(k, seq);
        let violation = self.violation + pre.excess - self.excess[pre.machine] + ex - self.excess[k];
        let twct = self.finish(pre.machine, k);
        penalized_delta(twct, violation, self.twct, self.violation, rho)
    }

    /// Candidate `(twct, violation)` after replacing the given machines.
    pub fn score(&mut self, changes: &[(MachineId, &MachineSeq)]) -> (Cost, i64) {
        self.stage(changes)
    }

    /// `penalized(candidate) - penalized(current)`.
    pub fn delta(&mut self, changes: &[(MachineId, &MachineSeq)], rho: f64) -> f64 {
        let (t, v) = self.stage(changes);
        penalized_delta(t, v, self.twct, self.violation, rho)
    }

    /// Replaces the given machines and updates every cached value.
    pub fn commit(&mut self, changes: &[(MachineId, &MachineSeq)]) {
        let (twct, violation) = self.stage(changes);
        let inst = self.inst;
        let m = inst.num_machines();
        for &(k, _) in changes {
            for &op in &self.seqs[k].ops {
                self.op_machine[op] = UNSCHEDULED;
                self.completion[op] = 0;
            }
        }
        for t in 0..self.touched.len() {
            let j = self.touched[t];
            for &(k, _) in changes {
                self.job_machine_max[j * m + k] = 0;
            }
        }
        for &(k, seq) in changes {
            let (completion, op_machine, jmm) = (&mut self.completion, &mut self.op_machine, &mut self.job_machine_max);
            eval_seq(inst, k, seq, |op, oc, c| {
                completion[op] = c;
                op_machine[op] = k;
                for &j in inst.jobs_in(oc) {
                    let e = &mut jmm[j * m + k];
                    *e = (*e).max(c);
                }
            });
        }
        for t in 0..self.touched.len() {
            let j = self.touched[t];
            self.rebuild_top(j);
        }
        for &(k, ex) in &self.cand_excess {
            self.excess[k] = ex;
        }
        for &(k, seq) in changes {
            self.seqs[k].clone_from(seq);
        }
        self.twct = twct;
        self.violation = violation;
    }

    /// Flat index of the operation at `(machine, batch, slot)`.
    #[cfg(test)]
    pub fn flat_index(&self, machine: MachineId, batch: usize, slot: usize) -> Option<usize> {
        let seq = self.seqs.get(machine)?;
        let start = (0..seq.len()).filter(|&i| seq.head[i]).nth(batch)?;
        let end = (start + 1..seq.len()).find(|&i| seq.head[i]).unwrap_or(seq.len());
        (start + slot < end).then_some(start + slot)
    }
}
