//! Neighborhood moves and randomized variable neighborhood descent (RVND).
//!
//! Four neighborhoods are used:
//!
//! * **Swap** exchanges two operations. When an operation lands in a batch of
//!   another family, the hosting batch is split into prefix, singleton and
//!   suffix batches.
//! * **Relocate** removes one operation and inserts it elsewhere, either inside
//!   a batch (with the same splitting rule) or as a new singleton batch at a
//!   batch boundary. Batches emptied by a removal disappear with their setup.
//! * **SplitBatches** inserts a setup between two consecutive operations of a
//!   batch.
//! * **MergeBatches** removes the setup of a batch preceded by a batch of the
//!   same family.
//!
//! Capacity is relaxed during the search: moves may overload a batch and are
//! compared by penalized cost. Eligibility and family homogeneity are hard.
//!
//! Neighbors are scanned in a fixed canonical order (machine, batch, slot,
//! lexicographic), so a first-improvement scan is deterministic.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::flat::{MachineSeq, Prepared, Workspace};
use crate::model::{Batch, Instance, MachineId, OpId, Solution};

/// Strict-improvement threshold on penalized cost differences.
pub(crate) const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpPosition {
    pub machine: MachineId,
    pub batch: usize,
    pub slot: usize,
}

impl OpPosition {
    pub fn new(machine: MachineId, batch: usize, slot: usize) -> Self {
        OpPosition { machine, batch, slot }
    }
}

/// Where an operation is inserted. Indices refer to the solution after the
/// operation has been taken out of its previous place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InsertionPoint {
    /// Before the operation currently at `slot` of `batch` (`slot == len` appends).
    InBatch { machine: MachineId, batch: usize, slot: usize },
    /// A new singleton batch placed before batch `boundary` (`boundary == #batches` appends).
    NewBatch { machine: MachineId, boundary: usize },
}

impl InsertionPoint {
    pub fn machine(&self) -> MachineId {
        match *self {
            InsertionPoint::InBatch { machine, .. } | InsertionPoint::NewBatch { machine, .. } => machine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeighborhoodId {
    Swap = 1,
    Relocate = 2,
    SplitBatches = 3,
    MergeBatches = 4,
}

impl NeighborhoodId {
    pub const ALL: [NeighborhoodId; 4] = [
        NeighborhoodId::Swap,
        NeighborhoodId::Relocate,
        NeighborhoodId::SplitBatches,
        NeighborhoodId::MergeBatches,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Swap { a: OpPosition, b: OpPosition },
    Relocate { from: OpPosition, to: InsertionPoint },
    Split { machine: MachineId, batch: usize, slot: usize },
    Merge { machine: MachineId, batch: usize },
}

impl Move {
    pub fn neighborhood(&self) -> NeighborhoodId {
        match self {
            Move::Swap { .. } => NeighborhoodId::Swap,
            Move::Relocate { .. } => NeighborhoodId::Relocate,
            Move::Split { .. } => NeighborhoodId::SplitBatches,
            Move::Merge { .. } => NeighborhoodId::MergeBatches,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidMove(msg.into())
}

/// `(start, end)` flat range of batch `batch` given the batch starts.
#[inline]
fn batch_range(starts: &[usize], len: usize, batch: usize) -> (usize, usize) {
    (starts[batch], starts.get(batch + 1).copied().unwrap_or(len))
}

/// Calls `f` for every insertion point of `op` into `seq` on `machine`, in
/// canonical order: for each batch its in-batch slots, then the boundary
/// before it; finally the trailing boundary.
///
/// Operations of the batch family may go into any slot; other families only
/// into interior slots (the end slots would duplicate a boundary). Boundaries
/// next to a batch of the operation's family are skipped; those neighbors are
/// reached through the in-batch end slots and SplitBatches.
pub(crate) fn for_each_insertion(
    inst: &Instance,
    machine: MachineId,
    seq: &MachineSeq,
    starts: &[usize],
    op: OpId,
    mut f: impl FnMut(InsertionPoint) -> bool,
) -> bool {
    let g = inst.op(op).family;
    let nb = starts.len();
    let fam_of = |b: usize| inst.op(seq.ops[starts[b]]).family;
    for b in 0..=nb {
        if b < nb {
            let (s, e) = batch_range(starts, seq.len(), b);
            let len = e - s;
            let slots = if fam_of(b) == g { 0..len + 1 } else { 1..len };
            for slot in slots {
                if f(InsertionPoint::InBatch { machine, batch: b, slot }) {
                    return true;
                }
            }
        }
        let adjacent_same = (b > 0 && fam_of(b - 1) == g) || (b < nb && fam_of(b) == g);
        if !adjacent_same && f(InsertionPoint::NewBatch { machine, boundary: b }) {
            return true;
        }
    }
    false
}

/// Applies an insertion point to a machine sequence.
pub(crate) fn insert_at(inst: &Instance, seq: &mut MachineSeq, starts: &[usize], op: OpId, at: InsertionPoint) -> Result<()> {
    match at {
        InsertionPoint::InBatch { batch, slot, .. } => {
            if batch >= starts.len() {
                return Err(invalid(format!("batch {batch} out of range")));
            }
            let (s, e) = batch_range(starts, seq.len(), batch);
            if slot > e - s {
                return Err(invalid(format!("slot {slot} out of range")));
            }
            seq.insert_in_batch(inst, s, slot, op);
        }
        InsertionPoint::NewBatch { boundary, .. } => {
            if boundary > starts.len() {
                return Err(invalid(format!("boundary {boundary} out of range")));
            }
            let pos = starts.get(boundary).copied().unwrap_or(seq.len());
            seq.insert_new_batch(pos, op);
        }
    }
    Ok(())
}

/// Which scratch buffers hold the rebuilt machines of a move.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Changed {
    One(MachineId),
    Two(MachineId, MachineId),
}

/// Reusable buffers for building and scoring neighbors.
#[derive(Default, Clone)]
pub(crate) struct Scanner {
    pub bufs: [MachineSeq; 2],
    starts: Vec<Vec<usize>>,
    tmp: MachineSeq,
    tmp_starts: Vec<usize>,
    targets: Vec<InsertionPoint>,
    moves: Vec<Move>,
    prepared: Prepared,
}

impl Scanner {
    pub fn new() -> Self {
        Self::default()
    }

    fn refresh(&mut self, ws: &Workspace<'_>) {
        self.starts.resize(ws.seqs.len(), Vec::new());
        for (k, seq) in ws.seqs.iter().enumerate() {
            seq.starts_into(&mut self.starts[k]);
        }
    }

    fn position(&self, ws: &Workspace<'_>, p: OpPosition) -> Result<usize> {
        let starts = self.starts.get(p.machine).ok_or(Error::UnknownMachine(p.machine))?;
        if p.batch >= starts.len() {
            return Err(invalid(format!("batch {} out of range on machine {}", p.batch, p.machine)));
        }
        let (s, e) = batch_range(starts, ws.seqs[p.machine].len(), p.batch);
        if s + p.slot >= e {
            return Err(invalid(format!("slot {} out of range", p.slot)));
        }
        Ok(s + p.slot)
    }

    /// Rebuilds the machines touched by `mv` into `self.bufs`.
    pub fn build(&mut self, ws: &Workspace<'_>, mv: &Move) -> Result<Changed> {
        self.refresh(ws);
        self.build_fresh(ws, mv)
    }

    /// Same as [`Self::build`] but assumes `refresh` was called for the current `ws`.
    fn build_fresh(&mut self, ws: &Workspace<'_>, mv: &Move) -> Result<Changed> {
        let inst = ws.inst;
        match *mv {
            Move::Swap { a, b } => {
                if a == b {
                    return Err(invalid("swap of a position with itself"));
                }
                let fa = self.position(ws, a)?;
                let fb = self.position(ws, b)?;
                let x = ws.seqs[a.machine].ops[fa];
                let y = ws.seqs[b.machine].ops[fb];
                if !inst.is_eligible(x, b.machine) {
                    return Err(Error::Ineligible { op: x, machine: b.machine });
                }
                if !inst.is_eligible(y, a.machine) {
                    return Err(Error::Ineligible { op: y, machine: a.machine });
                }
                if a.machine == b.machine {
                    let buf = &mut self.bufs[0];
                    buf.clone_from(&ws.seqs[a.machine]);
                    buf.replace(inst, fa, y);
                    buf.replace(inst, fb, x);
                    Ok(Changed::One(a.machine))
                } else {
                    let [ba, bb] = &mut self.bufs;
                    ba.clone_from(&ws.seqs[a.machine]);
                    ba.replace(inst, fa, y);
                    bb.clone_from(&ws.seqs[b.machine]);
                    bb.replace(inst, fb, x);
                    Ok(Changed::Two(a.machine, b.machine))
                }
            }
            Move::Relocate { from, to } => {
                let ff = self.position(ws, from)?;
                let x = ws.seqs[from.machine].ops[ff];
                let target = to.machine();
                if target >= ws.seqs.len() {
                    return Err(Error::UnknownMachine(target));
                }
                if !inst.is_eligible(x, target) {
                    return Err(Error::Ineligible { op: x, machine: target });
                }
                let (src_start, src_end) = batch_range(&self.starts[from.machine], ws.seqs[from.machine].len(), from.batch);
                let singleton = src_end - src_start == 1;
                if target == from.machine {
                    let noop = match to {
                        InsertionPoint::InBatch { batch, slot, .. } => !singleton && batch == from.batch && slot == from.slot,
                        InsertionPoint::NewBatch { boundary, .. } => singleton && boundary == from.batch,
                    };
                    if noop {
                        return Err(invalid("relocation to the operation's own position"));
                    }
                    let buf = &mut self.bufs[0];
                    buf.clone_from(&ws.seqs[from.machine]);
                    buf.remove(ff);
                    buf.starts_into(&mut self.tmp_starts);
                    insert_at(inst, buf, &self.tmp_starts, x, to)?;
                    Ok(Changed::One(target))
                } else {
                    let [ba, bb] = &mut self.bufs;
                    ba.clone_from(&ws.seqs[from.machine]);
                    ba.remove(ff);
                    bb.clone_from(&ws.seqs[target]);
                    insert_at(inst, bb, &self.starts[target], x, to)?;
                    Ok(Changed::Two(from.machine, target))
                }
            }
            Move::Split { machine, batch, slot } => {
                let starts = self.starts.get(machine).ok_or(Error::UnknownMachine(machine))?;
                if batch >= starts.len() {
                    return Err(invalid("split of a missing batch"));
                }
                let (s, e) = batch_range(starts, ws.seqs[machine].len(), batch);
                if slot == 0 || s + slot >= e {
                    return Err(invalid(format!("split slot {slot} out of range")));
                }
                let buf = &mut self.bufs[0];
                buf.clone_from(&ws.seqs[machine]);
                buf.head[s + slot] = true;
                Ok(Changed::One(machine))
            }
            Move::Merge { machine, batch } => {
                let starts = self.starts.get(machine).ok_or(Error::UnknownMachine(machine))?;
                if batch == 0 || batch >= starts.len() {
                    return Err(invalid("merge needs a preceding batch"));
                }
                let seq = &ws.seqs[machine];
                if inst.op(seq.ops[starts[batch]]).family != inst.op(seq.ops[starts[batch - 1]]).family {
                    return Err(invalid("merge of batches of different families"));
                }
                let s = starts[batch];
                let buf = &mut self.bufs[0];
                buf.clone_from(seq);
                buf.head[s] = false;
                Ok(Changed::One(machine))
            }
        }
    }

    pub fn delta(&self, ws: &mut Workspace<'_>, ch: Changed, rho: f64) -> f64 {
        match ch {
            Changed::One(k) => ws.delta(&[(k, &self.bufs[0])], rho),
            Changed::Two(a, b) => ws.delta(&[(a, &self.bufs[0]), (b, &self.bufs[1])], rho),
        }
    }

    pub fn commit(&self, ws: &mut Workspace<'_>, ch: Changed) {
        match ch {
            Changed::One(k) => ws.commit(&[(k, &self.bufs[0])]),
            Changed::Two(a, b) => ws.commit(&[(a, &self.bufs[0]), (b, &self.bufs[1])]),
        }
    }

    /// Calls `f` for every move of neighborhood `id` in canonical order until
    /// `f` returns true. Returns whether it stopped early.
    fn for_each_move(&mut self, ws: &Workspace<'_>, id: NeighborhoodId, mut f: impl FnMut(&mut Self, Move) -> bool) -> bool {
        self.refresh(ws);
        let inst = ws.inst;
        let m = ws.seqs.len();
        match id {
            NeighborhoodId::Swap => {
                let positions: Vec<(OpPosition, OpId)> = positions_of(ws, &self.starts);
                for ia in 0..positions.len() {
                    let (pa, x) = positions[ia];
                    for &(pb, y) in &positions[ia + 1..] {
                        if inst.is_eligible(x, pb.machine) && inst.is_eligible(y, pa.machine) && f(self, Move::Swap { a: pa, b: pb }) {
                            return true;
                        }
                    }
                }
                false
            }
            NeighborhoodId::Relocate => {
                let positions: Vec<(OpPosition, OpId)> = positions_of(ws, &self.starts);
                for &(from, x) in &positions {
                    let src_len = {
                        let (s, e) = batch_range(&self.starts[from.machine], ws.seqs[from.machine].len(), from.batch);
                        e - s
                    };
                    // Post-removal view of the source machine.
                    let mut tmp = std::mem::take(&mut self.tmp);
                    let mut tmp_starts = std::mem::take(&mut self.tmp_starts);
                    tmp.clone_from(&ws.seqs[from.machine]);
                    let ff = self.starts[from.machine][from.batch] + from.slot;
                    tmp.remove(ff);
                    tmp.starts_into(&mut tmp_starts);
                    let mut targets = std::mem::take(&mut self.targets);
                    targets.clear();
                    for k in 0..m {
                        if !inst.is_eligible(x, k) {
                            continue;
                        }
                        if k == from.machine {
                            for_each_insertion(inst, k, &tmp, &tmp_starts, x, |p| {
                                let noop = match p {
                                    InsertionPoint::InBatch { batch, slot, .. } => src_len > 1 && batch == from.batch && slot == from.slot,
                                    InsertionPoint::NewBatch { boundary, .. } => src_len == 1 && boundary == from.batch,
                                };
                                if !noop {
                                    targets.push(p);
                                }
                                false
                            });
                        } else {
                            for_each_insertion(inst, k, &ws.seqs[k], &self.starts[k], x, |p| {
                                targets.push(p);
                                false
                            });
                        }
                    }
                    self.tmp = tmp;
                    self.tmp_starts = tmp_starts;
                    for &to in &targets {
                        if f(self, Move::Relocate { from, to }) {
                            return true;
                        }
                    }
                    self.targets = targets;
                }
                false
            }
            NeighborhoodId::SplitBatches => {
                for k in 0..m {
                    let nb = self.starts[k].len();
                    for b in 0..nb {
                        let (s, e) = batch_range(&self.starts[k], ws.seqs[k].len(), b);
                        for slot in 1..e - s {
                            if f(self, Move::Split { machine: k, batch: b, slot }) {
                                return true;
                            }
                        }
                    }
                }
                false
            }
            NeighborhoodId::MergeBatches => {
                for k in 0..m {
                    let seq = &ws.seqs[k];
                    for b in 1..self.starts[k].len() {
                        let fam = |i: usize| inst.op(seq.ops[i]).family;
                        if fam(self.starts[k][b]) == fam(self.starts[k][b - 1]) && f(self, Move::Merge { machine: k, batch: b }) {
                            return true;
                        }
                    }
                }
                false
            }
        }
    }

    /// All moves of a neighborhood in canonical order.
    pub fn moves(&mut self, ws: &Workspace<'_>, id: NeighborhoodId) -> Vec<Move> {
        let mut out = std::mem::take(&mut self.moves);
        out.clear();
        self.for_each_move(ws, id, |_, mv| {
            out.push(mv);
            false
        });
        out
    }

    /// Applies the first strictly improving move of `id`, if any.
    pub fn first_improvement(&mut self, ws: &mut Workspace<'_>, id: NeighborhoodId, rho: f64) -> Option<Move> {
        let moves = self.moves(ws, id);
        let mut found = None;
        let mut source: Option<OpPosition> = None;
        for mv in &moves {
            if let Move::Relocate { from, to } = *mv {
                let target = to.machine();
                if target != from.machine {
                    // The source machine is the same for every target of `from`.
                    if source != Some(from) {
                        let ff = self.position(ws, from).expect("enumerated move is valid");
                        self.bufs[0].clone_from(&ws.seqs[from.machine]);
                        self.bufs[0].remove(ff);
                        ws.prepare(from.machine, &self.bufs[0], &mut self.prepared);
                        source = Some(from);
                    }
                    let x = ws.seqs[from.machine].ops[self.position(ws, from).expect("enumerated move is valid")];
                    let bb = &mut self.bufs[1];
                    bb.clone_from(&ws.seqs[target]);
                    insert_at(ws.inst, bb, &self.starts[target], x, to).expect("enumerated move is valid");
                    if ws.delta_prepared(&self.prepared, target, &self.bufs[1], rho) < -IMPROVEMENT_EPS {
                        self.commit(ws, Changed::Two(from.machine, target));
                        found = Some(*mv);
                        break;
                    }
                    continue;
                }
            }
            source = None;
            let ch = self.build_fresh(ws, mv).expect("enumerated move is valid");
            if self.delta(ws, ch, rho) < -IMPROVEMENT_EPS {
                self.commit(ws, ch);
                found = Some(*mv);
                break;
            }
        }
        self.moves = moves;
        found
    }
}

fn positions_of(ws: &Workspace<'_>, starts: &[Vec<usize>]) -> Vec<(OpPosition, OpId)> {
    let mut out = Vec::with_capacity(ws.num_scheduled());
    for (k, seq) in ws.seqs.iter().enumerate() {
        for (b, _) in starts[k].iter().enumerate() {
            let (s, e) = batch_range(&starts[k], seq.len(), b);
            for i in s..e {
                out.push((OpPosition::new(k, b, i - s), seq.ops[i]));
            }
        }
    }
    out
}

/// Statistics of one RVND descent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RvndStats {
    pub scans: usize,
    pub improvements: usize,
}

pub(crate) fn rvnd_ws(ws: &mut Workspace<'_>, rho: f64, rng: &mut crate::Rng, scanner: &mut Scanner) -> RvndStats {
    let mut stats = RvndStats::default();
    let mut pool: Vec<NeighborhoodId> = NeighborhoodId::ALL.to_vec();
    while !pool.is_empty() {
        let idx = rng.gen_range(0..pool.len());
        let id = pool[idx];
        stats.scans += 1;
        if scanner.first_improvement(ws, id, rho).is_some() {
            stats.improvements += 1;
            pool.clear();
            pool.extend_from_slice(&NeighborhoodId::ALL);
        } else {
            pool.remove(idx);
        }
    }
    stats
}

/// Descends to a solution without strictly improving moves in any of the four
/// neighborhoods. Neighborhoods are drawn uniformly from a pool that is reset
/// after each improvement.
pub fn rvnd(inst: &Instance, sol: &Solution, rho: f64, rng: &mut crate::Rng) -> Solution {
    rvnd_with_stats(inst, sol, rho, rng).0
}

pub fn rvnd_with_stats(inst: &Instance, sol: &Solution, rho: f64, rng: &mut crate::Rng) -> (Solution, RvndStats) {
    let mut ws = Workspace::new(inst, sol);
    let stats = rvnd_ws(&mut ws, rho, rng, &mut Scanner::new());
    (ws.to_solution(), stats)
}

/// First neighbor of `sol` in `id` with strictly lower penalized cost.
pub fn first_improving(inst: &Instance, sol: &Solution, id: NeighborhoodId, rho: f64) -> Option<Solution> {
    let mut ws = Workspace::new(inst, sol);
    Scanner::new().first_improvement(&mut ws, id, rho).map(|_| ws.to_solution())
}

/// Every move of neighborhood `id` applicable to `sol`, in canonical order.
pub fn neighborhood_moves(inst: &Instance, sol: &Solution, id: NeighborhoodId) -> Vec<Move> {
    let ws = Workspace::new(inst, sol);
    Scanner::new().moves(&ws, id)
}

fn check_machines(inst: &Instance, sol: &Solution) -> Result<()> {
    if sol.machines.len() != inst.num_machines() {
        return Err(invalid("solution machine count does not match the instance"));
    }
    Ok(())
}

pub fn apply_move(inst: &Instance, sol: &Solution, mv: &Move) -> Result<Solution> {
    check_machines(inst, sol)?;
    let mut ws = Workspace::new(inst, sol);
    let mut sc = Scanner::new();
    let ch = sc.build(&ws, mv)?;
    sc.commit(&mut ws, ch);
    Ok(ws.to_solution())
}

pub fn apply_swap(inst: &Instance, sol: &Solution, a: OpPosition, b: OpPosition) -> Result<Solution> {
    apply_move(inst, sol, &Move::Swap { a, b })
}

pub fn apply_relocate(inst: &Instance, sol: &Solution, from: OpPosition, to: InsertionPoint) -> Result<Solution> {
    apply_move(inst, sol, &Move::Relocate { from, to })
}

/// Splits batch `batch` of `machine` before `slot`.
pub fn apply_split(sol: &Solution, machine: MachineId, batch: usize, slot: usize) -> Result<Solution> {
    let batches = sol.machines.get(machine).ok_or(Error::UnknownMachine(machine))?;
    let b = batches.get(batch).ok_or_else(|| invalid("split of a missing batch"))?;
    if b.len() < 2 {
        return Err(invalid("split of a singleton batch"));
    }
    if slot == 0 || slot >= b.len() {
        return Err(invalid(format!("split slot {slot} out of range")));
    }
    let mut out = sol.clone();
    let tail = out.machines[machine][batch].ops.split_off(slot);
    out.machines[machine].insert(batch + 1, Batch::new(b.family, tail));
    Ok(out)
}

/// Merges batch `batch` of `machine` into the preceding same-family batch.
pub fn apply_merge(sol: &Solution, machine: MachineId, batch: usize) -> Result<Solution> {
    let batches = sol.machines.get(machine).ok_or(Error::UnknownMachine(machine))?;
    if batch == 0 || batch >= batches.len() {
        return Err(invalid("merge needs a preceding batch"));
    }
    if batches[batch].family != batches[batch - 1].family {
        return Err(invalid("merge of batches of different families"));
    }
    let mut out = sol.clone();
    let tail = out.machines[machine].remove(batch);
    out.machines[machine][batch - 1].ops.extend(tail.ops);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{check_integrity, evaluate_solution, penalized_cost};
    use crate::generate::{generate_small_profile_instance, generate_tiny_instance};
    use crate::model::tests::two_op_instance;
    use crate::model::{Machine, Operation};
    use crate::{constructive::wmct_wavga, rng_from_seed};

    fn op(p: i64, r: i64, l: i64, g: usize, elig: &[usize], jobs: &[usize]) -> Operation {
        Operation { proc_time: p, release: r, size: l, family: g, eligible: elig.to_vec(), jobs: jobs.to_vec() }
    }

    /// Two machines, two families, four jobs.
    fn four_ops() -> Instance {
        Instance::new(
            vec![Machine { release: 0, capacity: 10 }, Machine { release: 2, capacity: 10 }],
            vec![4, 6],
            vec![1, 2, 3, 1],
            vec![
                op(3, 0, 2, 0, &[0, 1], &[0]),
                op(5, 4, 2, 0, &[0, 1], &[1]),
                op(2, 0, 3, 1, &[0, 1], &[2]),
                op(4, 1, 3, 1, &[0, 1], &[3]),
            ],
        )
    }

    fn cost(inst: &Instance, sol: &Solution, rho: f64) -> f64 {
        let ev = evaluate_solution(inst, sol, rho).unwrap();
        penalized_cost(ev.twct, ev.violation, rho)
    }

    fn assert_valid(inst: &Instance, sol: &Solution) {
        assert!(check_integrity(inst, sol, true).is_empty(), "{sol:?}");
    }

    #[test]
    fn swap_within_batch_keeps_structure() {
        let inst = four_ops();
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0, 1])], vec![Batch::new(1, vec![2, 3])]] };
        let out = apply_swap(&inst, &sol, OpPosition::new(0, 0, 0), OpPosition::new(0, 0, 1)).unwrap();
        assert_eq!(out.machines[0], vec![Batch::new(0, vec![1, 0])]);
        assert_eq!(out.machines[1], sol.machines[1]);
        let back = apply_swap(&inst, &out, OpPosition::new(0, 0, 0), OpPosition::new(0, 0, 1)).unwrap();
        assert_eq!(back, sol);
    }

    #[test]
    fn cross_family_swap_splits_both_hosts() {
        let inst = four_ops();
        let sol = Solution {
            machines: vec![vec![Batch::new(0, vec![0, 1])], vec![Batch::new(1, vec![2, 3])]],
        };
        // op 1 (family 0) goes into the family-1 batch at its end slot, op 3 into the family-0 batch end slot.
        let out = apply_swap(&inst, &sol, OpPosition::new(0, 0, 1), OpPosition::new(1, 0, 1)).unwrap();
        assert_valid(&inst, &out);
        assert_eq!(out.machines[0], vec![Batch::new(0, vec![0]), Batch::new(1, vec![3])]);
        assert_eq!(out.machines[1], vec![Batch::new(1, vec![2]), Batch::new(0, vec![1])]);
        let sol3 = Solution {
            machines: vec![vec![Batch::new(0, vec![0, 1])], vec![Batch::new(1, vec![2, 3])]],
        };
        let out3 = apply_swap(&inst, &sol3, OpPosition::new(0, 0, 0), OpPosition::new(1, 0, 0)).unwrap();
        assert_valid(&inst, &out3);
        for k in 0..2 {
            assert!(out3.machines[k].len() <= sol3.machines[k].len() + 2);
        }
    }

    #[test]
    fn swap_of_singleton_batches_is_self_inverse() {
        let inst = four_ops();
        let sol = Solution {
            machines: vec![
                vec![Batch::new(0, vec![0]), Batch::new(1, vec![2])],
                vec![Batch::new(1, vec![3]), Batch::new(0, vec![1])],
            ],
        };
        let a = OpPosition::new(0, 1, 0);
        let b = OpPosition::new(1, 1, 0);
        let out = apply_swap(&inst, &sol, a, b).unwrap();
        assert_valid(&inst, &out);
        assert_eq!(apply_swap(&inst, &out, a, b).unwrap(), sol);
    }

    #[test]
    fn swap_rejects_identical_positions_and_ineligibility() {
        let inst = Instance::new(
            vec![Machine { release: 0, capacity: 5 }, Machine { release: 0, capacity: 5 }],
            vec![1],
            vec![1],
            vec![op(1, 0, 1, 0, &[0], &[0]), op(1, 0, 1, 0, &[0, 1], &[0])],
        );
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0])], vec![Batch::new(0, vec![1])]] };
        let p = OpPosition::new(0, 0, 0);
        assert!(apply_swap(&inst, &sol, p, p).is_err());
        assert!(matches!(
            apply_swap(&inst, &sol, p, OpPosition::new(1, 0, 0)),
            Err(Error::Ineligible { op: 0, machine: 1 })
        ));
    }

    #[test]
    fn relocating_a_singleton_into_its_neighbor_drops_a_setup() {
        let inst = four_ops();
        let sol = Solution {
            machines: vec![vec![Batch::new(0, vec![0]), Batch::new(0, vec![1])], vec![Batch::new(1, vec![2, 3])]],
        };
        let out = apply_relocate(
            &inst,
            &sol,
            OpPosition::new(0, 1, 0),
            InsertionPoint::InBatch { machine: 0, batch: 0, slot: 1 },
        )
        .unwrap();
        assert_eq!(out.machines[0], vec![Batch::new(0, vec![0, 1])]);
    }

    #[test]
    fn relocating_into_another_family_interior_splits_the_host() {
        let inst = four_ops();
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0, 1])], vec![Batch::new(1, vec![2, 3])]] };
        let out = apply_relocate(
            &inst,
            &sol,
            OpPosition::new(0, 0, 0),
            InsertionPoint::InBatch { machine: 1, batch: 0, slot: 1 },
        )
        .unwrap();
        assert_valid(&inst, &out);
        assert_eq!(
            out.machines[1],
            vec![Batch::new(1, vec![2]), Batch::new(0, vec![0]), Batch::new(1, vec![3])]
        );
        assert_eq!(out.machines[0], vec![Batch::new(0, vec![1])]);
    }

    #[test]
    fn relocating_to_an_empty_machine_creates_one_batch() {
        let inst = four_ops();
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0, 1]), Batch::new(1, vec![2, 3])], vec![]] };
        let out = apply_relocate(
            &inst,
            &sol,
            OpPosition::new(0, 1, 1),
            InsertionPoint::NewBatch { machine: 1, boundary: 0 },
        )
        .unwrap();
        assert_eq!(out.machines[1], vec![Batch::new(1, vec![3])]);
        assert_valid(&inst, &out);
    }

    #[test]
    fn relocation_to_own_position_is_rejected() {
        let inst = four_ops();
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0, 1])], vec![Batch::new(1, vec![2, 3])]] };
        let r = apply_relocate(
            &inst,
            &sol,
            OpPosition::new(0, 0, 1),
            InsertionPoint::InBatch { machine: 0, batch: 0, slot: 1 },
        );
        assert!(r.is_err());
    }

    #[test]
    fn relocate_is_invertible() {
        let inst = four_ops();
        let sol = Solution {
            machines: vec![vec![Batch::new(0, vec![0, 1]), Batch::new(1, vec![2])], vec![Batch::new(1, vec![3])]],
        };
        let out = apply_relocate(
            &inst,
            &sol,
            OpPosition::new(0, 1, 0),
            InsertionPoint::InBatch { machine: 1, batch: 0, slot: 0 },
        )
        .unwrap();
        assert_eq!(out.machines[1], vec![Batch::new(1, vec![2, 3])]);
        let back = apply_relocate(
            &inst,
            &out,
            OpPosition::new(1, 0, 0),
            InsertionPoint::NewBatch { machine: 0, boundary: 1 },
        )
        .unwrap();
        assert_eq!(back, sol);
    }

    #[test]
    fn split_lets_the_early_operation_finish_first() {
        let inst = two_op_instance();
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0, 1])]] };
        let before = evaluate_solution(&inst, &sol, 1.0).unwrap();
        assert_eq!(before.completion_op[0], Some(14));
        let split = apply_split(&sol, 0, 0, 1).unwrap();
        let after = evaluate_solution(&inst, &split, 1.0).unwrap();
        assert_eq!(after.completion_op[0], Some(8));
        assert_eq!(apply_merge(&split, 0, 1).unwrap(), sol);
    }

    #[test]
    fn split_slots_of_a_five_op_batch() {
        let ops = (0..5).map(|_| op(1, 0, 1, 0, &[0], &[0])).collect();
        let inst = Instance::new(vec![Machine { release: 0, capacity: 10 }], vec![1], vec![1], ops);
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0, 1, 2, 3, 4])]] };
        assert_eq!(neighborhood_moves(&inst, &sol, NeighborhoodId::SplitBatches).len(), 4);
        assert!(apply_split(&sol, 0, 0, 0).is_err());
        assert!(apply_split(&sol, 0, 0, 5).is_err());
        let single = Solution { machines: vec![vec![Batch::new(0, vec![0])]] };
        assert!(apply_split(&single, 0, 0, 1).is_err());
    }

    #[test]
    fn merge_joins_singletons_and_may_violate_capacity() {
        let inst = Instance::new(
            vec![Machine { release: 0, capacity: 5 }],
            vec![2],
            vec![1, 1],
            vec![op(2, 0, 3, 0, &[0], &[0]), op(2, 0, 3, 0, &[0], &[1])],
        );
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0]), Batch::new(0, vec![1])]] };
        let merged = apply_merge(&sol, 0, 1).unwrap();
        assert_eq!(merged.machines[0], vec![Batch::new(0, vec![0, 1])]);
        let ev = evaluate_solution(&inst, &merged, 1.0).unwrap();
        assert_eq!(ev.violation, 1);
        assert_eq!(ev.twct, 4 + 6);
        assert_eq!(evaluate_solution(&inst, &sol, 1.0).unwrap().twct, 4 + 8);
        // 10 + rho against 12.
        assert!(cost(&inst, &merged, 1.0) < cost(&inst, &sol, 1.0));
        assert!(cost(&inst, &merged, 3.0) > cost(&inst, &sol, 3.0));
        assert_eq!(apply_split(&merged, 0, 0, 1).unwrap(), sol);
        assert!(apply_merge(&sol, 0, 0).is_err());
    }

    #[test]
    fn merge_of_different_families_is_rejected() {
        let inst = four_ops();
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0]), Batch::new(1, vec![2])], vec![]] };
        assert!(apply_merge(&sol, 0, 1).is_err());
        assert!(neighborhood_moves(&inst, &sol, NeighborhoodId::MergeBatches).is_empty());
    }

    #[test]
    fn merge_that_raises_cost_is_not_taken() {
        // Second batch released late: merging delays the early operations.
        let inst = Instance::new(
            vec![Machine { release: 0, capacity: 10 }],
            vec![5],
            vec![3, 1],
            vec![op(4, 0, 1, 0, &[0], &[0]), op(4, 30, 1, 0, &[0], &[1])],
        );
        let sol = Solution { machines: vec![vec![Batch::new(0, vec![0]), Batch::new(0, vec![1])]] };
        assert!(first_improving(&inst, &sol, NeighborhoodId::MergeBatches, 1.0).is_none());
    }

    /// First move in canonical order whose fully re-evaluated cost improves.
    fn brute_first_improving(inst: &Instance, sol: &Solution, id: NeighborhoodId, rho: f64) -> Option<Solution> {
        let base = cost(inst, sol, rho);
        neighborhood_moves(inst, sol, id)
            .into_iter()
            .map(|mv| apply_move(inst, sol, &mv).unwrap())
            .find(|s| cost(inst, s, rho) < base - IMPROVEMENT_EPS)
    }

    #[test]
    fn first_improving_matches_full_reevaluation_scan() {
        for seed in 0..40 {
            let inst = generate_tiny_instance(seed, 6, 2);
            let sol = wmct_wavga(&inst);
            for rho in [1.0, 3.5] {
                for id in NeighborhoodId::ALL {
                    let fast = first_improving(&inst, &sol, id, rho);
                    assert_eq!(fast, brute_first_improving(&inst, &sol, id, rho), "seed {seed} {id:?}");
                    if let Some(s) = fast {
                        assert!(cost(&inst, &s, rho) < cost(&inst, &sol, rho));
                        assert_valid(&inst, &s);
                    }
                }
            }
        }
    }

    #[test]
    fn first_improving_matches_on_larger_instances() {
        for seed in 0..4 {
            let inst = generate_small_profile_instance(4, 15, seed);
            let sol = wmct_wavga(&inst);
            for id in NeighborhoodId::ALL {
                assert_eq!(first_improving(&inst, &sol, id, 1.0), brute_first_improving(&inst, &sol, id, 1.0));
            }
        }
    }

    #[test]
    fn every_enumerated_move_is_valid() {
        for seed in 0..20 {
            let inst = generate_tiny_instance(seed, 6, 2);
            let sol = wmct_wavga(&inst);
            for id in NeighborhoodId::ALL {
                for mv in neighborhood_moves(&inst, &sol, id) {
                    assert_eq!(mv.neighborhood(), id);
                    let out = apply_move(&inst, &sol, &mv).unwrap();
                    assert_valid(&inst, &out);
                    assert_ne!(out, sol, "{mv:?} is a no-op");
                }
            }
        }
    }

    #[test]
    fn rvnd_reaches_a_local_optimum() {
        for seed in 0..10 {
            let inst = generate_small_profile_instance(4, 15, seed);
            let start = wmct_wavga(&inst);
            let mut rng = rng_from_seed(seed);
            let out = rvnd(&inst, &start, 1.0, &mut rng);
            assert_valid(&inst, &out);
            assert!(cost(&inst, &out, 1.0) <= cost(&inst, &start, 1.0));
            for id in NeighborhoodId::ALL {
                assert!(brute_first_improving(&inst, &out, id, 1.0).is_none());
            }
            let (again, stats) = rvnd_with_stats(&inst, &out, 1.0, &mut rng);
            assert_eq!(again, out);
            assert_eq!(stats, RvndStats { scans: 4, improvements: 0 });
        }
    }

    #[test]
    fn rvnd_is_deterministic_for_a_seed() {
        let inst = generate_small_profile_instance(4, 25, 3);
        let start = wmct_wavga(&inst);
        let a = rvnd(&inst, &start, 1.0, &mut rng_from_seed(9));
        let b = rvnd(&inst, &start, 1.0, &mut rng_from_seed(9));
        assert_eq!(a, b);
    }

    #[test]
    fn insertion_space_counts() {
        // Batches of sizes 2 (family 0) and 3 (family 1); inserting a family-0 op.
        let inst = Instance::new(
            vec![Machine { release: 0, capacity: 20 }],
            vec![1, 1],
            vec![1],
            vec![
                op(1, 0, 1, 0, &[0], &[0]),
                op(1, 0, 1, 0, &[0], &[0]),
                op(1, 0, 1, 1, &[0], &[0]),
                op(1, 0, 1, 1, &[0], &[0]),
                op(1, 0, 1, 1, &[0], &[0]),
                op(1, 0, 1, 0, &[0], &[0]),
            ],
        );
        let seq = MachineSeq::from_batches(&[Batch::new(0, vec![0, 1]), Batch::new(1, vec![2, 3, 4])]);
        let mut starts = Vec::new();
        seq.starts_into(&mut starts);
        let mut pts = Vec::new();
        for_each_insertion(&inst, 0, &seq, &starts, 5, |p| {
            pts.push(p);
            false
        });
        // 3 slots in the same-family batch, 2 interior slots in the other,
        // boundaries 0 and 1 touch the family-0 batch, boundary 2 is free.
        assert_eq!(pts.len(), 3 + 2 + 1);
        assert_eq!(*pts.last().unwrap(), InsertionPoint::NewBatch { machine: 0, boundary: 2 });
    }
}
