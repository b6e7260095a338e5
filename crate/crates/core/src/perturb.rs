//! Destroy and repair operators, and the random-move perturbation.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::eval::penalized_cost;
use crate::flat::{MachineSeq, Workspace, UNSCHEDULED};
use crate::local_search::{for_each_insertion, insert_at, InsertionPoint, NeighborhoodId, Scanner};
use crate::model::{Instance, OpId, Solution};
use crate::Rng;

/// A solution with some operations taken out. `removed` keeps extraction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSolution {
    pub solution: Solution,
    pub removed: Vec<OpId>,
}

/// `⌈ε·o⌉`.
pub fn destroy_count(num_operations: usize, epsilon: f64) -> usize {
    let d = (epsilon * num_operations as f64 - 1e-12).ceil();
    (d.max(0.0) as usize).min(num_operations)
}

pub(crate) fn remove_op(ws: &mut Workspace<'_>, buf: &mut MachineSeq, op: OpId) {
    let k = ws.op_machine[op];
    debug_assert_ne!(k, UNSCHEDULED);
    buf.clone_from(&ws.seqs[k]);
    let pos = buf.ops.iter().position(|&x| x == op).expect("scheduled op is on its machine");
    buf.remove(pos);
    ws.commit(&[(k, buf)]);
}

fn scheduled_ops(ws: &Workspace<'_>) -> Vec<OpId> {
    (0..ws.inst.num_operations()).filter(|&i| ws.op_machine[i] != UNSCHEDULED).collect()
}

pub(crate) fn random_destroy_ws(ws: &mut Workspace<'_>, d: usize, rng: &mut Rng, buf: &mut MachineSeq) -> Vec<OpId> {
    let mut pool = scheduled_ops(ws);
    let mut removed = Vec::with_capacity(d);
    for _ in 0..d.min(pool.len()) {
        let idx = rng.gen_range(0..pool.len());
        let op = pool.swap_remove(idx);
        remove_op(ws, buf, op);
        removed.push(op);
    }
    removed
}

/// Removes `d` operations chosen uniformly at random, one at a time.
pub fn random_destroy(inst: &Instance, sol: &Solution, d: usize, rng: &mut Rng) -> PartialSolution {
    let mut ws = Workspace::new(inst, sol);
    let removed = random_destroy_ws(&mut ws, d, rng, &mut MachineSeq::default());
    PartialSolution { solution: ws.to_solution(), removed }
}

fn impact_ws(ws: &mut Workspace<'_>, buf: &mut MachineSeq, op: OpId, rho: f64) -> f64 {
    let k = ws.op_machine[op];
    buf.clone_from(&ws.seqs[k]);
    let pos = buf.ops.iter().position(|&x| x == op).expect("scheduled op is on its machine");
    buf.remove(pos);
    -ws.delta(&[(k, buf)], rho)
}

/// Penalized cost of `sol` minus the penalized cost after removing `op`.
pub fn op_impact(inst: &Instance, sol: &Solution, op: OpId, rho: f64) -> Result<f64> {
    if op >= inst.num_operations() {
        return Err(Error::UnknownOperation(op));
    }
    let mut ws = Workspace::new(inst, sol);
    if ws.op_machine[op] == UNSCHEDULED {
        return Err(Error::NotScheduled(op));
    }
    Ok(impact_ws(&mut ws, &mut MachineSeq::default(), op, rho))
}

/// One extraction of the impact-guided destroy.
#[derive(Debug, Clone, PartialEq)]
pub struct DestroyStep {
    pub op: OpId,
    pub from_high: bool,
    /// High-impact group at the time of the draw.
    pub high: Vec<OpId>,
    /// Low-impact group at the time of the draw.
    pub low: Vec<OpId>,
    /// Impact of every scheduled operation at the time of the draw.
    pub impacts: Vec<(OpId, f64)>,
}

pub(crate) fn pseudo_random_destroy_ws(
    ws: &mut Workspace<'_>,
    d: usize,
    rho: f64,
    rng: &mut Rng,
    buf: &mut MachineSeq,
    mut trace: Option<&mut Vec<DestroyStep>>,
) -> Vec<OpId> {
    let mut removed = Vec::with_capacity(d);
    let mut scored: Vec<(OpId, f64)> = Vec::new();
    for step in 0..d {
        let pool = scheduled_ops(ws);
        if pool.is_empty() {
            break;
        }
        scored.clear();
        for &op in &pool {
            let imp = impact_ws(ws, buf, op, rho);
            scored.push((op, imp));
        }
        scored.shuffle(rng);
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        let n_high = pool.len().div_ceil(2);
        let (high, low) = scored.split_at(n_high);
        let from_high = step % 2 == 0 || low.is_empty();
        let group = if from_high { high } else { low };
        let op = group[rng.gen_range(0..group.len())].0;
        if let Some(t) = trace.as_deref_mut() {
            let mut impacts = scored.clone();
            impacts.sort_by_key(|e| e.0);
            t.push(DestroyStep {
                op,
                from_high,
                high: high.iter().map(|e| e.0).collect(),
                low: low.iter().map(|e| e.0).collect(),
                impacts,
            });
        }
        remove_op(ws, buf, op);
        removed.push(op);
    }
    removed
}

/// Removes `d` operations alternating between the higher-impact half and the
/// rest of the scheduled operations, recomputing impacts after every removal.
/// Impact ties are ordered randomly.
pub fn pseudo_random_destroy(inst: &Instance, sol: &Solution, d: usize, rho: f64, rng: &mut Rng) -> PartialSolution {
    pseudo_random_destroy_traced(inst, sol, d, rho, rng).0
}

pub fn pseudo_random_destroy_traced(
    inst: &Instance,
    sol: &Solution,
    d: usize,
    rho: f64,
    rng: &mut Rng,
) -> (PartialSolution, Vec<DestroyStep>) {
    let mut ws = Workspace::new(inst, sol);
    let mut steps = Vec::new();
    let removed = pseudo_random_destroy_ws(&mut ws, d, rho, rng, &mut MachineSeq::default(), Some(&mut steps));
    (PartialSolution { solution: ws.to_solution(), removed }, steps)
}

/// Reusable buffers for insertion scans.
#[derive(Default)]
pub(crate) struct Inserter {
    buf: MachineSeq,
    starts: Vec<usize>,
    points: Vec<InsertionPoint>,
}

impl Inserter {
    fn points_on(&mut self, ws: &Workspace<'_>, k: usize, op: OpId) {
        ws.seqs[k].starts_into(&mut self.starts);
        self.points.clear();
        let points = &mut self.points;
        for_each_insertion(ws.inst, k, &ws.seqs[k], &self.starts, op, |p| {
            points.push(p);
            false
        });
    }

    /// Cheapest insertion point of `op` and the resulting penalized cost.
    pub fn best(&mut self, ws: &mut Workspace<'_>, op: OpId, rho: f64) -> Result<(InsertionPoint, f64)> {
        let inst = ws.inst;
        let mut best: Option<(InsertionPoint, f64)> = None;
        for k in 0..inst.num_machines() {
            if !inst.is_eligible(op, k) {
                continue;
            }
            self.points_on(ws, k, op);
            for idx in 0..self.points.len() {
                let p = self.points[idx];
                self.buf.clone_from(&ws.seqs[k]);
                insert_at(inst, &mut self.buf, &self.starts, op, p)?;
                let (t, v) = ws.score(&[(k, &self.buf)]);
                let cost = penalized_cost(t, v, rho);
                if best.is_none_or(|(_, c)| cost < c) {
                    best = Some((p, cost));
                }
            }
        }
        best.ok_or_else(|| Error::InvalidInstance(format!("operation {op} has no eligible machine")))
    }

    pub fn place(&mut self, ws: &mut Workspace<'_>, op: OpId, at: InsertionPoint) -> Result<()> {
        let k = at.machine();
        ws.seqs[k].starts_into(&mut self.starts);
        self.buf.clone_from(&ws.seqs[k]);
        insert_at(ws.inst, &mut self.buf, &self.starts, op, at)?;
        ws.commit(&[(k, &self.buf)]);
        Ok(())
    }

    pub fn place_best(&mut self, ws: &mut Workspace<'_>, op: OpId, rho: f64) -> Result<()> {
        let (at, _) = self.best(ws, op, rho)?;
        self.place(ws, op, at)
    }

    pub fn place_random(&mut self, ws: &mut Workspace<'_>, op: OpId, rng: &mut Rng) -> Result<()> {
        let inst = ws.inst;
        let eligible = &inst.op(op).eligible;
        if eligible.is_empty() {
            return Err(Error::InvalidInstance(format!("operation {op} has no eligible machine")));
        }
        let k = eligible[rng.gen_range(0..eligible.len())];
        self.points_on(ws, k, op);
        let at = self.points[rng.gen_range(0..self.points.len())];
        self.place(ws, op, at)
    }
}

/// Cheapest place for an unscheduled `op` over every eligible machine.
///
/// Ties go to the first point in scan order: lowest machine, then batch, with
/// in-batch slots before the boundary that follows them.
pub fn best_insertion(inst: &Instance, sol: &Solution, op: OpId, rho: f64) -> Result<(InsertionPoint, f64)> {
    if op >= inst.num_operations() {
        return Err(Error::UnknownOperation(op));
    }
    let mut ws = Workspace::new(inst, sol);
    if ws.op_machine[op] != UNSCHEDULED {
        return Err(Error::AlreadyScheduled(op));
    }
    Inserter::default().best(&mut ws, op, rho)
}

/// Every insertion point of `op` into machine `machine` of `sol`, in scan order.
pub fn insertion_points(inst: &Instance, sol: &Solution, op: OpId, machine: usize) -> Vec<InsertionPoint> {
    let ws = Workspace::new(inst, sol);
    let mut ins = Inserter::default();
    ins.points_on(&ws, machine, op);
    ins.points
}

/// Places `op` at `at` (indices as in [`InsertionPoint`]).
pub fn insert_operation(inst: &Instance, sol: &Solution, op: OpId, at: InsertionPoint) -> Result<Solution> {
    if op >= inst.num_operations() {
        return Err(Error::UnknownOperation(op));
    }
    if at.machine() >= inst.num_machines() {
        return Err(Error::UnknownMachine(at.machine()));
    }
    if !inst.is_eligible(op, at.machine()) {
        return Err(Error::Ineligible { op, machine: at.machine() });
    }
    let mut ws = Workspace::new(inst, sol);
    if ws.op_machine[op] != UNSCHEDULED {
        return Err(Error::AlreadyScheduled(op));
    }
    Inserter::default().place(&mut ws, op, at)?;
    Ok(ws.to_solution())
}

pub(crate) fn greedy_repair_ws(ws: &mut Workspace<'_>, removed: &[OpId], rho: f64, ins: &mut Inserter) {
    for &op in removed {
        ins.place_best(ws, op, rho).expect("valid instance");
    }
}

pub(crate) fn pseudo_greedy_repair_ws(ws: &mut Workspace<'_>, removed: &[OpId], rho: f64, rng: &mut Rng, ins: &mut Inserter) {
    let n_greedy = removed.len().div_ceil(2);
    for (t, &op) in removed.iter().enumerate() {
        if t < n_greedy {
            ins.place_best(ws, op, rho).expect("valid instance");
        } else {
            ins.place_random(ws, op, rng).expect("valid instance");
        }
    }
}

/// Reinserts the removed operations in order, each at its cheapest place.
pub fn greedy_repair(inst: &Instance, partial: &PartialSolution, rho: f64) -> Solution {
    let mut ws = Workspace::new(inst, &partial.solution);
    greedy_repair_ws(&mut ws, &partial.removed, rho, &mut Inserter::default());
    ws.to_solution()
}

/// Reinserts the first `⌈d/2⌉` removed operations greedily and the rest at a
/// random point of a random eligible machine.
pub fn pseudo_greedy_repair(inst: &Instance, partial: &PartialSolution, rho: f64, rng: &mut Rng) -> Solution {
    let mut ws = Workspace::new(inst, &partial.solution);
    pseudo_greedy_repair_ws(&mut ws, &partial.removed, rho, rng, &mut Inserter::default());
    ws.to_solution()
}

pub(crate) fn random_moves_ws(ws: &mut Workspace<'_>, d: usize, rng: &mut Rng, scanner: &mut Scanner) -> usize {
    let id = NeighborhoodId::ALL[rng.gen_range(0..NeighborhoodId::ALL.len())];
    let mut skipped = 0;
    for _ in 0..d {
        let moves = scanner.moves(ws, id);
        if moves.is_empty() {
            skipped += 1;
            continue;
        }
        let mv = moves[rng.gen_range(0..moves.len())];
        let ch = scanner.build(ws, &mv).expect("enumerated move is valid");
        scanner.commit(ws, ch);
    }
    skipped
}

/// Applies `d` uniformly drawn moves of one uniformly drawn neighborhood.
/// Returns the new solution and the number of draws skipped because the
/// neighborhood was empty.
pub fn random_moves_perturbation(inst: &Instance, sol: &Solution, d: usize, rng: &mut Rng) -> (Solution, usize) {
    let mut ws = Workspace::new(inst, sol);
    let skipped = random_moves_ws(&mut ws, d, rng, &mut Scanner::new());
    (ws.to_solution(), skipped)
}
