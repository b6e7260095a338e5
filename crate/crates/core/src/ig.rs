//! Iterated greedy driver with simulated-annealing acceptance, an adaptive
//! capacity penalty and periodic restore of the incumbent.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::constructive::wmct_wavga;
use crate::error::{Error, Result};
use crate::eval::penalized_delta;
use crate::flat::{MachineSeq, Workspace};
use crate::local_search::{rvnd_ws, Scanner};
use crate::model::{Cost, Instance, Solution};
use crate::perturb::{
    destroy_count, greedy_repair_ws, pseudo_greedy_repair_ws, pseudo_random_destroy_ws, random_destroy_ws,
    random_moves_ws, Inserter,
};
use crate::{rng_from_seed, Rng};

/// Penalty factor standing in for a hard capacity constraint.
pub const HARD_PENALTY: f64 = 1e9;

/// Destroy and repair pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Variant {
    /// Random destroy, greedy repair.
    #[default]
    RG,
    /// Random destroy, pseudo-greedy repair.
    RP,
    /// Pseudo-random destroy, greedy repair.
    PG,
    /// Pseudo-random destroy, pseudo-greedy repair.
    PP,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::RG, Variant::RP, Variant::PG, Variant::PP];

    pub fn pseudo_random_destroy(self) -> bool {
        matches!(self, Variant::PG | Variant::PP)
    }

    pub fn pseudo_greedy_repair(self) -> bool {
        matches!(self, Variant::RP | Variant::PP)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::RG => "RG",
            Variant::RP => "RP",
            Variant::PG => "PG",
            Variant::PP => "PP",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches("IG-").to_ascii_uppercase().as_str() {
            "RG" => Ok(Variant::RG),
            "RP" => Ok(Variant::RP),
            "PG" => Ok(Variant::PG),
            "PP" => Ok(Variant::PP),
            _ => Err(Error::InvalidConfig(format!("unknown variant {s:?}"))),
        }
    }
}

/// Components that can be switched off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Toggles {
    pub local_search: bool,
    pub sim_annealing: bool,
    pub destroy_repair: bool,
    pub infeasibility: bool,
    pub restore: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles { local_search: true, sim_annealing: true, destroy_repair: true, infeasibility: true, restore: true }
    }
}

impl Toggles {
    /// Complete configuration and the five single-feature-off configurations,
    /// labelled as in the ablation table.
    pub fn ablation_set() -> Vec<(&'static str, Toggles)> {
        let all = Toggles::default();
        vec![
            ("No LS", Toggles { local_search: false, ..all }),
            ("No SA", Toggles { sim_annealing: false, ..all }),
            ("No DR", Toggles { destroy_repair: false, ..all }),
            ("No Inf.", Toggles { infeasibility: false, ..all }),
            ("No Rest.", Toggles { restore: false, ..all }),
            ("Complete", all),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IgConfig {
    pub eta: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub variant: Variant,
    pub toggles: Toggles,
    pub seed: u64,
}

impl Default for IgConfig {
    fn default() -> Self {
        IgConfig {
            eta: 2500,
            lambda: 0.1,
            epsilon: 0.15,
            delta1: 0.6,
            delta2: 1e-5,
            rho_plus: 0.20,
            rho_minus: 0.05,
            variant: Variant::RG,
            toggles: Toggles::default(),
            seed: 0,
        }
    }
}

impl IgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.eta < 1 {
            return bad("eta must be at least 1");
        }
        if !(self.delta1 > 0.0 && self.delta1 <= 1.0) || !(self.delta2 > 0.0 && self.delta2 <= 1.0) {
            return bad("delta1 and delta2 must lie in (0, 1]");
        }
        if self.delta2 > self.delta1 {
            return bad("delta2 must not exceed delta1");
        }
        if !(0.0..=1.0).contains(&self.epsilon) || !(0.0..=1.0).contains(&self.lambda) {
            return bad("epsilon and lambda must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.rho_plus) || !(0.0..1.0).contains(&self.rho_minus) {
            return bad("rho_plus and rho_minus must lie in [0, 1)");
        }
        Ok(())
    }

    /// Stagnation limit `⌈λη⌉` before the incumbent is restored.
    pub fn restore_limit(&self) -> usize {
        (self.lambda * self.eta as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaState {
    pub tau: f64,
    pub tau0: f64,
    pub tau_f: f64,
    pub kappa: f64,
}

impl SaState {
    /// One geometric decay step.
    pub fn cool(&mut self) {
        self.tau *= self.kappa;
    }
}

/// Temperatures `-δ·f0/ln 0.5` and the geometric rate reaching `τ_F` after `η` steps.
pub fn cooling_schedule(f0: f64, delta1: f64, delta2: f64, eta: usize) -> Result<SaState> {
    if f0 <= 0.0 || !f0.is_finite() {
        return Err(Error::InvalidConfig(format!("initial cost must be positive, got {f0}")));
    }
    if eta == 0 {
        return Err(Error::InvalidConfig("eta must be at least 1".into()));
    }
    let ln_half = 0.5f64.ln();
    let tau0 = -delta1 * f0 / ln_half;
    let tau_f = -delta2 * f0 / ln_half;
    let kappa = (tau_f / tau0).powf(1.0 / eta as f64);
    Ok(SaState { tau: tau0, tau0, tau_f, kappa })
}

/// Metropolis rule. Draws from `rng` only when the candidate is worse.
pub fn accept(cand_cost: f64, cur_cost: f64, sa: &SaState, rng: &mut Rng) -> bool {
    accept_delta(cand_cost - cur_cost, sa.tau, rng)
}

fn accept_delta(delta: f64, tau: f64, rng: &mut Rng) -> bool {
    if delta <= 0.0 {
        return true;
    }
    rng.gen::<f64>() < (-delta / tau).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyState {
    pub rho: f64,
}

impl Default for PenaltyState {
    fn default() -> Self {
        PenaltyState { rho: 1.0 }
    }
}

pub fn penalty_update(state: PenaltyState, feasible: bool, rho_plus: f64, rho_minus: f64) -> PenaltyState {
    let rho = if feasible { (state.rho * (1.0 - rho_minus)).max(1.0) } else { state.rho * (1.0 + rho_plus) };
    PenaltyState { rho }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub current_twct: Cost,
    pub current_violation: i64,
    pub candidate_twct: Cost,
    pub candidate_violation: i64,
    pub best_twct: Cost,
    pub tau: f64,
    pub rho: f64,
    pub accepted: bool,
    pub feasible: bool,
    pub restored: bool,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {:.17e} {:.17e} {} {}",
            self.iteration,
            self.current_twct,
            self.current_violation,
            self.best_twct,
            self.tau,
            self.rho,
            u8::from(self.accepted),
            u8::from(self.feasible)
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best_solution: Solution,
    pub best_cost: Cost,
    pub feasible: bool,
    /// Cost of the constructive solution.
    pub initial_cost: Cost,
    pub trace: Vec<TraceRecord>,
    pub iterations_to_best: usize,
    pub wall_time: Duration,
}

/// Runs the iterated greedy search.
pub fn run(inst: &Instance, config: &IgConfig) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = rng_from_seed(config.seed);
    let tg = config.toggles;
    let o = inst.num_operations();
    let d = destroy_count(o, config.epsilon);
    let omega_limit = config.restore_limit();

    let initial = wmct_wavga(inst);
    let mut cur = Workspace::new(inst, &initial);
    let initial_cost = cur.twct;
    let f0 = if initial_cost > 0 { initial_cost as f64 } else { 1.0 };
    let mut sa = cooling_schedule(f0, config.delta1, config.delta2, config.eta)?;
    let mut penalty = PenaltyState::default();
    let search_rho = |p: &PenaltyState| if tg.infeasibility { p.rho } else { HARD_PENALTY };

    let mut scanner = Scanner::new();
    let mut inserter = Inserter::default();
    let mut buf = MachineSeq::default();

    if tg.local_search {
        rvnd_ws(&mut cur, search_rho(&penalty), &mut rng, &mut scanner);
    }
    let mut best = if cur.violation == 0 { cur.clone() } else { Workspace::new(inst, &initial) };
    if best.violation != 0 {
        return Err(Error::NoFeasibleSolution);
    }
    let mut iterations_to_best = 0;
    let mut omega = 0usize;
    let mut trace = Vec::with_capacity(config.eta);
    let mut cand = cur.clone();

    for it in 1..=config.eta {
        cand.clone_from(&cur);
        let rho = search_rho(&penalty);
        if tg.destroy_repair {
            let removed = if config.variant.pseudo_random_destroy() {
                pseudo_random_destroy_ws(&mut cand, d, rho, &mut rng, &mut buf, None)
            } else {
                random_destroy_ws(&mut cand, d, &mut rng, &mut buf)
            };
            if config.variant.pseudo_greedy_repair() {
                pseudo_greedy_repair_ws(&mut cand, &removed, rho, &mut rng, &mut inserter);
            } else {
                greedy_repair_ws(&mut cand, &removed, rho, &mut inserter);
            }
        } else {
            random_moves_ws(&mut cand, d, &mut rng, &mut scanner);
        }
        if tg.local_search {
            rvnd_ws(&mut cand, rho, &mut rng, &mut scanner);
        }
        omega += 1;
        let (cand_twct, cand_violation) = (cand.twct, cand.violation);

        let feasible = cand.violation == 0;
        if tg.infeasibility {
            penalty = penalty_update(penalty, feasible, config.rho_plus, config.rho_minus);
        }
        let rho = search_rho(&penalty);
        let accepted = if !tg.infeasibility && !feasible {
            false
        } else {
            let delta = penalized_delta(cand.twct, cand.violation, cur.twct, cur.violation, rho);
            if delta < 0.0 {
                true
            } else {
                tg.sim_annealing && accept_delta(delta, sa.tau, &mut rng)
            }
        };
        if accepted {
            std::mem::swap(&mut cur, &mut cand);
            if feasible && cur.twct < best.twct {
                best.clone_from(&cur);
                iterations_to_best = it;
                omega = 0;
            }
        }
        let mut restored = false;
        if tg.restore && omega == omega_limit {
            cur.clone_from(&best);
            omega = 0;
            restored = true;
        }
        sa.cool();
        trace.push(TraceRecord {
            iteration: it,
            current_twct: cur.twct,
            current_violation: cur.violation,
            candidate_twct: cand_twct,
            candidate_violation: cand_violation,
            best_twct: best.twct,
            tau: sa.tau,
            rho: penalty.rho,
            accepted,
            feasible,
            restored,
        });
    }

    Ok(RunResult {
        best_solution: best.to_solution(),
        best_cost: best.twct,
        feasible: best.violation == 0,
        initial_cost,
        trace,
        iterations_to_best,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{check_integrity, evaluate_solution};
    use crate::generate::{generate_small_profile_instance, generate_tiny_instance};
    use crate::local_search::rvnd;
    use crate::oracle::{brute_force_optimum, OracleLimits};

    fn small_config(eta: usize, seed: u64) -> IgConfig {
        IgConfig { eta, seed, ..IgConfig::default() }
    }

    #[test]
    fn defaults_and_parsing() {
        let c = IgConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.restore_limit(), 250);
        assert_eq!(IgConfig { eta: 7, ..c.clone() }.restore_limit(), 1);
        assert_eq!("IG-PP".parse::<Variant>().unwrap(), Variant::PP);
        assert_eq!("rp".parse::<Variant>().unwrap(), Variant::RP);
        assert!("XX".parse::<Variant>().is_err());
        assert!(IgConfig { eta: 0, ..c.clone() }.validate().is_err());
        assert!(IgConfig { rho_plus: 1.0, ..c.clone() }.validate().is_err());
        assert!(IgConfig { delta1: 0.0, ..c.clone() }.validate().is_err());
        assert!(IgConfig { epsilon: 1.5, ..c }.validate().is_err());
        let labels: Vec<_> = Toggles::ablation_set().into_iter().map(|(l, _)| l).collect();
        assert_eq!(labels, ["No LS", "No SA", "No DR", "No Inf.", "No Rest.", "Complete"]);
    }

    #[test]
    fn initial_temperature() {
        let sa = cooling_schedule(1000.0, 0.6, 1e-5, 10).unwrap();
        assert!((sa.tau0 - 600.0 / 2f64.ln()).abs() < 1e-9);
        assert!((sa.tau0 - 865.617).abs() < 1e-3);
        assert_eq!(sa.tau, sa.tau0);
        assert_eq!(cooling_schedule(1000.0, 0.3, 0.3, 50).unwrap().kappa, 1.0);
        assert!(cooling_schedule(0.0, 0.6, 1e-5, 10).is_err());
    }

    #[test]
    fn temperature_reaches_final_value_after_eta_steps() {
        let c = IgConfig::default();
        let mut sa = cooling_schedule(12345.0, c.delta1, c.delta2, c.eta).unwrap();
        assert!((sa.kappa - (1e-5f64 / 0.6).powf(1.0 / 2500.0)).abs() < 1e-15);
        for _ in 0..c.eta {
            sa.cool();
        }
        assert!(((sa.tau - sa.tau_f) / sa.tau_f).abs() < 1e-9);
    }

    #[test]
    fn acceptance_rule() {
        let sa = cooling_schedule(100.0, 0.6, 1e-5, 10).unwrap();
        let mut rng = rng_from_seed(1);
        assert!(accept(5.0, 6.0, &sa, &mut rng));
        assert!(accept(6.0, 6.0, &sa, &mut rng));
        let trials = 100_000;
        let hits = (0..trials).filter(|_| accept(10.0 + sa.tau, 10.0, &sa, &mut rng)).count();
        let freq = hits as f64 / trials as f64;
        assert!((freq - (-1f64).exp()).abs() < 0.01, "{freq}");
    }

    #[test]
    fn penalty_updates() {
        let p = |rho| PenaltyState { rho };
        assert!((penalty_update(p(1.0), false, 0.2, 0.05).rho - 1.2).abs() < 1e-12);
        assert_eq!(penalty_update(p(1.0), true, 0.2, 0.05).rho, 1.0);
        assert!((penalty_update(p(2.0), true, 0.2, 0.05).rho - 1.9).abs() < 1e-12);
    }

    #[test]
    fn single_iteration_never_worsens_the_constructive_cost() {
        for seed in 0..5 {
            let inst = generate_small_profile_instance(4, 25, seed);
            let r = run(&inst, &small_config(1, seed)).unwrap();
            assert!(r.best_cost <= r.initial_cost);
        }
    }

    fn check_run(inst: &Instance, cfg: &IgConfig, r: &RunResult) {
        assert_eq!(r.trace.len(), cfg.eta);
        assert!(r.feasible);
        assert!(check_integrity(inst, &r.best_solution, true).is_empty());
        let ev = evaluate_solution(inst, &r.best_solution, 1.0).unwrap();
        assert_eq!((ev.twct, ev.violation), (r.best_cost, 0));
        assert!(r.trace.windows(2).all(|w| w[1].best_twct <= w[0].best_twct));
        let sa = cooling_schedule(r.initial_cost as f64, cfg.delta1, cfg.delta2, cfg.eta).unwrap();
        for rec in &r.trace {
            let expect = sa.tau0 * sa.kappa.powi(rec.iteration as i32);
            assert!(((rec.tau - expect) / expect).abs() < 1e-9);
            assert!(rec.rho >= 1.0);
        }
    }

    #[test]
    fn runs_are_consistent_for_every_variant() {
        let inst = generate_small_profile_instance(4, 25, 2);
        for variant in Variant::ALL {
            let cfg = IgConfig { variant, ..small_config(40, 3) };
            let r = run(&inst, &cfg).unwrap();
            check_run(&inst, &cfg, &r);
        }
    }

    #[test]
    fn restore_fires_after_the_stagnation_limit() {
        let inst = generate_small_profile_instance(4, 15, 8);
        let cfg = IgConfig { lambda: 0.1, ..small_config(120, 4) };
        let limit = cfg.restore_limit();
        assert_eq!(limit, 12);
        let r = run(&inst, &cfg).unwrap();
        // The incumbent before the first iteration is the descent from the
        // constructive solution, drawn from the same seeded stream.
        let start = rvnd(&inst, &wmct_wavga(&inst), 1.0, &mut rng_from_seed(cfg.seed));
        let start_ev = evaluate_solution(&inst, &start, 1.0).unwrap();
        assert_eq!(start_ev.violation, 0);
        let mut prev_best = start_ev.twct;
        let mut omega = 0;
        let mut fired = 0;
        for rec in &r.trace {
            omega += 1;
            if rec.best_twct < prev_best {
                omega = 0;
            }
            assert_eq!(rec.restored, omega == limit, "iteration {}", rec.iteration);
            if rec.restored {
                fired += 1;
                omega = 0;
                assert_eq!((rec.current_twct, rec.current_violation), (rec.best_twct, 0));
            }
            prev_best = rec.best_twct;
        }
        assert!(fired > 0);
    }

    #[test]
    fn runs_are_reproducible() {
        let inst = generate_small_profile_instance(8, 25, 5);
        for variant in Variant::ALL {
            let cfg = IgConfig { variant, ..small_config(30, 11) };
            let a = run(&inst, &cfg).unwrap();
            let b = run(&inst, &cfg).unwrap();
            assert_eq!(a.trace, b.trace);
            assert_eq!(a.best_solution, b.best_solution);
        }
    }

    #[test]
    fn hard_capacity_keeps_current_feasible() {
        let inst = generate_small_profile_instance(4, 25, 6);
        let toggles = Toggles { infeasibility: false, ..Toggles::default() };
        let cfg = IgConfig { toggles, ..small_config(40, 2) };
        let r = run(&inst, &cfg).unwrap();
        check_run(&inst, &cfg, &r);
        assert!(r.trace.iter().all(|t| t.current_violation == 0 && t.rho == 1.0));
        assert!(r.trace.iter().filter(|t| !t.feasible).all(|t| !t.accepted));
    }

    #[test]
    fn every_ablation_configuration_runs() {
        let inst = generate_small_profile_instance(4, 15, 7);
        for (label, toggles) in Toggles::ablation_set() {
            let cfg = IgConfig { toggles, ..small_config(30, 1) };
            let r = run(&inst, &cfg).unwrap();
            check_run(&inst, &cfg, &r);
            if !toggles.restore {
                assert!(r.trace.iter().all(|t| !t.restored), "{label}");
            }
        }
        let only_ls = Toggles {
            local_search: true,
            sim_annealing: false,
            destroy_repair: false,
            infeasibility: false,
            restore: false,
        };
        let cfg = IgConfig { toggles: only_ls, ..small_config(30, 1) };
        check_run(&inst, &cfg, &run(&inst, &cfg).unwrap());
    }

    #[test]
    fn tiny_instances_reach_the_optimum() {
        let limits = OracleLimits::default();
        let mut hits = 0;
        let total = 10;
        for seed in 0..total {
            let inst = generate_tiny_instance(1000 + seed, 5, 2);
            let (opt, _) = brute_force_optimum(&inst, &limits).unwrap();
            let r = run(&inst, &small_config(300, seed)).unwrap();
            assert!(r.best_cost >= opt);
            hits += usize::from(r.best_cost == opt);
        }
        assert!(hits >= 9, "{hits}/{total}");
    }
}
