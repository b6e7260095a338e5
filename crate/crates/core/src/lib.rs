//! Iterated greedy search for parallel machine scheduling with family
//! batching, non-anticipatory setups, release dates, machine eligibility and
//! batch capacity, minimizing total weighted completion time.

pub mod constructive;
pub mod error;
pub mod eval;
mod flat;
pub mod format;
pub mod generate;
pub mod ig;
pub mod local_search;
pub mod model;
pub mod oracle;
pub mod perturb;

pub use error::{Error, Result};
pub use eval::{check_integrity, evaluate_machine, evaluate_solution, rpd, Evaluation, IntegrityViolation, MachineEval};
pub use ig::{run, IgConfig, RunResult, Toggles, TraceRecord, Variant};
pub use model::{
    validate_instance, Batch, Cost, FamilyId, Instance, InstanceViolation, JobId, Machine, MachineId, OpId,
    Operation, Solution, Time,
};

/// Deterministic generator used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeds the crate generator.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
