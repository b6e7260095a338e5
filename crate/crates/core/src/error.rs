use thiserror::Error;

use crate::model::{MachineId, OpId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operation {op} is not eligible on machine {machine}")]
    Ineligible { op: OpId, machine: MachineId },
    #[error("operation {op} is scheduled more than once")]
    Duplicate { op: OpId },
    #[error("operation {op} in batch {batch} of machine {machine} does not match the batch family")]
    MixedFamily { machine: MachineId, batch: usize, op: OpId },
    #[error("batch {batch} of machine {machine} is empty")]
    EmptyBatch { machine: MachineId, batch: usize },
    #[error("unknown operation {0}")]
    UnknownOperation(OpId),
    #[error("unknown machine {0}")]
    UnknownMachine(MachineId),
    #[error("operation {0} is not scheduled")]
    NotScheduled(OpId),
    #[error("operation {0} is already scheduled")]
    AlreadyScheduled(OpId),
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("best cost must be positive, got {0}")]
    NonPositiveBest(i64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("enumeration limit exceeded: {0}")]
    LimitExceeded(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("no feasible solution found")]
    NoFeasibleSolution,
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
