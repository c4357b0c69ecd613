use thiserror::Error;

use crate::dynamics::SystemId;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("duration {duration} s is not a positive multiple of dt = {dt} s")]
    BadDuration { duration: f64, dt: f64 },
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an edge bundle file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported bundle format version {0}")]
    BadVersion(u16),
    #[error("unknown system code {0} in bundle header")]
    BadSystem(u8),
    #[error("bundle is for {found:?} but {expected:?} was requested")]
    SystemMismatch { expected: SystemId, found: SystemId },
    #[error("bundle file truncated: expected {expected} bytes of records, found {found}")]
    Truncated { expected: u64, found: u64 },
}

/// Why a single planning attempt produced no trajectory.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlanFailure {
    #[error("start state is in collision with the static environment")]
    InvalidStart,
    #[error("no solution within budget ({iterations} iterations)")]
    Infeasible { iterations: u64 },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveFailure {
    #[error("start state of agent {agent} is in collision")]
    InvalidStart { agent: usize },
    #[error("agent {agent} could not be planned within budget")]
    AgentInfeasible { agent: usize },
    #[error("no conflict-free solution within budget")]
    Infeasible,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported scenario format version {0}")]
    BadVersion(u32),
    #[error("scenario template {template} cannot place {agents} agents (capacity {capacity})")]
    Capacity {
        template: String,
        agents: usize,
        capacity: usize,
    },
    #[error("placement failed after {attempts} rejection attempts ({what})")]
    Placement { what: String, attempts: usize },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}
