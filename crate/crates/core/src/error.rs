use thiserror::Error;

use crate::grid::{AgentId, Cell};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("path is empty")]
    EmptyPath,
    #[error("path vertex {cell} at t={t} is blocked or off the map")]
    BlockedVertex { t: usize, cell: Cell },
    #[error("path jumps from {from} to {to} at t={t}")]
    Jump { t: usize, from: Cell, to: Cell },
    #[error("agent {agent}: cell {cell} is not free")]
    NotFree { agent: AgentId, cell: Cell },
    #[error("agent {agent}: start {cell} shared with another agent")]
    DuplicateStart { agent: AgentId, cell: Cell },
    #[error("agent {agent}: goal {cell} shared with another agent")]
    DuplicateGoal { agent: AgentId, cell: Cell },
    #[error("agent {agent}: start and goal lie in different regions")]
    Disconnected { agent: AgentId },
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("file is {size} bytes, larger than the {limit} byte limit")]
    TooLarge { size: u64, limit: u64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Instance(#[from] GridError),
}

impl ParseError {
    pub(crate) fn at(line: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax { line, msg: msg.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SippsError {
    #[error("goal {goal} is unreachable from {start}")]
    Unreachable { start: Cell, goal: Cell },
    #[error("no path from {start} to {goal} within horizon {horizon}")]
    Horizon { start: Cell, goal: Cell, horizon: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("agent {agent}: {source}")]
pub struct ReplanError {
    pub agent: AgentId,
    #[source]
    pub source: SippsError,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlnsError {
    #[error("neighborhood size must be positive")]
    EmptySelection,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("replanning task has no controlled agents")]
    EmptyTask,
    #[error("agent {0} is not part of the instance")]
    UnknownAgent(AgentId),
    #[error("action {action:?} is invalid for controlled agent {agent}")]
    InvalidAction { agent: usize, action: crate::grid::Action },
    #[error("joint action names controlled agent {0} twice or out of range")]
    BadJointAction(usize),
    #[error("episode already terminated")]
    Terminated,
    #[error(transparent)]
    Replan(#[from] ReplanError),
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("unknown frame tag {0}")]
    UnknownTag(u8),
    #[error("truncated frame: {0}")]
    Truncated(&'static str),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("frame of {0} bytes exceeds limit")]
    Oversized(usize),
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy connection lost: {0}")]
    Connection(String),
    #[error("policy timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("policy service reported: {0}")]
    Remote(String),
    #[error("policy returned {got} actions for {expected} agents")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
}

impl From<std::io::Error> for PolicyError {
    fn from(e: std::io::Error) -> Self {
        PolicyError::Connection(e.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdgError {
    #[error("plan has {0} collision pairs; execution graph needs a collision-free plan")]
    Collisions(usize),
    #[error("robots {robots:?} rotate through each other's cells at t={time}; the plan needs lockstep execution")]
    Cycle { time: usize, robots: Vec<AgentId> },
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("could not place {needed} agents: region holds {available} free cells")]
    RegionTooSmall { needed: usize, available: usize },
    #[error("obstacle rate {0} leaves no usable region")]
    Infeasible(f64),
    #[error("unknown map kind `{0}`")]
    UnknownKind(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
}
