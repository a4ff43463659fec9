use thiserror::Error;

use super::types::{Action, AgentId, StrategyKind};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum WorldError {
    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),
    #[error("agent {agent} chose {action:?}: {reason}")]
    InvalidAction {
        agent: AgentId,
        action: Action,
        reason: &'static str,
    },
    #[error("agent {agent} is {actual}, policy expects {expected}")]
    StrategyMismatch {
        agent: AgentId,
        expected: StrategyKind,
        actual: StrategyKind,
    },
    #[error("expected {expected} policies, got {actual}")]
    PolicyCount { expected: usize, actual: usize },
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("replay diverged at turn {turn}: {detail}")]
    ReplayMismatch { turn: u64, detail: String },
}
