//! Domain types and the turn-resolution engine.

pub mod engine;
mod error;
pub mod resolve;
mod types;

pub use engine::{
    apply_event, determine_outcome, determine_outcome_traced, observe, replay_turn, run, step,
    verify_replay,
};
pub use error::WorldError;
pub use resolve::{apply_build, resolve_attack, resolve_trade, resolve_tribute, AttackOutcome};
pub use types::*;
