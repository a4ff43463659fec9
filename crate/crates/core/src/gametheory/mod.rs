//! Exact desk-scale game theory: pure Nash equilibria, maximin
//! characteristic functions and the core.

mod coalition;
mod normal_form;

use thiserror::Error;

pub use coalition::{
    build_characteristic, core_empty, enumerate_coalitions, in_core, Allocation,
    CharacteristicFile, CharacteristicFunction, Coalition, CoreSearch, DEFAULT_EPS,
    MAX_CHARACTERISTIC_PLAYERS, MAX_COALITION_PLAYERS, MAX_CORE_SEARCH_PLAYERS,
};
pub use normal_form::{
    characteristic_value, characteristic_value_over, pure_nash, GameFile, NormalFormGame,
    StrategyProfile, MAX_PROFILES,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("too large for exact analysis: {0}")]
    TooLarge(String),
    #[error("malformed game: {0}")]
    Shape(String),
    #[error("coalition must be nonempty")]
    EmptyCoalition,
    #[error("allocation total {total} misses v([n]) = {grand_value} by {gap}")]
    Inefficient {
        total: f64,
        grand_value: f64,
        gap: f64,
    },
}
