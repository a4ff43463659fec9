//! Deterministic simulator of trading, tribute and predation among
//! mercantile, militarist and mixed states, with exact small-game tools
//! (pure Nash equilibria, maximin characteristic functions, the core) and
//! a seeded batch harness.

pub mod gametheory;
pub mod harness;
pub mod metrics;
pub mod strategies;
pub mod world;
