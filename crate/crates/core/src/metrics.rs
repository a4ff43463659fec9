//! Observers over runs: sum classification, defeat and fatigue, hegemony,
//! and batch aggregation. Nothing here feeds back into the engine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::RunTrace;
use crate::world::{AgentId, EngineParams, ResolvedEvent, StateAgent, TurnRecord, Winner};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("traces come from different configs ({0} vs {1})")]
    MixedConfigs(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumClass {
    Positive,
    Zero,
    Negative,
}

pub fn classify_sum(total_value_before: f64, total_value_after: f64, eps: f64) -> SumClass {
    let delta = total_value_after - total_value_before;
    if delta > eps {
        SumClass::Positive
    } else if delta < -eps {
        SumClass::Negative
    } else {
        SumClass::Zero
    }
}

/// Change in total value (wealth plus priced arms) an event causes.
pub fn event_value_delta(event: &ResolvedEvent, arms_price: f64) -> f64 {
    match *event {
        ResolvedEvent::TradeExecuted { gain_a, gain_b, .. } => gain_a + gain_b,
        ResolvedEvent::AttackResolved {
            attacker_arms_loss,
            defender_arms_loss,
            ..
        } => -arms_price * (attacker_arms_loss + defender_arms_loss),
        ResolvedEvent::ArmsBuilt {
            wealth_spent,
            arms_gained,
            ..
        } => arms_price * arms_gained - wealth_spent,
        ResolvedEvent::TributePaid { .. }
        | ResolvedEvent::TributeRefused { .. }
        | ResolvedEvent::AllianceFormed { .. }
        | ResolvedEvent::NoOp { .. } => 0.0,
    }
}

/// True once a state's combined value drops below `defeat_threshold`.
pub fn is_defeated(agent: &StateAgent, defeat_threshold: f64, params: &EngineParams) -> bool {
    agent.resources.value(params.arms_price) < defeat_threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatigueReading {
    pub agent: AgentId,
    pub opponent: AgentId,
    pub own_damage: f64,
    pub opponent_damage: f64,
    /// `own_damage - opponent_damage`; positive means losing the exchange.
    pub fatigue: f64,
}

/// Signed damage balance for every pair that fought within the window.
///
/// Damage is destroyed arms at `arms_price` plus wealth looted from the
/// state. Pairs are reported in ascending id order, lower id first.
pub fn fatigue_readings(window: &[TurnRecord], arms_price: f64) -> Vec<FatigueReading> {
    let mut damage: BTreeMap<(AgentId, AgentId), (f64, f64)> = BTreeMap::new();
    for event in window.iter().flat_map(|r| &r.events) {
        let ResolvedEvent::AttackResolved {
            attacker,
            defender,
            loot,
            attacker_arms_loss,
            defender_arms_loss,
            ..
        } = *event
        else {
            continue;
        };
        let attacker_damage = arms_price * attacker_arms_loss;
        let defender_damage = arms_price * defender_arms_loss + loot;
        let (key, lo, hi) = if attacker < defender {
            ((attacker, defender), attacker_damage, defender_damage)
        } else {
            ((defender, attacker), defender_damage, attacker_damage)
        };
        let entry = damage.entry(key).or_default();
        entry.0 += lo;
        entry.1 += hi;
    }
    damage
        .into_iter()
        .flat_map(|((a, b), (da, db))| {
            [
                FatigueReading {
                    agent: a,
                    opponent: b,
                    own_damage: da,
                    opponent_damage: db,
                    fatigue: da - db,
                },
                FatigueReading {
                    agent: b,
                    opponent: a,
                    own_damage: db,
                    opponent_damage: da,
                    fatigue: db - da,
                },
            ]
        })
        .collect()
}

/// Largest share of all arms held by a single state; `1/n` when nobody is armed.
pub fn hegemony_index(agents: &[StateAgent]) -> f64 {
    let total: f64 = agents.iter().map(|a| a.resources.arms).sum();
    if agents.is_empty() {
        return 0.0;
    }
    if total <= 0.0 {
        return 1.0 / agents.len() as f64;
    }
    let max = agents
        .iter()
        .map(|a| a.resources.arms)
        .fold(f64::NEG_INFINITY, f64::max);
    max / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub config_hash: String,
    pub hegemony_index: f64,
    pub final_wealth: Vec<f64>,
    pub final_arms: Vec<f64>,
    /// Per snapshot (initial first), per agent.
    pub wealth_trajectory: Vec<Vec<f64>>,
    pub arms_trajectory: Vec<Vec<f64>>,
    pub overall_winner: Winner,
    pub extensions_used: u64,
    pub absolute_winner: AgentId,
    pub relative_winner: AgentId,
}

impl RunSummary {
    pub fn from_trace(trace: &RunTrace) -> Self {
        let last = trace.final_snapshot();
        let column = |f: fn(&StateAgent) -> f64| -> Vec<Vec<f64>> {
            trace
                .snapshots()
                .map(|s| s.agents.iter().map(f).collect())
                .collect()
        };
        Self {
            seed: trace.header.seed,
            config_hash: trace.header.config_hash.clone(),
            hegemony_index: hegemony_index(&last.agents),
            final_wealth: last.agents.iter().map(|a| a.resources.wealth).collect(),
            final_arms: last.agents.iter().map(|a| a.resources.arms).collect(),
            wealth_trajectory: column(|a| a.resources.wealth),
            arms_trajectory: column(|a| a.resources.arms),
            overall_winner: trace.outcome.overall_winner,
            extensions_used: trace.outcome.extensions_used,
            absolute_winner: trace.outcome.absolute_ranking[0],
            relative_winner: trace.outcome.relative_ranking[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    /// Sorted by seed; equal seeds keep input order.
    pub rows: Vec<RunSummary>,
    /// Outright wins per agent id.
    pub wins: Vec<usize>,
    pub indeterminate: usize,
    pub median_hegemony: f64,
    pub median_final_wealth: Vec<f64>,
    pub median_final_arms: Vec<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    }
}

pub fn summarize_batch(traces: &[RunTrace]) -> Result<BatchSummary, MetricsError> {
    let first = traces.first().ok_or(MetricsError::EmptyBatch)?;
    let hash = &first.header.config_hash;
    if let Some(other) = traces.iter().find(|t| &t.header.config_hash != hash) {
        return Err(MetricsError::MixedConfigs(
            hash.clone(),
            other.header.config_hash.clone(),
        ));
    }
    let mut rows: Vec<RunSummary> = traces.iter().map(RunSummary::from_trace).collect();
    rows.sort_by_key(|r| r.seed);

    let agent_count = first.initial.agents.len();
    let mut wins = vec![0; agent_count];
    let mut indeterminate = 0;
    for row in &rows {
        match row.overall_winner {
            Winner::Agent(id) => wins[id.0] += 1,
            Winner::Indeterminate => indeterminate += 1,
        }
    }
    let hegemony: Vec<f64> = rows.iter().map(|r| r.hegemony_index).collect();
    let per_agent = |f: fn(&RunSummary) -> &Vec<f64>| -> Vec<f64> {
        (0..agent_count)
            .map(|i| median(&rows.iter().map(|r| f(r)[i]).collect::<Vec<_>>()))
            .collect()
    };
    Ok(BatchSummary {
        median_hegemony: median(&hegemony),
        median_final_wealth: per_agent(|r| &r.final_wealth),
        median_final_arms: per_agent(|r| &r.final_arms),
        rows,
        wins,
        indeterminate,
    })
}
