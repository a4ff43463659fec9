//! Closed-form resolution of single interactions.
//!
//! All rules are linear with clamping so that stocks never go negative:
//! trade creates value, tribute moves it, war destroys arms and moves wealth.

use serde::{Deserialize, Serialize};

use super::error::WorldError;
use super::types::{AgentId, EngineParams, ResolvedEvent, Resources, StateAgent};

/// Gains for both parties of an executed trade.
///
/// The surplus is `trade_gain * min(w_a, w_b)`. When exactly one side is
/// mercantile it takes `mercantile_share` of it, otherwise the split is even.
pub fn resolve_trade(
    w_a: f64,
    w_b: f64,
    a_is_mercantile: bool,
    b_is_mercantile: bool,
    params: &EngineParams,
) -> (f64, f64) {
    let surplus = params.trade_gain * w_a.min(w_b).max(0.0);
    let share_a = trade_share(a_is_mercantile, b_is_mercantile, params);
    let gain_a = share_a * surplus;
    (gain_a, surplus - gain_a)
}

/// Fraction of a trade surplus going to the first party.
pub fn trade_share(a_is_mercantile: bool, b_is_mercantile: bool, params: &EngineParams) -> f64 {
    match (a_is_mercantile, b_is_mercantile) {
        (true, false) => params.mercantile_share,
        (false, true) => 1.0 - params.mercantile_share,
        _ => 0.5,
    }
}

/// Tribute from `payer` to `receiver`, unless the payer has learned not to.
pub fn resolve_tribute(
    payer: &StateAgent,
    receiver: AgentId,
    agent_count: usize,
    params: &EngineParams,
) -> Result<ResolvedEvent, WorldError> {
    if receiver.0 >= agent_count {
        return Err(WorldError::UnknownAgent(receiver));
    }
    if receiver == payer.id {
        return Err(WorldError::InvalidAction {
            agent: payer.id,
            action: super::types::Action::PayTribute { receiver },
            reason: "tribute to self",
        });
    }
    if payer.memory.abandoned_tribute.contains(&receiver) {
        return Ok(ResolvedEvent::TributeRefused {
            payer: payer.id,
            receiver,
        });
    }
    Ok(ResolvedEvent::TributePaid {
        payer: payer.id,
        receiver,
        amount: params.tribute_rate * payer.resources.wealth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub loot: f64,
    pub attacker_arms_loss: f64,
    pub defender_arms_loss: f64,
}

/// One combat between `attacker` and `defender`, whose allies field
/// `defender_ally_arms` arms (unweighted).
pub fn resolve_attack(
    attacker: &Resources,
    defender: &Resources,
    defender_ally_arms: f64,
    params: &EngineParams,
) -> AttackOutcome {
    resolve_attack_scaled(attacker, defender, defender_ally_arms, 1.0, params)
}

/// As [`resolve_attack`], with the raw loot multiplied by `loot_multiplier`
/// before clamping to the defender's wealth.
pub fn resolve_attack_scaled(
    attacker: &Resources,
    defender: &Resources,
    defender_ally_arms: f64,
    loot_multiplier: f64,
    params: &EngineParams,
) -> AttackOutcome {
    let defense = effective_defense(defender.arms, defender_ally_arms, params);
    let loot = if attacker.arms > defense {
        let raw = params.loot_rate * (attacker.arms - defense) * loot_multiplier.max(0.0);
        defender.wealth.min(raw).max(0.0)
    } else {
        0.0
    };
    AttackOutcome {
        loot,
        attacker_arms_loss: attacker.arms.min(params.attrition * defense),
        defender_arms_loss: defender.arms.min(params.attrition * attacker.arms),
    }
}

pub fn effective_defense(defender_arms: f64, ally_arms: f64, params: &EngineParams) -> f64 {
    defender_arms + params.ally_support * ally_arms
}

/// Converts `build_fraction` of wealth into arms at `build_rate`.
pub fn apply_build(res: &Resources, params: &EngineParams) -> Resources {
    let (spend, gained) = build_amounts(res, params);
    Resources {
        wealth: (res.wealth - spend).max(0.0),
        arms: res.arms + gained,
    }
}

/// `(wealth_spent, arms_gained)` for a build from `res`.
pub fn build_amounts(res: &Resources, params: &EngineParams) -> (f64, f64) {
    let spend = params.build_fraction * res.wealth;
    (spend, params.build_rate * spend)
}
