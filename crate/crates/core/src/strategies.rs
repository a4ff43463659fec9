//! Archetype decision tables and tribute learning.
//!
//! Each policy is a pure function of what its state can see: every state's
//! public stocks and strategy label, the alliance set, and its own memory.
//! Pending choices of other states are never visible.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::world::resolve::trade_share;
use crate::world::{
    Action, AgentId, AlliancePair, DiplomaticMemory, ResolvedEvent, Rules, StateAgent,
    StrategyKind, WorldError,
};

/// Public entry for one state as seen by any observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicStock {
    pub id: AgentId,
    pub strategy: StrategyKind,
    pub wealth: f64,
    pub arms: f64,
}

/// What one state knows at decision time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub self_id: AgentId,
    pub turn: u64,
    /// Every state, in id order.
    pub stocks: Vec<PublicStock>,
    pub alliances: BTreeSet<AlliancePair>,
    pub memory: DiplomaticMemory,
}

impl AgentView {
    pub fn own(&self) -> &PublicStock {
        &self.stocks[self.self_id.0]
    }

    pub fn others(&self) -> impl Iterator<Item = &PublicStock> + '_ {
        self.stocks.iter().filter(move |s| s.id != self.self_id)
    }

    pub fn is_allied_with(&self, other: AgentId) -> bool {
        AlliancePair::new(self.self_id, other).is_some_and(|p| self.alliances.contains(&p))
    }
}

/// Anything that can pick an action from a view.
pub trait Policy: Send + Sync {
    fn decide(&self, view: &AgentView, rules: &Rules) -> Result<Action, WorldError>;
}

impl<F> Policy for F
where
    F: Fn(&AgentView, &Rules) -> Result<Action, WorldError> + Send + Sync,
{
    fn decide(&self, view: &AgentView, rules: &Rules) -> Result<Action, WorldError> {
        self(view, rules)
    }
}

/// Dispatches to the decision table matching the viewer's strategy.
#[derive(Debug, Clone, Copy, Default)]
pub struct Archetype;

impl Policy for Archetype {
    fn decide(&self, view: &AgentView, rules: &Rules) -> Result<Action, WorldError> {
        match view.own().strategy {
            StrategyKind::Mercantile => mercantile_policy(view, rules),
            StrategyKind::Militarist => militarist_policy(view, rules),
            StrategyKind::Mixed => mixed_policy(view, rules),
        }
    }
}

/// One archetype policy per agent, in id order.
pub fn archetype_policies(agent_count: usize) -> Vec<Box<dyn Policy>> {
    (0..agent_count)
        .map(|_| Box::new(Archetype) as Box<dyn Policy>)
        .collect()
}

fn expect_strategy(view: &AgentView, expected: StrategyKind) -> Result<(), WorldError> {
    let actual = view.own().strategy;
    if actual == expected {
        Ok(())
    } else {
        Err(WorldError::StrategyMismatch {
            agent: view.self_id,
            expected,
            actual,
        })
    }
}

// Stocks are visited in id order, so keeping the first strict winner
// breaks ties by lowest id.
fn best_by<'a>(
    candidates: impl Iterator<Item = &'a PublicStock>,
    mut better: impl FnMut(&PublicStock, &PublicStock) -> bool,
) -> Option<&'a PublicStock> {
    candidates.fold(None, |best, s| match best {
        Some(b) if !better(s, b) => Some(b),
        _ => Some(s),
    })
}

fn richest<'a>(candidates: impl Iterator<Item = &'a PublicStock>) -> Option<&'a PublicStock> {
    best_by(candidates, |s, b| s.wealth > b.wealth)
}

/// Mercantile and mixed states that agree the militarist is a threat seek
/// each other out; only active when alliances are enabled.
fn alliance_proposal(view: &AgentView, rules: &Rules) -> Option<Action> {
    if !rules.features.alliances_enabled {
        return None;
    }
    let own_arms = view.own().arms;
    let threatened = view.others().any(|s| {
        s.strategy == StrategyKind::Militarist && s.arms > rules.params.threat_ratio * own_arms
    });
    if !threatened {
        return None;
    }
    let candidates = view
        .others()
        .filter(|s| s.strategy != StrategyKind::Militarist && !view.is_allied_with(s.id));
    best_by(candidates, |s, b| s.arms > b.arms).map(|s| Action::ProposeAlliance { partner: s.id })
}

/// Trade-first, appease-second, arm only when cornered. Never attacks.
pub fn mercantile_policy(view: &AgentView, rules: &Rules) -> Result<Action, WorldError> {
    expect_strategy(view, StrategyKind::Mercantile)?;
    if let Some(action) = alliance_proposal(view, rules) {
        return Ok(action);
    }
    let params = &rules.params;
    let me = view.own();
    let memory = &view.memory;
    let threshold = params.threat_ratio * me.arms;
    let threats: Vec<&PublicStock> = view.others().filter(|s| s.arms > threshold).collect();

    // M1: appease a proven aggressor that has not yet betrayed a tribute.
    if let Some(x) = threats
        .iter()
        .find(|x| memory.has_been_attacked_by(x.id) && !memory.abandoned_tribute.contains(&x.id))
    {
        return Ok(Action::PayTribute { receiver: x.id });
    }

    // M2: arm against an aggressor that can no longer be appeased, while solvent.
    let cornered = threats
        .iter()
        .any(|x| memory.abandoned_tribute.contains(&x.id) || memory.has_been_attacked_by(x.id));
    if cornered && me.wealth > params.desperation_threshold {
        return Ok(Action::BuildArms);
    }

    // M3: trade with the richest state that trades at all.
    if rules.features.trade_enabled {
        let partners = view
            .others()
            .filter(|s| s.strategy != StrategyKind::Militarist);
        if let Some(p) = richest(partners) {
            return Ok(Action::Trade { partner: p.id });
        }
    }
    Ok(Action::Idle)
}

/// Autarchic predator: attack the weakest state weaker than itself, else arm.
pub fn militarist_policy(view: &AgentView, _rules: &Rules) -> Result<Action, WorldError> {
    expect_strategy(view, StrategyKind::Militarist)?;
    let own_arms = view.own().arms;
    let prey = best_by(view.others().filter(|s| s.arms < own_arms), |s, b| {
        s.arms < b.arms
    });
    Ok(match prey {
        Some(p) => Action::Attack { target: p.id },
        None => Action::BuildArms,
    })
}

/// Pays tribute only to the militarist, preys only when it beats trading.
pub fn mixed_policy(view: &AgentView, rules: &Rules) -> Result<Action, WorldError> {
    expect_strategy(view, StrategyKind::Mixed)?;
    if let Some(action) = alliance_proposal(view, rules) {
        return Ok(action);
    }
    let params = &rules.params;
    let me = view.own();
    let memory = &view.memory;

    // X1: buy off the strongest militarist while it keeps its side of the deal.
    let militarist = best_by(
        view.others()
            .filter(|s| s.strategy == StrategyKind::Militarist),
        |s, b| s.arms > b.arms,
    );
    if let Some(m) = militarist {
        if m.arms > params.threat_ratio * me.arms && !memory.abandoned_tribute.contains(&m.id) {
            return Ok(Action::PayTribute { receiver: m.id });
        }
    }

    let partner = if rules.features.trade_enabled {
        richest(view.others().filter(|s| {
            s.strategy != StrategyKind::Militarist && !memory.has_been_attacked_by(s.id)
        }))
    } else {
        None
    };
    let expected_trade = partner.map_or(0.0, |p| {
        let share = trade_share(false, p.strategy == StrategyKind::Mercantile, params);
        share * params.trade_gain * me.wealth.min(p.wealth)
    });

    // X2: predation only against much weaker states and only when it pays better.
    let prey = view
        .others()
        .filter(|s| s.arms < 0.5 * me.arms && !view.is_allied_with(s.id))
        .map(|s| (s, expected_loot(me.arms, s, params.loot_rate)));
    let best_prey = prey.fold(None::<(&PublicStock, f64)>, |best, (s, loot)| match best {
        Some((_, l)) if loot <= l => best,
        _ => Some((s, loot)),
    });
    if let Some((target, loot)) = best_prey {
        if loot > expected_trade {
            return Ok(Action::Attack { target: target.id });
        }
    }

    // X3 / X4
    Ok(match partner {
        Some(p) => Action::Trade { partner: p.id },
        None => Action::BuildArms,
    })
}

fn expected_loot(own_arms: f64, target: &PublicStock, loot_rate: f64) -> f64 {
    target
        .wealth
        .min(loot_rate * (own_arms - target.arms))
        .max(0.0)
}

/// Folds one turn's events into `agent`'s memory.
///
/// A tribute receiver is abandoned as soon as it attacks on or after the turn
/// tribute was first paid to it.
pub fn update_memory(agent: &StateAgent, events: &[ResolvedEvent], turn: u64) -> DiplomaticMemory {
    let mut memory = agent.memory.clone();
    for event in events {
        match *event {
            ResolvedEvent::TributePaid {
                payer, receiver, ..
            } if payer == agent.id => {
                memory.tribute_paid_to.entry(receiver).or_insert(turn);
            }
            ResolvedEvent::AttackResolved {
                attacker, defender, ..
            } if defender == agent.id => {
                memory.attacked_by.entry(attacker).or_default().push(turn);
            }
            _ => {}
        }
    }
    let betrayed: Vec<AgentId> = memory
        .tribute_paid_to
        .iter()
        .filter(|(x, first)| {
            memory
                .attacked_by
                .get(x)
                .is_some_and(|turns| turns.iter().any(|t| t >= first))
        })
        .map(|(x, _)| *x)
        .collect();
    memory.abandoned_tribute.extend(betrayed);
    memory
}
