//! Turn resolution.
//!
//! Actions are chosen simultaneously, then resolved in fixed phases:
//! alliances, trades, tributes, attacks, builds, memory. Every stock change
//! goes through [`apply_event`], so replaying a record's events over the
//! prior snapshot reproduces the next snapshot bit for bit.

use std::collections::BTreeSet;

use rand::Rng;

use super::error::WorldError;
use super::resolve::{build_amounts, resolve_attack_scaled, resolve_trade, resolve_tribute};
use super::types::{
    Action, AgentId, AlliancePair, DualWinnerNote, OutcomeReport, ResolvedEvent, Rules, Snapshot,
    StateAgent, StrategyKind, TurnRecord, Winner, WorldState,
};
use crate::harness::config::ScenarioConfig;
use crate::harness::trace::{RunTrace, TraceHeader, TRACE_VERSION};
use crate::strategies::{archetype_policies, update_memory, AgentView, Policy, PublicStock};

/// Public stocks plus the viewer's private memory.
pub fn observe(world: &WorldState, viewer: AgentId) -> Result<AgentView, WorldError> {
    let me = world
        .agent(viewer)
        .ok_or(WorldError::UnknownAgent(viewer))?;
    Ok(AgentView {
        self_id: viewer,
        turn: world.turn,
        stocks: world
            .agents
            .iter()
            .map(|a| PublicStock {
                id: a.id,
                strategy: a.strategy,
                wealth: a.resources.wealth,
                arms: a.resources.arms,
            })
            .collect(),
        alliances: world.alliances.clone(),
        memory: me.memory.clone(),
    })
}

fn validate_action(agent: AgentId, action: Action, count: usize) -> Result<(), WorldError> {
    let reason = match action.counterpart() {
        Some(other) if other == agent => "action targets its own state",
        Some(other) if other.0 >= count => "action names an unknown state",
        _ => return Ok(()),
    };
    Err(WorldError::InvalidAction {
        agent,
        action,
        reason,
    })
}

/// Applies one resolved event to the stocks and alliance set.
///
/// Subtractions clamp at zero.
pub fn apply_event(
    agents: &mut [StateAgent],
    alliances: &mut BTreeSet<AlliancePair>,
    event: &ResolvedEvent,
) {
    match *event {
        ResolvedEvent::TradeExecuted {
            a,
            b,
            gain_a,
            gain_b,
        } => {
            agents[a.0].resources.wealth += gain_a;
            agents[b.0].resources.wealth += gain_b;
        }
        ResolvedEvent::TributePaid {
            payer,
            receiver,
            amount,
        } => {
            let p = &mut agents[payer.0].resources;
            p.wealth = (p.wealth - amount).max(0.0);
            agents[receiver.0].resources.wealth += amount;
        }
        ResolvedEvent::AttackResolved {
            attacker,
            defender,
            loot,
            attacker_arms_loss,
            defender_arms_loss,
            ..
        } => {
            let d = &mut agents[defender.0].resources;
            d.wealth = (d.wealth - loot).max(0.0);
            d.arms = (d.arms - defender_arms_loss).max(0.0);
            let a = &mut agents[attacker.0].resources;
            a.wealth += loot;
            a.arms = (a.arms - attacker_arms_loss).max(0.0);
        }
        ResolvedEvent::AllianceFormed { a, b } => {
            if let Some(pair) = AlliancePair::new(a, b) {
                alliances.insert(pair);
            }
        }
        ResolvedEvent::ArmsBuilt {
            agent,
            wealth_spent,
            arms_gained,
        } => {
            let r = &mut agents[agent.0].resources;
            r.wealth = (r.wealth - wealth_spent).max(0.0);
            r.arms += arms_gained;
        }
        ResolvedEvent::TributeRefused { .. } | ResolvedEvent::NoOp { .. } => {}
    }
}

fn finish_turn(agents: &mut [StateAgent], events: &[ResolvedEvent], turn: u64) {
    for agent in agents.iter_mut() {
        agent.memory = update_memory(agent, events, turn);
    }
}

/// Rebuilds the post-turn snapshot from the prior snapshot and a record's events.
pub fn replay_turn(prior: &Snapshot, record: &TurnRecord) -> Snapshot {
    let mut next = prior.clone();
    for event in &record.events {
        apply_event(&mut next.agents, &mut next.alliances, event);
    }
    finish_turn(&mut next.agents, &record.events, record.turn);
    next.turn = record.turn + 1;
    next
}

/// Checks that every record follows from its predecessor.
pub fn verify_replay(initial: &Snapshot, turns: &[TurnRecord]) -> Result<(), WorldError> {
    let mut prior = initial.clone();
    for record in turns {
        let rebuilt = replay_turn(&prior, record);
        if rebuilt != record.snapshot {
            return Err(WorldError::ReplayMismatch {
                turn: record.turn,
                detail: "rebuilt snapshot differs from recorded snapshot".into(),
            });
        }
        prior = rebuilt;
    }
    Ok(())
}

/// Resolves one full turn.
pub fn step<P: AsRef<dyn Policy>>(
    world: &WorldState,
    policies: &[P],
    rules: &Rules,
) -> Result<(WorldState, TurnRecord), WorldError> {
    let count = world.agents.len();
    if policies.len() != count {
        return Err(WorldError::PolicyCount {
            expected: count,
            actual: policies.len(),
        });
    }
    let params = &rules.params;

    let mut actions = Vec::with_capacity(count);
    for (agent, policy) in world.agents.iter().zip(policies) {
        let view = observe(world, agent.id)?;
        let action = policy.as_ref().decide(&view, rules)?;
        validate_action(agent.id, action, count)?;
        actions.push(action);
    }

    let mut next = world.clone();
    let mut events = Vec::new();
    let strategy = |id: AgentId| world.agents[id.0].strategy;

    // Alliances: mutual proposals between non-militarists.
    for (i, action) in actions.iter().enumerate() {
        let Action::ProposeAlliance { partner } = *action else {
            continue;
        };
        let me = AgentId(i);
        let mutual = actions[partner.0] == Action::ProposeAlliance { partner: me };
        let eligible = strategy(me) != StrategyKind::Militarist
            && strategy(partner) != StrategyKind::Militarist;
        let pair = AlliancePair::new(me, partner).expect("validated non-self");
        if mutual && eligible && !next.alliances.contains(&pair) {
            let event = ResolvedEvent::AllianceFormed { a: me, b: partner };
            apply_event(&mut next.agents, &mut next.alliances, &event);
            events.push(event);
        } else if !(mutual && eligible && me > partner) {
            events.push(ResolvedEvent::NoOp { agent: me });
        }
    }

    // Trades: at most one per state, proposers in ascending id order. A
    // mercantile state accepts any partner that is not attacking it.
    let mut traded_with: Vec<Option<AgentId>> = vec![None; count];
    for (i, action) in actions.iter().enumerate() {
        let Action::Trade { partner } = *action else {
            continue;
        };
        let me = AgentId(i);
        if traded_with[i] == Some(partner) {
            continue;
        }
        let accepted = rules.features.trade_enabled
            && traded_with[i].is_none()
            && traded_with[partner.0].is_none()
            && (actions[partner.0] == Action::Trade { partner: me }
                || (strategy(partner) == StrategyKind::Mercantile
                    && actions[partner.0] != Action::Attack { target: me }));
        let gains = accepted.then(|| {
            resolve_trade(
                next.agents[i].resources.wealth,
                next.agents[partner.0].resources.wealth,
                strategy(me) == StrategyKind::Mercantile,
                strategy(partner) == StrategyKind::Mercantile,
                params,
            )
        });
        match gains {
            Some((gain_a, gain_b)) if gain_a + gain_b > 0.0 => {
                let event = ResolvedEvent::TradeExecuted {
                    a: me,
                    b: partner,
                    gain_a,
                    gain_b,
                };
                apply_event(&mut next.agents, &mut next.alliances, &event);
                events.push(event);
                traded_with[i] = Some(partner);
                traded_with[partner.0] = Some(me);
            }
            _ => events.push(ResolvedEvent::NoOp { agent: me }),
        }
    }

    // Tributes, on post-trade wealth.
    for (i, action) in actions.iter().enumerate() {
        let Action::PayTribute { receiver } = *action else {
            continue;
        };
        let event = resolve_tribute(&next.agents[i], receiver, count, params)?;
        apply_event(&mut next.agents, &mut next.alliances, &event);
        events.push(event);
    }

    // Attacks: all against the pre-attack stocks, applied together.
    let pre: Vec<_> = next.agents.iter().map(|a| a.resources).collect();
    let mut raw = Vec::new();
    for (i, action) in actions.iter().enumerate() {
        let Action::Attack { target } = *action else {
            continue;
        };
        let attacker = AgentId(i);
        let ally_arms: f64 = next
            .alliances
            .iter()
            .filter_map(|p| p.other(target))
            .filter(|&ally| ally != attacker)
            .map(|ally| pre[ally.0].arms)
            .fold(0.0, |acc, x| acc + x);
        let multiplier = if rules.features.combat_noise {
            1.0 + params.noise_spread * (2.0 * next.rng.gen::<f64>() - 1.0)
        } else {
            1.0
        };
        let outcome = resolve_attack_scaled(&pre[i], &pre[target.0], ally_arms, multiplier, params);
        raw.push((attacker, target, outcome, params.ally_support * ally_arms));
    }
    // Several attacks on one state can demand more than it holds; scale
    // each state's losses down proportionally.
    let mut loot_demand = vec![0.0; count];
    let mut arms_demand = vec![0.0; count];
    for (attacker, target, out, _) in &raw {
        loot_demand[target.0] += out.loot;
        arms_demand[attacker.0] += out.attacker_arms_loss;
        arms_demand[target.0] += out.defender_arms_loss;
    }
    let scale = |available: f64, demand: f64| {
        if demand > available && demand > 0.0 {
            available / demand
        } else {
            1.0
        }
    };
    let loot_scale: Vec<f64> = (0..count)
        .map(|j| scale(pre[j].wealth, loot_demand[j]))
        .collect();
    let arms_scale: Vec<f64> = (0..count)
        .map(|j| scale(pre[j].arms, arms_demand[j]))
        .collect();
    // Scaled shares are handed out until the last one, which takes exactly
    // what is left, so an overdrawn stock ends at zero rather than at dust.
    let mut loot_left: Vec<usize> = vec![0; count];
    let mut arms_left: Vec<usize> = vec![0; count];
    for (attacker, target, _, _) in &raw {
        loot_left[target.0] += 1;
        arms_left[attacker.0] += 1;
        arms_left[target.0] += 1;
    }
    let mut wealth_pool: Vec<f64> = pre.iter().map(|r| r.wealth).collect();
    let mut arms_pool: Vec<f64> = pre.iter().map(|r| r.arms).collect();
    let share = |pool: &mut [f64], left: &mut [usize], scale: &[f64], j: usize, amount: f64| {
        left[j] -= 1;
        let taken = if scale[j] < 1.0 {
            if left[j] == 0 {
                pool[j]
            } else {
                (amount * scale[j]).min(pool[j])
            }
        } else {
            amount
        };
        pool[j] -= taken;
        taken
    };
    for (attacker, defender, out, ally_support_arms) in raw {
        let loot = share(
            &mut wealth_pool,
            &mut loot_left,
            &loot_scale,
            defender.0,
            out.loot,
        );
        let attacker_arms_loss = share(
            &mut arms_pool,
            &mut arms_left,
            &arms_scale,
            attacker.0,
            out.attacker_arms_loss,
        );
        let defender_arms_loss = share(
            &mut arms_pool,
            &mut arms_left,
            &arms_scale,
            defender.0,
            out.defender_arms_loss,
        );
        let event = ResolvedEvent::AttackResolved {
            attacker,
            defender,
            loot,
            attacker_arms_loss,
            defender_arms_loss,
            ally_support_arms,
        };
        apply_event(&mut next.agents, &mut next.alliances, &event);
        events.push(event);
    }

    // Builds.
    for (i, action) in actions.iter().enumerate() {
        let event = match action {
            Action::BuildArms => {
                let (wealth_spent, arms_gained) = build_amounts(&next.agents[i].resources, params);
                ResolvedEvent::ArmsBuilt {
                    agent: AgentId(i),
                    wealth_spent,
                    arms_gained,
                }
            }
            Action::Idle => ResolvedEvent::NoOp { agent: AgentId(i) },
            _ => continue,
        };
        apply_event(&mut next.agents, &mut next.alliances, &event);
        events.push(event);
    }

    finish_turn(&mut next.agents, &events, world.turn);
    next.turn = world.turn + 1;

    let record = TurnRecord {
        turn: world.turn,
        actions,
        events,
        snapshot: next.snapshot(),
    };
    Ok((next, record))
}

/// Ids ordered by `key` descending, ties by ascending id.
fn ranking(agents: &[StateAgent], key: impl Fn(&StateAgent) -> f64) -> Vec<AgentId> {
    let mut ids: Vec<&StateAgent> = agents.iter().collect();
    ids.sort_by(|a, b| key(b).total_cmp(&key(a)).then(a.id.cmp(&b.id)));
    ids.into_iter().map(|a| a.id).collect()
}

/// Outcome of a finished run, plus the extra turns played to reach it.
pub fn determine_outcome_traced<P: AsRef<dyn Policy>>(
    world: &WorldState,
    policies: &[P],
    rules: &Rules,
) -> Result<(OutcomeReport, Vec<TurnRecord>), WorldError> {
    let mut current = world.clone();
    let mut extra = Vec::new();
    loop {
        let absolute = ranking(&current.agents, |a| a.resources.wealth);
        let relative = ranking(&current.agents, |a| a.resources.arms);
        let (Some(&rich), Some(&strong)) = (absolute.first(), relative.first()) else {
            return Ok((
                OutcomeReport {
                    absolute_ranking: absolute,
                    relative_ranking: relative,
                    overall_winner: Winner::Indeterminate,
                    extensions_used: extra.len() as u64,
                    dual_winner_note: None,
                },
                extra,
            ));
        };
        let used = extra.len() as u64;
        if rich == strong || used >= rules.params.max_extensions {
            let (overall_winner, dual_winner_note) = if rich == strong {
                (Winner::Agent(rich), None)
            } else {
                (
                    Winner::Indeterminate,
                    Some(DualWinnerNote {
                        absolute_winner: rich,
                        relative_winner: strong,
                    }),
                )
            };
            return Ok((
                OutcomeReport {
                    absolute_ranking: absolute,
                    relative_ranking: relative,
                    overall_winner,
                    extensions_used: used,
                    dual_winner_note,
                },
                extra,
            ));
        }
        let (next, record) = step(&current, policies, rules)?;
        current = next;
        extra.push(record);
    }
}

/// Ranks by wealth and by arms; if the leaders differ, plays extra turns
/// (up to `max_extensions`) until one state leads both.
pub fn determine_outcome<P: AsRef<dyn Policy>>(
    world: &WorldState,
    policies: &[P],
    rules: &Rules,
) -> Result<OutcomeReport, WorldError> {
    determine_outcome_traced(world, policies, rules).map(|(report, _)| report)
}

/// Plays `config.horizon` turns with the archetype policies.
pub fn run(config: &ScenarioConfig, seed: u64) -> Result<RunTrace, WorldError> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(WorldError::InvalidConfig(violations));
    }
    let rules = config.rules();
    let mut world = WorldState::new(config.initial_agents(), seed);
    let policies = archetype_policies(world.agents.len());
    let initial = world.snapshot();
    let mut turns = Vec::with_capacity(config.horizon as usize);
    for _ in 0..config.horizon {
        let (next, record) = step(&world, &policies, &rules)?;
        world = next;
        turns.push(record);
    }
    let outcome = determine_outcome(&world, &policies, &rules)?;
    Ok(RunTrace {
        header: TraceHeader {
            version: TRACE_VERSION,
            config_hash: config.hash(),
            seed,
            config: config.clone(),
        },
        initial,
        turns,
        outcome,
    })
}
