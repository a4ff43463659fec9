//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary (`harness = false`).

// `!(a > b)` on purpose: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hegemon::gametheory::*;
use hegemon::harness::{
    read_trace, read_trace_from, run_batch, seed_range, trace_to_string, write_trace, RunTrace,
    ScenarioConfig, TraceError,
};
use hegemon::metrics::{hegemony_index, median};
use hegemon::strategies::archetype_policies;
use hegemon::world::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and budgets.
const TRIBUTE_TOL: f64 = 1e-9;
const ARITHMETIC_TOL: f64 = 1e-12;
const DETERMINISM_BUDGET: Duration = Duration::from_secs(1);
const SWEEP_BUDGET: Duration = Duration::from_secs(10);
const GAME_BUDGET: Duration = Duration::from_secs(30);
const EMPIRE_BUDGET: Duration = Duration::from_secs(30);
const SWEEP_SEEDS: u64 = 1000;
const BETRAYAL_SEEDS: u64 = 100;
const RANDOM_GAMES: usize = 50;
const EMPIRE_SEEDS: u64 = 200;
const EMPIRE_HORIZON: u64 = 50;
const ROUNDTRIP_TRACES: u64 = 100;
const CORE_GRID: f64 = 0.01;

type Outcome = Result<String, String>;

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {id:>2} {name}: {detail}");
    };

    report(1, "determinism", determinism());
    let sweeps = sweeps();
    match &sweeps {
        Ok((traces, elapsed)) => {
            report(
                2,
                "persistence and non-negativity",
                persistence(traces, *elapsed),
            );
            report(3, "mixed-sum accounting", accounting(traces));
        }
        Err(e) => {
            report(2, "persistence and non-negativity", Err(e.clone()));
            report(3, "mixed-sum accounting", Err(e.clone()));
        }
    }
    let betrayal = betrayal_runs();
    report(4, "tribute learning", learning(&betrayal));
    let mut all_records: Vec<(&ScenarioConfig, &[TurnRecord])> = Vec::new();
    if let Ok((traces, _)) = &sweeps {
        all_records.extend(
            traces
                .iter()
                .map(|t| (&t.header.config, t.turns.as_slice())),
        );
    }
    if let Ok(runs) = &betrayal {
        all_records.extend(runs.iter().map(|(c, r)| (c, r.as_slice())));
    }
    report(5, "militarist autarchy", autarchy(&all_records));
    report(6, "game-theory oracles", game_theory());
    report(7, "universal-empire direction", universal_empire());
    report(8, "calibration constraint", calibration());
    report(
        9,
        "outcome determination",
        outcome_determination(sweeps.as_ref().ok().map(|s| &s.0)),
    );
    report(10, "trace roundtrip", roundtrip());

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    if elapsed < budget {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, budget {budget:?}"))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let config = ScenarioConfig::default();
    let start = Instant::now();
    for path in [&a, &b] {
        let trace = run(&config, 2024).map_err(|e| e.to_string())?;
        write_trace(&trace, path).map_err(|e| e.to_string())?;
    }
    let elapsed = start.elapsed();
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    if x != y {
        return Err("trace files differ".into());
    }
    within(elapsed, DETERMINISM_BUDGET)?;
    Ok(format!("{} identical bytes, {elapsed:.2?}", x.len()))
}

/// The default scenario plus a variant with combat noise and alliances, so
/// that seeds actually change the runs.
fn sweep_configs() -> Vec<ScenarioConfig> {
    let plain = ScenarioConfig::default();
    let mut varied = ScenarioConfig::default();
    varied.features.combat_noise = true;
    varied.features.alliances_enabled = true;
    vec![plain, varied]
}

fn sweeps() -> Result<(Vec<RunTrace>, Duration), String> {
    let start = Instant::now();
    let mut traces = Vec::new();
    for config in sweep_configs() {
        traces.extend(run_batch(&config, &seed_range(0, SWEEP_SEEDS)).map_err(|e| e.to_string())?);
    }
    Ok((traces, start.elapsed()))
}

fn persistence(traces: &[RunTrace], elapsed: Duration) -> Outcome {
    let mut snapshots = 0;
    for trace in traces {
        if trace.turns.len() != 10 {
            return Err(format!(
                "seed {}: {} turns",
                trace.header.seed,
                trace.turns.len()
            ));
        }
        for snap in trace.snapshots() {
            snapshots += 1;
            if snap.agents.len() != 3 {
                return Err(format!(
                    "seed {} turn {}: {} agents",
                    trace.header.seed,
                    snap.turn,
                    snap.agents.len()
                ));
            }
            if let Some(a) = snap
                .agents
                .iter()
                .find(|a| !(a.resources.wealth >= 0.0 && a.resources.arms >= 0.0))
            {
                return Err(format!(
                    "seed {} turn {}: {:?}",
                    trace.header.seed, snap.turn, a.resources
                ));
            }
        }
    }
    within(elapsed, SWEEP_BUDGET)?;
    Ok(format!(
        "{} runs, {snapshots} snapshots, {elapsed:.2?}",
        traces.len()
    ))
}

fn total_value(agents: &[StateAgent], p: f64) -> f64 {
    agents
        .iter()
        .map(|a| a.resources.wealth + p * a.resources.arms)
        .sum()
}

fn accounting(traces: &[RunTrace]) -> Outcome {
    let mut counts = BTreeMap::<&str, usize>::new();
    let mut violations = Vec::new();
    for trace in traces {
        let params = &trace.header.config.params;
        if params.arms_price != 1.0 || params.build_rate != 1.0 {
            return Err("sweep must use p = 1 and r = 1".into());
        }
        let p = params.arms_price;
        let mut agents = trace.initial.agents.clone();
        let mut alliances = trace.initial.alliances.clone();
        for record in &trace.turns {
            for event in &record.events {
                let before = total_value(&agents, p);
                let pre = agents.clone();
                apply_event(&mut agents, &mut alliances, event);
                let delta = total_value(&agents, p) - before;
                let (kind, ok) = match *event {
                    ResolvedEvent::TradeExecuted { .. } => ("trade", delta > 0.0),
                    ResolvedEvent::TributePaid { .. } => ("tribute", delta.abs() <= TRIBUTE_TOL),
                    ResolvedEvent::AttackResolved {
                        attacker, defender, ..
                    } => {
                        if pre[attacker.0].resources.arms > 0.0
                            && pre[defender.0].resources.arms > 0.0
                        {
                            ("armed attack", delta < 0.0)
                        } else {
                            continue;
                        }
                    }
                    _ => continue,
                };
                *counts.entry(kind).or_default() += 1;
                if !ok {
                    violations.push(format!(
                        "seed {} turn {} {kind}: delta {delta:e}",
                        trace.header.seed, record.turn
                    ));
                }
            }
            // the event-by-event replay must land on the recorded stocks
            let stocks = |a: &[StateAgent]| a.iter().map(|x| x.resources).collect::<Vec<_>>();
            if stocks(&agents) != stocks(&record.snapshot.agents) {
                return Err(format!(
                    "seed {} turn {}: replay diverged",
                    trace.header.seed, record.turn
                ));
            }
        }
    }
    if !violations.is_empty() {
        return Err(format!(
            "{} violations, first: {}",
            violations.len(),
            violations[0]
        ));
    }
    if counts.len() < 3 {
        return Err(format!("not every interaction kind occurred: {counts:?}"));
    }
    Ok(format!("0 violations over {counts:?}"))
}

const MIL: AgentId = AgentId(1);
const MIX: AgentId = AgentId(2);

/// Default endowments, started at turn 3 with a mercantile that already
/// learned its lesson (paid at 1, attacked at 2) and is rearming. The
/// militarist strips the mercantile on the first turn while the mixed state
/// starts paying; once the mercantile has rebuilt, the mixed state is the
/// weakest and gets attacked on the very next turn.
fn betrayal_world(seed: u64) -> WorldState {
    let mut world = WorldState::new(ScenarioConfig::default().initial_agents(), seed);
    world.turn = 3;
    world.agents[0].resources.arms = 5.0;
    world.agents[1].resources.arms = 30.0;
    let memory = &mut world.agents[0].memory;
    memory.tribute_paid_to.insert(MIL, 1);
    memory.attacked_by.insert(MIL, vec![2]);
    memory.abandoned_tribute.insert(MIL);
    world
}

type ScriptedRun = (ScenarioConfig, Vec<TurnRecord>);

fn betrayal_runs() -> Result<Vec<ScriptedRun>, String> {
    let mut config = ScenarioConfig::default();
    config.features.combat_noise = true;
    let rules = config.rules();
    let policies = archetype_policies(3);
    (0..BETRAYAL_SEEDS)
        .map(|seed| {
            let mut world = betrayal_world(seed);
            let initial = world.snapshot();
            let mut records = Vec::new();
            for _ in 0..20 {
                let (next, record) = step(&world, &policies, &rules).map_err(|e| e.to_string())?;
                records.push(record);
                world = next;
            }
            verify_replay(&initial, &records).map_err(|e| format!("seed {seed}: {e}"))?;
            Ok((config.clone(), records))
        })
        .collect()
}

fn learning(runs: &Result<Vec<ScriptedRun>, String>) -> Outcome {
    let runs = runs.as_ref().map_err(Clone::clone)?;
    let mut violations = 0;
    for (seed, (_, records)) in runs.iter().enumerate() {
        let paid = |r: &TurnRecord| {
            r.events.iter().any(|e| {
                matches!(e, ResolvedEvent::TributePaid { payer, receiver, .. } if *payer == MIX && *receiver == MIL)
            })
        };
        let attacked = |r: &TurnRecord| {
            r.events.iter().any(|e| {
                matches!(e, ResolvedEvent::AttackResolved { attacker, defender, .. } if *attacker == MIL && *defender == MIX)
            })
        };
        let Some(first_paid) = records.iter().position(paid) else {
            return Err(format!("seed {seed}: no tribute was ever paid"));
        };
        let Some(betrayal) = records.iter().position(attacked) else {
            return Err(format!("seed {seed}: tributary never attacked"));
        };
        if betrayal != first_paid + 1 {
            return Err(format!(
                "seed {seed}: attack on turn {} does not follow first tribute on turn {}",
                records[betrayal].turn, records[first_paid].turn
            ));
        }
        violations += records[betrayal + 1..]
            .iter()
            .filter(|r| r.actions[MIX.0] == Action::PayTribute { receiver: MIL })
            .count();
    }
    if violations > 0 {
        return Err(format!("{violations} tributes paid after betrayal"));
    }
    Ok(format!(
        "{} seeds betrayed, 0 tributes afterwards",
        runs.len()
    ))
}

fn autarchy(records: &[(&ScenarioConfig, &[TurnRecord])]) -> Outcome {
    let mut checked = 0;
    for (config, turns) in records {
        for record in *turns {
            for (i, action) in record.actions.iter().enumerate() {
                if config.agents[i].strategy != StrategyKind::Militarist {
                    continue;
                }
                checked += 1;
                if matches!(
                    action,
                    Action::Trade { .. }
                        | Action::PayTribute { .. }
                        | Action::ProposeAlliance { .. }
                ) {
                    return Err(format!("turn {}: militarist chose {action:?}", record.turn));
                }
            }
        }
    }
    if checked == 0 {
        return Err("no militarist actions were available to check".into());
    }
    Ok(format!(
        "{checked} militarist actions, none trade, tribute or alliance"
    ))
}

/// Enumerates profiles in lexicographic order; payoffs are looked up in a
/// map, independently of the library's flat indexing.
fn brute_force_nash(counts: &[usize], table: &BTreeMap<Vec<usize>, Vec<f64>>) -> Vec<Vec<usize>> {
    table
        .iter()
        .filter(|(profile, pay)| {
            (0..counts.len()).all(|i| {
                (0..counts[i]).all(|alt| {
                    let mut dev = (*profile).clone();
                    dev[i] = alt;
                    table[&dev][i] <= pay[i]
                })
            })
        })
        .map(|(p, _)| p.clone())
        .collect()
}

fn random_game(
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, BTreeMap<Vec<usize>, Vec<f64>>, NormalFormGame) {
    let players = rng.gen_range(2..=3);
    let counts: Vec<usize> = (0..players).map(|_| rng.gen_range(2..=4)).collect();
    let mut profiles = vec![vec![]];
    for &c in &counts {
        profiles = profiles
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..c).map(move |s| {
                    let mut q = p.clone();
                    q.push(s);
                    q
                })
            })
            .collect();
    }
    // small integer payoffs, so ties and multiple equilibria are common
    let table: BTreeMap<Vec<usize>, Vec<f64>> = profiles
        .into_iter()
        .map(|p| {
            (
                p,
                (0..players)
                    .map(|_| f64::from(rng.gen_range(-3i8..=3)))
                    .collect(),
            )
        })
        .collect();
    let flat = table.values().flatten().copied().collect();
    let game = NormalFormGame::new(counts.clone(), flat).expect("valid game");
    (counts, table, game)
}

fn game_theory() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a6d);
    let mut equilibria = 0;
    for i in 0..RANDOM_GAMES {
        let (counts, table, game) = random_game(&mut rng);
        let fast: Vec<Vec<usize>> = pure_nash(&game).into_iter().map(|p| p.0).collect();
        let slow = brute_force_nash(&counts, &table);
        if fast != slow {
            return Err(format!("game {i} {counts:?}: {fast:?} != {slow:?}"));
        }
        equilibria += fast.len();
    }

    // (C,C)=3,3 (C,D)=0,5 (D,C)=5,0 (D,D)=1,1
    let pd = NormalFormGame::new(vec![2, 2], vec![3.0, 3.0, 0.0, 5.0, 5.0, 0.0, 1.0, 1.0])
        .map_err(|e| e.to_string())?;
    let pd_eq = pure_nash(&pd);
    if pd_eq != vec![StrategyProfile(vec![1, 1])] {
        return Err(format!("prisoner's dilemma: {pd_eq:?}"));
    }

    let majority = CharacteristicFunction::from_fn(3, |s| if s.len() >= 2 { 1.0 } else { 0.0 })
        .map_err(|e| e.to_string())?;
    match core_empty(&majority, CORE_GRID, DEFAULT_EPS).map_err(|e| e.to_string())? {
        CoreSearch::EmptyAtResolution { .. } => {}
        other => return Err(format!("majority game: {other:?}")),
    }

    let additive =
        CharacteristicFunction::from_fn(3, |s| s.len() as f64).map_err(|e| e.to_string())?;
    let witness = match core_empty(&additive, CORE_GRID, DEFAULT_EPS).map_err(|e| e.to_string())? {
        CoreSearch::Nonempty { witness } => witness,
        other => return Err(format!("additive game: {other:?}")),
    };
    // independent check: every coalition gets at least its size
    let secure = (1u32..8).all(|mask| {
        let total: f64 = (0..3)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| witness.0[i])
            .sum();
        total >= mask.count_ones() as f64 - DEFAULT_EPS
    });
    let efficient = (witness.0.iter().sum::<f64>() - 3.0).abs() <= DEFAULT_EPS;
    if !(secure && efficient) {
        return Err(format!("additive witness {witness:?} is not in the core"));
    }

    let elapsed = start.elapsed();
    within(elapsed, GAME_BUDGET)?;
    Ok(format!(
        "{RANDOM_GAMES} games agree ({equilibria} equilibria), PD=(D,D), majority empty at {CORE_GRID}, additive witness {:?}, {elapsed:.2?}",
        witness.0
    ))
}

fn median_final_hegemony(config: &ScenarioConfig) -> Result<f64, String> {
    let traces = run_batch(config, &seed_range(0, EMPIRE_SEEDS)).map_err(|e| e.to_string())?;
    let finals: Vec<f64> = traces
        .iter()
        .map(|t| hegemony_index(&t.final_snapshot().agents))
        .collect();
    Ok(median(&finals))
}

/// Checked with combat noise (where seeds matter) and with the plain
/// deterministic defaults.
fn universal_empire() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for noise in [true, false] {
        let mut config = ScenarioConfig {
            horizon: EMPIRE_HORIZON,
            ..ScenarioConfig::default()
        };
        config.features.combat_noise = noise;
        config.features.trade_enabled = false;
        let without = median_final_hegemony(&config)?;
        config.features.trade_enabled = true;
        let with = median_final_hegemony(&config)?;
        let label = if noise { "noisy" } else { "deterministic" };
        let line = format!("{label}: no-trade {without:.4} vs trade {with:.4}");
        if !(without > with) {
            return Err(line);
        }
        lines.push(line);
    }
    let elapsed = start.elapsed();
    within(elapsed, EMPIRE_BUDGET)?;
    Ok(format!("{}, {elapsed:.2?}", lines.join("; ")))
}

/// One turn of the default mixed state (w 100, a 10) facing the default
/// mercantile (w 100, a 5), worked by hand:
///   trade:  gain = (1 - s) * g * min(100, 100) = 0.4 * 10 = 4
///           arms = r * b * (100 + 4) = 26
///   loot:   loot = min(100, l * (10 - 5)) = 2.5, attrition = min(10, k * 5) = 1
///           arms = r * b * (100 + 2.5) - 1 = 24.625
fn calibration() -> Outcome {
    let p = EngineParams::default();
    let (w, a, merc_w, merc_a) = (100.0, 10.0, 100.0, 5.0);

    let trade_gain = (1.0 - p.mercantile_share) * p.trade_gain * f64::min(w, merc_w);
    let via_trade = p.build_rate * p.build_fraction * (w + trade_gain);
    let loot = f64::min(merc_w, p.loot_rate * (a - merc_a));
    let attrition = f64::min(a, p.attrition * merc_a);
    let via_loot = p.build_rate * p.build_fraction * (w + loot) - attrition;

    let close = |x: f64, y: f64| (x - y).abs() <= ARITHMETIC_TOL;
    if !close(via_trade, 26.0) || !close(via_loot, 24.625) {
        return Err(format!("hand arithmetic drifted: {via_trade} / {via_loot}"));
    }
    // the engine's own rules must agree with the hand arithmetic
    let (engine_gain, _) = resolve_trade(w, merc_w, false, true, &p);
    let fight = resolve_attack(
        &Resources { wealth: w, arms: a },
        &Resources {
            wealth: merc_w,
            arms: merc_a,
        },
        0.0,
        &p,
    );
    if !close(engine_gain, trade_gain)
        || !close(fight.loot, loot)
        || !close(fight.attacker_arms_loss, attrition)
    {
        return Err(format!("engine disagrees: gain {engine_gain}, {fight:?}"));
    }
    if !(via_trade > via_loot) {
        return Err(format!(
            "trade-then-build {via_trade} <= loot-then-build {via_loot}"
        ));
    }
    Ok(format!(
        "trade-then-build {via_trade} > loot-then-build {via_loot}"
    ))
}

fn outcome_determination(traces: Option<&Vec<RunTrace>>) -> Outcome {
    // richest is the mercantile, best armed the militarist
    let split = WorldState::new(
        vec![
            StateAgent {
                resources: Resources {
                    wealth: 100.0,
                    arms: 5.0,
                },
                ..ScenarioConfig::default().initial_agents()[0].clone()
            },
            StateAgent {
                resources: Resources {
                    wealth: 90.0,
                    arms: 20.0,
                },
                ..ScenarioConfig::default().initial_agents()[1].clone()
            },
            StateAgent {
                resources: Resources {
                    wealth: 50.0,
                    arms: 10.0,
                },
                ..ScenarioConfig::default().initial_agents()[2].clone()
            },
        ],
        0,
    );
    let rules = Rules::default();
    let policies = archetype_policies(3);
    let report = determine_outcome(&split, &policies, &rules).map_err(|e| e.to_string())?;
    if report.extensions_used < 1 {
        return Err(format!("split leadership used no extension: {report:?}"));
    }
    let split_winner = report.overall_winner;

    // with no extensions allowed the split cannot resolve
    let mut capped = rules;
    capped.params.max_extensions = 0;
    let stuck = determine_outcome(&split, &policies, &capped).map_err(|e| e.to_string())?;
    if stuck.overall_winner != Winner::Indeterminate || stuck.dual_winner_note.is_none() {
        return Err(format!(
            "E_max = 0 should be indeterminate with a note: {stuck:?}"
        ));
    }

    let mut reports = vec![report, stuck];
    if let Some(traces) = traces {
        reports.extend(traces.iter().map(|t| t.outcome.clone()));
    }
    let e_max = rules.params.max_extensions;
    for r in &reports {
        if r.extensions_used > e_max {
            return Err(format!(
                "{} extensions exceed E_max {e_max}",
                r.extensions_used
            ));
        }
        if r.overall_winner == Winner::Indeterminate && r.dual_winner_note.is_none() {
            return Err("indeterminate report without a dual-winner note".into());
        }
    }
    let indeterminate = reports
        .iter()
        .filter(|r| r.overall_winner == Winner::Indeterminate)
        .count();
    Ok(format!(
        "split resolved as {split_winner:?} after extension; {} reports within E_max={e_max}, {indeterminate} indeterminate all noted",
        reports.len()
    ))
}

fn roundtrip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = ScenarioConfig::default();
    config.features.combat_noise = true;
    config.features.alliances_enabled = true;
    let traces = run_batch(&config, &seed_range(0, ROUNDTRIP_TRACES)).map_err(|e| e.to_string())?;
    for trace in &traces {
        let path = dir.path().join(format!("{}.jsonl", trace.header.seed));
        write_trace(trace, &path).map_err(|e| e.to_string())?;
        let back = read_trace(&path).map_err(|e| format!("seed {}: {e}", trace.header.seed))?;
        if &back != trace
            || trace_to_string(&back).as_bytes() != fs::read(&path).unwrap().as_slice()
        {
            return Err(format!("seed {}: roundtrip not exact", trace.header.seed));
        }
    }

    let text = trace_to_string(&traces[0]);
    let lines: Vec<&str> = text.lines().collect();
    let truncated = lines[..lines.len() - 1].join("\n");
    match read_trace_from(truncated.as_bytes()) {
        Err(e @ TraceError::Truncated) if e.to_string() == "truncated trace" => {}
        other => return Err(format!("truncated file gave {other:?}")),
    }
    let newer = text.replacen("\"version\":1", "\"version\":2", 1);
    match read_trace_from(newer.as_bytes()) {
        Err(TraceError::VersionMismatch {
            found: 2,
            expected: 1,
        }) => {}
        other => return Err(format!("version 2 file gave {other:?}")),
    }
    Ok(format!(
        "{} traces exact; truncation and version errors reported",
        traces.len()
    ))
}
