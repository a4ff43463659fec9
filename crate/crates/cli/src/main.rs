use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use hegemon::gametheory::{
    build_characteristic, core_empty, in_core, pure_nash, Allocation, CharacteristicFunction,
    NormalFormGame, DEFAULT_EPS,
};
use hegemon::harness::{
    load_config, read_trace, run_batch, seed_range, write_summary_csv, write_trace, RunTrace,
    ScenarioConfig,
};
use hegemon::metrics::summarize_batch;
use hegemon::world::run;

#[derive(Parser)]
#[command(
    name = "hegemon",
    version,
    about = "Mercantile / militarist / mixed state simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one seeded run and write its trace.
    Run {
        /// Scenario file (JSON); defaults to the three-archetype scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play a sweep of seeds, writing one trace per seed and a CSV summary.
    Batch {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of seeds.
        #[arg(long)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed_start: u64,
        /// Directory for trace files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: PathBuf,
    },
    /// Summarize a directory of traces into CSV.
    Analyze {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normal-form and coalitional game analysis.
    Game {
        #[command(subcommand)]
        command: GameCommand,
    },
}

#[derive(Subcommand)]
enum GameCommand {
    /// List pure-strategy Nash equilibria.
    Nash {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Test an allocation against the core; optionally grid-search for a core point.
    Core {
        /// A game file or a characteristic-function file.
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated payoff split, one entry per player.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alloc: Vec<f64>,
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, seed, out } => {
            let config = read_config(config.as_deref())?;
            let trace = run(&config, seed)?;
            write_trace(&trace, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{}",
                json!({
                    "trace": out,
                    "seed": seed,
                    "turns": trace.turns.len(),
                    "outcome": trace.outcome,
                })
            );
        }
        Command::Batch {
            config,
            seeds,
            seed_start,
            out,
            summary,
        } => {
            let config = read_config(config.as_deref())?;
            let seeds = seed_range(seed_start, seeds);
            let traces = run_batch(&config, &seeds)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for trace in &traces {
                let path = out.join(format!("trace_{}.jsonl", trace.header.seed));
                write_trace(trace, &path).with_context(|| format!("writing {}", path.display()))?;
            }
            if traces.is_empty() {
                bail!("no seeds requested");
            }
            write_summary(&traces, &summary)?;
        }
        Command::Analyze { traces, out } => {
            let traces = read_trace_dir(&traces)?;
            write_summary(&traces, &out)?;
        }
        Command::Game { command } => game(command)?,
    }
    Ok(())
}

fn read_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(load_config(&text)?)
        }
    }
}

fn read_trace_dir(dir: &Path) -> Result<Vec<RunTrace>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no traces found in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| read_trace(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

fn write_summary(traces: &[RunTrace], path: &Path) -> Result<()> {
    let summary = summarize_batch(traces)?;
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_summary_csv(&summary, file)?;
    println!(
        "{}",
        json!({
            "summary": path,
            "runs": summary.rows.len(),
            "median_hegemony": summary.median_hegemony,
            "wins": summary.wins,
            "indeterminate": summary.indeterminate,
        })
    );
    Ok(())
}

fn game(command: GameCommand) -> Result<()> {
    match command {
        GameCommand::Nash { input } => {
            let game: NormalFormGame = read_json(&input)?;
            let equilibria: Vec<_> = pure_nash(&game)
                .into_iter()
                .map(|p| {
                    let names: Vec<String> =
                        p.0.iter()
                            .enumerate()
                            .map(|(player, &s)| game.strategy_name(player, s))
                            .collect();
                    json!({
                        "profile": p.0,
                        "strategies": names,
                        "payoffs": game.payoffs(&p.0),
                    })
                })
                .collect();
            println!("{}", json!({ "equilibria": equilibria }));
        }
        GameCommand::Core {
            input,
            alloc,
            grid,
            eps,
        } => {
            let v = read_characteristic(&input)?;
            let allocation = Allocation(alloc);
            let in_core = in_core(&allocation, &v, eps)?;
            let mut report = json!({
                "players": v.players(),
                "grand_value": v.grand_value(),
                "allocation": allocation,
                "in_core": in_core,
            });
            if let Some(step) = grid {
                report["core_search"] = serde_json::to_value(core_empty(&v, step, eps)?)?;
            }
            println!("{report}");
        }
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Accepts either a characteristic-function file or a game file.
fn read_characteristic(path: &Path) -> Result<CharacteristicFunction> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("values").is_some() {
        Ok(serde_json::from_value(value)?)
    } else {
        let game: NormalFormGame = serde_json::from_value(value)?;
        Ok(build_characteristic(&game)?)
    }
}
