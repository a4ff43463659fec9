//! Scenario configuration, seeded batches, trace files and CSV summaries.

pub mod config;
pub mod trace;

use std::io::Write;

use rayon::prelude::*;

use crate::metrics::BatchSummary;
use crate::world::{run, WorldError};

pub use config::{load_config, AgentSpec, ConfigError, ScenarioConfig};
pub use trace::{
    read_trace, read_trace_from, trace_to_string, write_trace, write_trace_to, RunTrace,
    TraceError, TraceHeader, TRACE_VERSION,
};

/// One trace per seed, in input order. Runs execute in parallel.
pub fn run_batch(config: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<RunTrace>, WorldError> {
    seeds.par_iter().map(|&seed| run(config, seed)).collect()
}

/// As [`run_batch`], on the calling thread only.
pub fn run_batch_serial(
    config: &ScenarioConfig,
    seeds: &[u64],
) -> Result<Vec<RunTrace>, WorldError> {
    seeds.iter().map(|&seed| run(config, seed)).collect()
}

/// `start..start + count`, for reproducible sweeps.
pub fn seed_range(start: u64, count: u64) -> Vec<u64> {
    (0..count).map(|i| start.wrapping_add(i)).collect()
}

/// Writes one CSV row per run with the columns
/// `seed, config_hash, hegemony_index, overall_winner, extensions_used,
/// absolute_winner, relative_winner`, then `wealth_<i>, arms_<i>` for each
/// agent `i`. Stocks are those of the last recorded turn; `overall_winner`
/// is an agent id or `indeterminate`.
pub fn write_summary_csv<W: Write>(summary: &BatchSummary, out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    let agent_count = summary.rows.first().map_or(0, |r| r.final_wealth.len());
    let mut header: Vec<String> = [
        "seed",
        "config_hash",
        "hegemony_index",
        "overall_winner",
        "extensions_used",
        "absolute_winner",
        "relative_winner",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 0..agent_count {
        header.push(format!("wealth_{i}"));
        header.push(format!("arms_{i}"));
    }
    writer.write_record(&header)?;
    for row in &summary.rows {
        let mut record = vec![
            row.seed.to_string(),
            row.config_hash.clone(),
            row.hegemony_index.to_string(),
            match row.overall_winner {
                crate::world::Winner::Agent(id) => id.to_string(),
                crate::world::Winner::Indeterminate => "indeterminate".to_string(),
            },
            row.extensions_used.to_string(),
            row.absolute_winner.to_string(),
            row.relative_winner.to_string(),
        ];
        for (w, a) in row.final_wealth.iter().zip(&row.final_arms) {
            record.push(w.to_string());
            record.push(a.to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
