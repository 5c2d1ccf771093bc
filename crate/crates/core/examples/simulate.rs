//! Runs one scenario through the full loop and writes `epochs.csv`,
//! `summary.json` and `selection.jsonl` to the given directory.

use std::path::PathBuf;

use ila::cli::simulate_to_dir;
use ila::sim::ScenarioConfig;

fn main() -> ila::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ila_simulate"));
    let summary = simulate_to_dir(&ScenarioConfig::default(), &out)?;
    println!("wrote {}", out.display());
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
