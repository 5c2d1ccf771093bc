//! Runs reachability analysis and landmark selection on a snapshot file.
//! Defaults to the bundled snapshot whose third satellite carries a 60 m
//! pseudorange fault.

use ila::cli::{select_snapshot, Overrides, Snapshot};
use ila::sim::ScenarioConfig;

fn main() -> ila::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/snapshot_planted_fault.json").into());
    let snapshot = Snapshot::from_json(&std::fs::read_to_string(&path)?)?;
    let out = select_snapshot(&snapshot, &ScenarioConfig::default(), &Overrides::default())?;
    for (id, q) in out.gps_ids.iter().zip(&out.record.q_gps) {
        println!("{id}: {}", if *q > 0.5 { "selected" } else { "excluded" });
    }
    println!("vision selected: {}", out.record.q_vis.iter().filter(|q| **q > 0.5).count());
    println!("predicted bound {:.3} m, available {}", out.record.predicted_bound_m, out.record.available);
    Ok(())
}
