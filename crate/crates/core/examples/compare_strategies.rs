//! Runs the default scenario with ILA and the baseline strategies and prints
//! the maximum errors of each.

use ila::sim::{compare, generate_scenario, ScenarioConfig};

fn main() -> ila::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };
    let scenario = generate_scenario(&cfg)?;
    let (rows, ila) = compare(&scenario, 20)?;
    println!("{:<10} {:>10} {:>10} {:>8}", "strategy", "max_2d_m", "max_3d_m", "avail");
    for r in &rows {
        println!(
            "{:<10} {:>10.3} {:>10.3} {:>8.2}",
            r.strategy, r.max_err_2d_m, r.max_err_3d_m, r.availability_fraction
        );
    }
    if std::env::var_os("VERBOSE").is_some() {
        for r in &ila.records {
            println!(
                "{:>3} win={} err2d={:.2} bound={:.2} avail={} ng={} nv={} ag={:.2} av={:.2} {:?}",
                r.epoch, r.in_fault_window as u8, r.err_2d_m, r.predicted_bound_m, r.available,
                r.n_gps_selected, r.n_vis_selected, r.mean_alpha_gps, r.mean_alpha_vis, r.failure
            );
        }
    }
    Ok(())
}
