//! Gauss-Newton position fix from the pseudoranges of one epoch, with and
//! without a faulty satellite.

use ila::estimator::{estimate_state, EstimatorConfig, EstimatorState};
use ila::sim::{generate_scenario, ScenarioConfig};
use ila::cli::Snapshot;

fn main() -> ila::Result<()> {
    let cfg = ScenarioConfig::default();
    let scenario = generate_scenario(&cfg)?;
    let truth = scenario.truth[0];
    let prior = EstimatorState::new(scenario.motion_mean(0, None), cfg.noise.motion_prior_covariance());
    let est_cfg = EstimatorConfig::default();
    let n = scenario.satellites.len();
    let mut faulty = vec![0.0; n];
    faulty[2] = 60.0;
    for (label, bias, skip) in [("all clean", vec![0.0; n], None), ("one 60 m fault", faulty.clone(), None), ("fault excluded", faulty, Some(2))] {
        let inputs = Snapshot::gps_only(&scenario, 0, &bias)?.to_inputs()?;
        let gps: Vec<_> = inputs
            .gps
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, g)| g.clone())
            .collect();
        let est = estimate_state(&gps, &[], None, &prior, &est_cfg)?;
        let err = est.state.position - truth.position;
        println!("{label:<15} 3D error {:.3} m, 2D error {:.3} m", err.norm(), err.xy().norm());
    }
    Ok(())
}
