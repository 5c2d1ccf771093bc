use ila::attention::{brute_force_oracle, round_attention, select, AttentionSet, SelectionConfig};
use ila::error::Error;
use ila::pzono::{
    fault_status_point, linear_map, zonotope_size, PZonotope, WeightVector, Zonotope,
};
use ila::reach::{
    pzono_cost, scaled_union, EpochAnalysis, LandmarkAnalysis, LandmarkKind, LinearSummary, ReachPipeline,
};
use ila::sim::{generate_scenario, run_scenario, sample_measurements, ScenarioConfig, Strategy};
use nalgebra::{DMatrix, DVector, Matrix3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_pzono(r: &mut ChaCha8Rng, n: usize, e: usize) -> PZonotope {
    let c = DVector::from_fn(n, |_, _| r.random_range(-3.0..3.0));
    let g = DMatrix::from_fn(n, e, |_, _| r.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    PZonotope::new(c, g, &a * a.transpose()).unwrap()
}

/// Columns sorted lexicographically, so generator order does not matter.
fn sorted_columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = m.column_iter().map(|c| c.iter().copied().collect()).collect();
    cols.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cols
}

fn state_set(r: &mut ChaCha8Rng) -> PZonotope {
    let c = DVector::from_fn(7, |i, _| if i < 3 { r.random_range(-3.0..3.0) } else { 0.0 });
    let g = DMatrix::from_fn(7, 2, |i, _| if i < 3 { r.random_range(-1.5..1.5) } else { 0.0 });
    let a = DMatrix::from_fn(7, 7, |i, j| if i < 3 && j < 3 { r.random_range(-1.0..1.0) } else { 0.0 });
    PZonotope::new(c, g, &a * a.transpose()).unwrap()
}

fn member(kind: LandmarkKind, index: usize, set: PZonotope, alpha: f64) -> LandmarkAnalysis {
    LandmarkAnalysis {
        id: format!("{kind:?}{index}"),
        kind,
        index,
        linear: LinearSummary {
            residual: 0.0,
            jac_state: vec![0.0; 7],
        },
        expected_state: set,
        innovation: 0.0,
        innovation_set: PZonotope::point(DVector::zeros(1)),
        epoch_status: alpha,
        joint_status: alpha,
    }
}

fn synthetic_analysis(seed: u64, n: usize, l: usize) -> EpochAnalysis {
    let mut r = rng(seed);
    let alpha = |r: &mut ChaCha8Rng| if r.random_bool(0.2) { r.random_range(0.3..0.99) } else { 0.0 };
    let gps = (0..n)
        .map(|i| {
            let a = alpha(&mut r);
            member(LandmarkKind::Gps, i, state_set(&mut r), a)
        })
        .collect();
    let vision = (0..l)
        .map(|j| {
            let a = alpha(&mut r);
            member(LandmarkKind::Vision, j, state_set(&mut r), a)
        })
        .collect();
    EpochAnalysis {
        motion_set: state_set(&mut r),
        gps,
        vision,
        skipped: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn linear_maps_compose(seed in any::<u64>(), n in 1usize..6, k in 1usize..6, j in 1usize..6, e in 0usize..5) {
        let mut r = rng(seed);
        let p = random_pzono(&mut r, n, e);
        let b = DMatrix::from_fn(k, n, |_, _| r.random_range(-2.0..2.0));
        let a = DMatrix::from_fn(j, k, |_, _| r.random_range(-2.0..2.0));
        let twice = linear_map(&a, &linear_map(&b, &p).unwrap()).unwrap();
        let once = linear_map(&(&a * &b), &p).unwrap();
        let close = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            x.shape() == y.shape() && x.iter().zip(y.iter()).all(|(u, v)| (u - v).abs() <= 1e-12 * v.abs().max(1.0) * 10.0)
        };
        prop_assert!((twice.center() - once.center()).amax() <= 1e-11);
        let (g1, g2) = (sorted_columns(twice.generators()), sorted_columns(once.generators()));
        prop_assert_eq!(g1.len(), g2.len());
        for (c1, c2) in g1.iter().zip(&g2) {
            for (u, v) in c1.iter().zip(c2) {
                prop_assert!((u - v).abs() <= 1e-11 * v.abs().max(1.0));
            }
        }
        prop_assert!(close(twice.covariance(), once.covariance()));
    }

    #[test]
    fn fault_status_is_zero_on_the_hull_and_grows_along_rays(seed in any::<u64>(), n in 1usize..5, e in 1usize..4) {
        let mut r = rng(seed);
        let p = random_pzono(&mut r, n, e);
        let beta = DVector::from_fn(e, |_, _| r.random_range(-1.0..=1.0));
        let inside = p.center() + p.generators() * &beta;
        let s0 = fault_status_point(&p, &inside).unwrap();
        prop_assert_eq!(s0, 0.0, "status inside the hull");
        let dir = DVector::from_fn(n, |_, _| r.random_range(-1.0..1.0));
        let mut last = s0;
        for step in 1..=30 {
            let s = fault_status_point(&p, &(&inside + &dir * (0.5 * step as f64))).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(s >= last - 1e-12, "status fell from {} to {}", last, s);
            last = s;
        }
    }

    #[test]
    fn zonotope_size_ignores_signs_and_order_and_scales_quadratically(
        seed in any::<u64>(), n in 1usize..6, e in 1usize..6, s in 0.1f64..10.0
    ) {
        let mut r = rng(seed);
        let z = Zonotope::new(
            DVector::from_fn(n, |_, _| r.random_range(-3.0..3.0)),
            DMatrix::from_fn(n, e, |_, _| r.random_range(-2.0..2.0)),
        ).unwrap();
        let w = WeightVector::uniform(n);
        let base = zonotope_size(&z, &w).unwrap();

        let mut order: Vec<usize> = (0..e).collect();
        order.shuffle(&mut r);
        let signs: Vec<f64> = (0..e).map(|_| if r.random_bool(0.5) { -1.0 } else { 1.0 }).collect();
        let flipped = DMatrix::from_fn(n, e, |i, j| signs[j] * z.generators()[(i, order[j])]);
        let z2 = Zonotope::new(z.center().clone(), flipped).unwrap();
        prop_assert!((zonotope_size(&z2, &w).unwrap() - base).abs() <= 1e-12 * base.max(1.0));

        let scaled = Zonotope::new(z.center() * s, z.generators() * s).unwrap();
        let size = zonotope_size(&scaled, &w).unwrap();
        prop_assert!((size - s * s * base).abs() <= 1e-10 * size.max(1.0));
    }

    #[test]
    fn adding_a_member_never_lowers_the_cost(seed in any::<u64>(), n in 1usize..6, l in 1usize..6) {
        let a = synthetic_analysis(seed, n, l);
        let mut r = rng(seed ^ 1);
        let q: Vec<f64> = (0..n + l).map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let w = WeightVector::position_only();
        let cost = |q: &[f64]| pzono_cost(&scaled_union(&a, &q[..n], &q[n..]).unwrap(), 0.999, &w).unwrap();
        let base = cost(&q);
        for i in 0..n + l {
            if q[i] == 0.0 {
                let mut up = q.clone();
                up[i] = 1.0;
                prop_assert!(cost(&up) >= base - 1e-12 * base.max(1.0));
            }
        }
    }

    #[test]
    fn rounding_meets_counts_or_reports_infeasibility(
        gps in prop::collection::vec(0.0f64..=1.0, 0..10),
        vision in prop::collection::vec(0.0f64..=1.0, 0..10),
        n_min in 1usize..8,
        l_min in 0usize..8,
        beta in 0.05f64..0.95,
    ) {
        let cfg = SelectionConfig { n_min, l_min, beta, ..SelectionConfig::default() };
        let relaxed = AttentionSet { gps: gps.clone(), vision: vision.clone(), relaxed: true };
        match round_attention(&relaxed, &cfg) {
            Ok(q) => {
                prop_assert!(q.gps.iter().filter(|v| **v == 1.0).count() >= n_min);
                prop_assert!(q.vision.iter().filter(|v| **v == 1.0).count() >= l_min);
                prop_assert!(q.gps.iter().chain(&q.vision).all(|v| *v == 0.0 || *v == 1.0));
            }
            Err(Error::Infeasible(_)) => prop_assert!(gps.len() < n_min || vision.len() < l_min),
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn raising_a_fault_status_never_pulls_a_landmark_in(seed in any::<u64>(), target in 0usize..8) {
        let mut a = synthetic_analysis(seed, 5, 3);
        let cfg = SelectionConfig { n_min: 2, l_min: 1, ..SelectionConfig::default() };
        let lower = |a: &mut EpochAnalysis, v: f64| {
            let m = if target < 5 { &mut a.gps[target] } else { &mut a.vision[target - 5] };
            m.joint_status = v;
            m.epoch_status = v;
        };
        lower(&mut a, 0.0);
        let pick = |q: &AttentionSet| if target < 5 { q.gps[target] } else { q.vision[target - 5] };
        let before = pick(&brute_force_oracle(&a, &cfg).unwrap());
        lower(&mut a, 0.99);
        let after = pick(&brute_force_oracle(&a, &cfg).unwrap());
        prop_assert!(!(before == 0.0 && after == 1.0));
    }

    #[test]
    fn selection_is_deterministic(seed in any::<u64>()) {
        let a = synthetic_analysis(seed, 5, 4);
        let cfg = SelectionConfig { n_min: 3, l_min: 2, ..SelectionConfig::default() };
        prop_assert_eq!(select(&a, &cfg).unwrap(), select(&a, &cfg).unwrap());
    }
}

#[test]
fn fault_free_statuses_rarely_exceed_one_half() {
    let counts: Vec<(usize, usize, usize)> = (1..=40u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = ScenarioConfig {
                seed,
                fault_windows: Vec::new(),
                ..ScenarioConfig::default()
            };
            let scenario = generate_scenario(&cfg).unwrap();
            let bounds = cfg.noise.bounds().unwrap();
            let pose_cov = Matrix3::identity() * cfg.noise.initial_position_m.powi(2);
            let (mut epochs, mut cases, mut high) = (0, 0, 0);
            for plan in 0..scenario.keyframes.len() {
                let k = scenario.keyframes[plan].epoch;
                let mm = scenario.motion_mean(k, None);
                let Ok((track, lms)) = scenario.start_track(plan, &mm, &pose_cov) else { continue };
                let sampled = sample_measurements(&scenario, k, &mm, Some(&track), &lms).unwrap();
                let a = ReachPipeline::new(cfg.k_window).unwrap().analyze(&sampled.inputs, &bounds).unwrap();
                epochs += 1;
                for m in a.gps.iter().chain(&a.vision) {
                    cases += 1;
                    high += usize::from(m.epoch_status > 0.5);
                }
            }
            (epochs, cases, high)
        })
        .collect();
    let epochs: usize = counts.iter().map(|c| c.0).sum();
    let cases: usize = counts.iter().map(|c| c.1).sum();
    let high: usize = counts.iter().map(|c| c.2).sum();
    assert!(epochs >= 1000, "only {epochs} epochs");
    assert!(high as f64 <= 0.01 * cases as f64, "{high} of {cases} statuses above 0.5");
}

#[test]
fn full_selection_error_stays_within_three_bounds() {
    let records: Vec<(f64, f64)> = (1..=17u64)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let scenario = generate_scenario(&ScenarioConfig {
                seed,
                fault_windows: Vec::new(),
                ..ScenarioConfig::default()
            })
            .unwrap();
            run_scenario(&scenario, &Strategy::All)
                .unwrap()
                .records
                .into_iter()
                .map(|r| (r.err_3d_m, r.predicted_bound_m))
        })
        .collect();
    assert!(records.len() >= 1000);
    let within = records.iter().filter(|(e, b)| *e < 3.0 * b).count();
    assert!(
        within as f64 >= 0.99 * records.len() as f64,
        "{within} of {} epochs within 3x the bound",
        records.len()
    );
}
