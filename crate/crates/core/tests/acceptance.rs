//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::time::{Duration, Instant};

use ila::attention::{brute_force_oracle, objective, select, AttentionSet, SelectionConfig};
use ila::cli::{epochs_csv, Snapshot};
use ila::models::{
    gps_jacobian, gps_predict, unproject, vision_jacobians, vision_predict, CameraIntrinsics, GpsSatellite,
    ImageField, Keyframe, NavState, StateRow,
};
use ila::pzono::{
    confidence_cut, enclose_union, fault_status_point, gaussian_multiplier, linear_map, minkowski_sum, translate,
    PZonotope,
};
use ila::reach::{EpochAnalysis, ReachPipeline};
use ila::sim::{generate_scenario, run_scenario, sample_measurements, RunOutput, ScenarioConfig, Strategy};
use nalgebra::{DMatrix, DVector, Matrix3, RowVector3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("set-algebra exactness", set_algebra_exactness, Duration::from_secs(5)),
        ("union containment", union_containment, Duration::from_secs(60)),
        ("confidence-cut calibration", cut_calibration, Duration::MAX),
        ("jacobian correctness", jacobian_correctness, Duration::from_secs(10)),
        ("fault-status behavior", fault_status_behavior, Duration::MAX),
        ("optimizer oracle gap", oracle_gap, Duration::from_secs(300)),
        ("scaled replication", scaled_replication, Duration::from_secs(600)),
        ("end-to-end determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > *limit {
            outcome = Err(format!("took {:.1} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()));
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {tag} {name}: {detail} [{:.1} s]", i + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0))
}

fn random_pzono(rng: &mut ChaCha8Rng, n: usize, e: usize) -> PZonotope {
    let b = random_matrix(rng, n, n);
    PZonotope::new(random_matrix(rng, n, 1).column(0).into(), random_matrix(rng, n, e), &b * b.transpose()).unwrap()
}

/// Largest entry-wise error scaled by `max(1, |expected|)`.
fn max_rel(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    if got.shape() != want.shape() {
        return f64::INFINITY;
    }
    got.iter()
        .zip(want.iter())
        .map(|(g, w)| (g - w).abs() / w.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// `a · b` by explicit summation.
fn naive_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

fn parts(p: &PZonotope) -> [DMatrix<f64>; 3] {
    [
        DMatrix::from_column_slice(p.dim(), 1, p.center().as_slice()),
        p.generators().clone(),
        p.covariance().clone(),
    ]
}

fn set_algebra_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=7);
        let (ea, eb) = (rng.random_range(0..=7), rng.random_range(0..=7));
        let a = random_pzono(&mut rng, n, ea);
        let b = random_pzono(&mut rng, n, eb);
        let [ca, ga, sa] = parts(&a);
        let [cb, gb, sb] = parts(&b);

        let mut g_sum = DMatrix::zeros(n, ea + eb);
        for j in 0..ea {
            g_sum.set_column(j, &ga.column(j));
        }
        for j in 0..eb {
            g_sum.set_column(ea + j, &gb.column(j));
        }
        let got = parts(&minkowski_sum(&a, &b).map_err(|e| e.to_string())?);
        for (g, w) in got.iter().zip([&ca + &cb, g_sum, &sa + &sb]) {
            worst = worst.max(max_rel(g, &w));
        }

        let k = rng.random_range(1..=7);
        let m = random_matrix(&mut rng, k, n);
        let got = parts(&linear_map(&m, &a).map_err(|e| e.to_string())?);
        let want = [naive_mul(&m, &ca), naive_mul(&m, &ga), naive_mul(&naive_mul(&m, &sa), &m.transpose())];
        for (g, w) in got.iter().zip(want) {
            worst = worst.max(max_rel(g, &w));
        }

        let mu = random_matrix(&mut rng, n, 1);
        let got = parts(&translate(&mu.column(0).into(), &a).map_err(|e| e.to_string())?);
        for (g, w) in got.iter().zip([&mu + &ca, ga.clone(), sa.clone()]) {
            worst = worst.max(max_rel(g, &w));
        }
    }
    check(worst <= 1e-12, format!("worst scaled error {worst:.2e} over 1000 instances"))
}

/// Unit normals of the facets of a full-dimensional zonotope with generator
/// matrix `g`: generalized cross products of every `n - 1` generators.
fn facet_normals(g: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = g.nrows();
    if n == 1 {
        return vec![DVector::from_element(1, 1.0)];
    }
    let m = g.ncols();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n - 1).collect();
    loop {
        let sub = DMatrix::from_fn(n, n - 1, |r, c| g[(r, idx[c])]);
        let v = DVector::from_fn(n, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * sub.clone().remove_row(i).determinant()
        });
        if v.norm() > 1e-12 {
            out.push(v.normalize());
        }
        let mut i = n - 2;
        loop {
            if idx[i] < m - (n - 1 - i) {
                idx[i] += 1;
                for j in i + 1..n - 1 {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return out;
            }
            i -= 1;
        }
    }
}

fn union_containment() -> Outcome {
    let n_samples = 10_000;
    let threshold = 0.95 - 3.0 * (0.95_f64 * 0.05 / n_samples as f64).sqrt();
    let results: Vec<f64> = (0..200u64)
        .into_par_iter()
        .flat_map_iter(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + case);
            let n = rng.random_range(1..=4);
            let count = rng.random_range(1..=5);
            let members: Vec<PZonotope> = (0..count)
                .map(|_| {
                    let e = rng.random_range(1..=4);
                    let c = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
                    let g = DMatrix::from_fn(n, e, |_, _| rng.random_range(-1.0..1.0));
                    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                    PZonotope::new(c, g, &a * a.transpose()).unwrap()
                })
                .collect();
            let cut = confidence_cut(&enclose_union(&members).unwrap(), 0.95).unwrap();
            let normals = facet_normals(cut.generators());
            let reach: Vec<f64> = normals.iter().map(|v| (v.transpose() * cut.generators()).abs().sum()).collect();
            members
                .iter()
                .map(|m| {
                    let l = m.covariance().clone().cholesky().map(|c| c.l()).unwrap_or_else(|| DMatrix::zeros(n, n));
                    let inside = (0..n_samples)
                        .filter(|_| {
                            let beta = DVector::from_fn(m.num_generators(), |_, _| rng.random_range(-1.0..=1.0));
                            let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                            let x = m.center() + m.generators() * beta + &l * z - cut.center();
                            normals.iter().zip(&reach).all(|(v, r)| v.dot(&x).abs() <= *r)
                        })
                        .count();
                    inside as f64 / n_samples as f64
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let worst = results.iter().copied().fold(1.0, f64::min);
    let below = results.iter().filter(|f| **f < threshold).count();
    check(
        below == 0,
        format!(
            "{} members in 200 cases, worst coverage {worst:.4}, threshold {threshold:.4}, {below} below",
            results.len()
        ),
    )
}

fn cut_calibration() -> Outcome {
    // two-sided normal coverage of 1, 2 and 3 standard deviations
    let table = [(1.0, 0.682_689_492_137_085_9), (2.0, 0.954_499_736_103_641_6), (3.0, 0.997_300_203_936_739_8)];
    let mut worst: f64 = 0.0;
    for (k, gamma) in table {
        let m = gaussian_multiplier(gamma).map_err(|e| e.to_string())?;
        worst = worst.max((m - k).abs());
        let pct = (gamma * 100.0 * 1000.0).round() / 1000.0;
        if ![68.269, 95.450, 99.730].contains(&pct) {
            return Err(format!("coverage {gamma} does not round to the table"));
        }
    }
    check(worst <= 1e-9, format!("max |m(γ) - k| = {worst:.2e} for k = 1, 2, 3"))
}

/// Smooth analytic test image.
struct WaveImage;

impl ImageField for WaveImage {
    fn intensity(&self, u: &Vector2<f64>) -> ila::Result<f64> {
        Ok(100.0 + 40.0 * (0.02 * u[0]).sin() * (0.015 * u[1]).cos() + 0.05 * u[0] - 0.03 * u[1])
    }
    fn gradient(&self, u: &Vector2<f64>) -> ila::Result<Vector2<f64>> {
        Ok(Vector2::new(
            0.8 * (0.02 * u[0]).cos() * (0.015 * u[1]).cos() + 0.05,
            -0.6 * (0.02 * u[0]).sin() * (0.015 * u[1]).sin() - 0.03,
        ))
    }
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max) / scale
}

fn central(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

fn jacobian_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_h, mut worst_bx, mut worst_bp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).map_err(|e| e.to_string())?;
    let err = |e: ila::Error| e.to_string();

    for _ in 0..100 {
        let state = NavState::new(
            Vector3::from_fn(|_, _| rng.random_range(-100.0..100.0)),
            Vector3::from_fn(|_, _| rng.random_range(-0.5..0.5)),
            rng.random_range(-50.0..50.0),
        )
        .map_err(err)?;
        let sat = GpsSatellite::from_look_angles(
            "S",
            &Vector3::zeros(),
            rng.random_range(5.0..85.0),
            rng.random_range(0.0..360.0),
            rng.random_range(2.0e7..2.6e7),
            rng.random_range(-10.0..10.0),
        )
        .map_err(err)?;
        let h = gps_jacobian(&state, &sat).map_err(err)?;
        // range is near-linear at 1 m scale, so a wide step keeps the
        // difference well above the rounding of a 2e7 m value
        let fd: Vec<f64> = (0..7)
            .map(|i| {
                central(
                    |d| {
                        let mut delta = ila::models::StateVector::zeros();
                        delta[i] = d;
                        gps_predict(&state.perturbed(&delta), &sat).unwrap()
                    },
                    1.0,
                )
            })
            .collect();
        worst_h = worst_h.max(rel_err(h.as_slice(), &fd));
    }

    let mut done = 0;
    while done < 100 {
        let state = NavState::new(
            Vector3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(1.2..2.0)),
            Vector3::new(
                rng.random_range(-0.05..0.05),
                rng.random_range(-0.05..0.05),
                rng.random_range(-3.0..3.0),
            ),
            0.0,
        )
        .map_err(err)?;
        let u = Vector2::new(rng.random_range(60.0..580.0), rng.random_range(60.0..420.0));
        let depth = rng.random_range(3.0..15.0);
        let p = state.camera_to_world(&unproject(&k, &u, 1.0 / depth).map_err(err)?);
        let kf_state = state.perturbed(&ila::models::StateVector::from_fn(|i, _| match i {
            0..=2 => rng.random_range(-0.5..0.5),
            3..=5 => rng.random_range(-0.02..0.02),
            _ => 0.0,
        }));
        let p_kf = kf_state.world_to_camera(&p);
        if p_kf[2] < 1.0 {
            continue;
        }
        let kf_pixel = Vector2::new(k.fx * p_kf[0] / p_kf[2] + k.cx, k.fy * p_kf[1] / p_kf[2] + k.cy);
        let kf = Keyframe::new(kf_state, vec![kf_pixel], vec![1.0 / p_kf[2]], vec![0.0]).map_err(err)?;

        let (bx, bp): (StateRow, RowVector3<f64>) = vision_jacobians(&state, &p, &k, &WaveImage).map_err(err)?;
        let fd_x: Vec<f64> = (0..7)
            .map(|i| {
                let h = if i < 3 { 1e-5 } else { 1e-6 };
                central(
                    |d| {
                        let mut delta = ila::models::StateVector::zeros();
                        delta[i] = d;
                        vision_predict(&state.perturbed(&delta), &p, &kf, &k, &WaveImage).unwrap()
                    },
                    h,
                )
            })
            .collect();
        let fd_p: Vec<f64> = (0..3)
            .map(|i| {
                central(
                    |d| {
                        let mut q = p;
                        q[i] += d;
                        vision_predict(&state, &q, &kf, &k, &WaveImage).unwrap()
                    },
                    1e-5,
                )
            })
            .collect();
        worst_bx = worst_bx.max(rel_err(bx.as_slice(), &fd_x));
        worst_bp = worst_bp.max(rel_err(bp.as_slice(), &fd_p));
        done += 1;
    }
    let worst = worst_h.max(worst_bx).max(worst_bp);
    check(
        worst < 1e-5,
        format!("max relative error H {worst_h:.1e}, B_x {worst_bx:.1e}, B_p {worst_bp:.1e} over 100 configurations each"),
    )
}

/// Joint GPS fault status of satellite `sat` after `epochs` epochs with a
/// constant `bias` on its pseudorange.
fn joint_status_after(seed: u64, sat: usize, bias: f64, epochs: usize) -> ila::Result<f64> {
    let cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };
    let scenario = generate_scenario(&cfg)?;
    let bounds = cfg.noise.bounds()?;
    let mut pipeline = ReachPipeline::new(cfg.k_window)?;
    let mut b = vec![0.0; scenario.satellites.len()];
    b[sat] = bias;
    let mut status = 0.0;
    for k in 0..epochs {
        let analysis = pipeline.analyze(&Snapshot::gps_only(&scenario, k, &b)?.to_inputs()?, &bounds)?;
        status = analysis.gps[sat].joint_status;
    }
    Ok(status)
}

fn fault_status_behavior() -> Outcome {
    let cfg = ScenarioConfig::default();
    let sigma = cfg.noise.gps_variance_max_m2.sqrt();
    if sigma > 5.0 {
        return Err(format!("default GPS noise σ {sigma} exceeds 5 m"));
    }
    let err = |e: ila::Error| e.to_string();

    // interior points of every innovation hull, GPS and vision
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut interior = 0;
    for seed in 1..=20 {
        let Some(analysis) = pipeline_instance(seed, None) else { continue };
        for a in analysis.gps.iter().chain(&analysis.vision) {
            let set = &a.innovation_set;
            let r: f64 = set.generators().iter().map(|g| g.abs()).sum();
            for _ in 0..50 {
                let x = set.center()[0] + r * rng.random_range(-0.999..0.999);
                let s = fault_status_point(set, &DVector::from_element(1, x)).map_err(err)?;
                if s != 0.0 {
                    return Err(format!("status {s} for an innovation inside the hull"));
                }
                interior += 1;
            }
        }
    }

    let biases = [0.0, 10.0, 30.0, 60.0];
    let k = cfg.k_window;
    let rows: Vec<Vec<f64>> = (1..=20u64)
        .into_par_iter()
        .map(|seed| {
            biases
                .iter()
                .map(|&b| joint_status_after(seed, (seed % 8) as usize, b, k))
                .collect::<ila::Result<Vec<f64>>>()
        })
        .collect::<ila::Result<Vec<_>>>()
        .map_err(err)?;
    let monotone = rows.iter().filter(|r| r.windows(2).all(|w| w[1] >= w[0])).count();
    let at30: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let min30 = at30.iter().copied().fold(1.0, f64::min);
    let detected = at30.iter().filter(|s| **s >= 0.9).count();
    check(
        monotone == 20 && detected == 20,
        format!(
            "{interior} interior innovations at status 0; monotone in bias for {monotone}/20 seeds; \
             joint status ≥ 0.9 after {k} epochs of 30 m bias in {detected}/20 seeds (min {min30:.3})"
        ),
    )
}

/// Epoch analysis of a keyframe epoch of scenario `seed`, with the
/// measurement lists cut to six GPS and six vision landmarks. `outside`
/// restricts the epoch to be inside (`false`) or outside (`true`) the fault
/// window.
fn pipeline_instance(seed: u64, outside: Option<bool>) -> Option<EpochAnalysis> {
    let cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };
    let scenario = generate_scenario(&cfg).ok()?;
    let plans: Vec<usize> = (0..scenario.keyframes.len())
        .filter(|&p| outside.is_none_or(|o| scenario.in_fault_window(scenario.keyframes[p].epoch) != o))
        .collect();
    let plan = plans[seed as usize % plans.len()];
    let k = scenario.keyframes[plan].epoch;
    let motion_mean = scenario.motion_mean(k, None);
    let pose_cov = Matrix3::identity() * cfg.noise.initial_position_m.powi(2);
    let (track, landmarks) = scenario.start_track(plan, &motion_mean, &pose_cov).ok()?;
    let mut sampled = sample_measurements(&scenario, k, &motion_mean, Some(&track), &landmarks).ok()?;
    sampled.inputs.gps.truncate(6);
    sampled.inputs.vision.truncate(6);
    let analysis = ReachPipeline::new(cfg.k_window)
        .ok()?
        .analyze(&sampled.inputs, &cfg.noise.bounds().ok()?)
        .ok()?;
    (analysis.n_gps() == 6 && analysis.n_vision() == 6).then_some(analysis)
}

fn oracle_gap() -> Outcome {
    let cfg = SelectionConfig {
        n_min: 3,
        l_min: 2,
        ..SelectionConfig::default()
    };
    let err = |e: ila::Error| e.to_string();
    let collect = |outside: Option<bool>| -> Vec<EpochAnalysis> {
        (1..).filter_map(|s| pipeline_instance(s, outside)).take(50).collect()
    };

    let mut within = 0;
    let mut worst: f64 = 0.0;
    for a in collect(None) {
        let solved = select(&a, &cfg).map_err(err)?;
        let best = objective(&brute_force_oracle(&a, &cfg).map_err(err)?, &a, &cfg).map_err(err)?;
        let ratio = solved.objective / best;
        worst = worst.max(ratio);
        if ratio <= 1.10 {
            within += 1;
        }
    }

    let mut excluded = 0;
    for (i, mut a) in collect(Some(true)).into_iter().enumerate() {
        if a.gps.iter().chain(&a.vision).any(|m| m.joint_status > 0.5) {
            return Err("fault-free instance carries a fault".into());
        }
        let f = i % 12;
        let member = if f < 6 { &mut a.gps[f] } else { &mut a.vision[f - 6] };
        member.joint_status = 0.99;
        let out = |q: &AttentionSet| if f < 6 { q.gps[f] == 0.0 } else { q.vision[f - 6] == 0.0 };
        let solved = select(&a, &cfg).map_err(err)?;
        let oracle = brute_force_oracle(&a, &cfg).map_err(err)?;
        if out(&solved.rounded) && out(&oracle) {
            excluded += 1;
        }
    }
    check(
        within >= 45 && excluded == 50,
        format!("ratio ≤ 1.10 in {within}/50 (worst {worst:.4}); planted fault excluded in {excluded}/50"),
    )
}

struct SeedResult {
    ila: RunOutput,
    gps_only: RunOutput,
    all: RunOutput,
    fault_free: RunOutput,
}

fn scaled_replication() -> Outcome {
    let base = ScenarioConfig::default();
    let shape_ok = base.duration_s == 60.0
        && base.rate_hz == 1.0
        && base.satellites.len() == 8
        && base.vision.landmark_count == 50
        && base.selection.alert_limit == 7.5
        && base.fault_windows.len() == 1
        && base.fault_windows[0].start_s == 9.0
        && base.fault_windows[0].end_s == 24.0;
    if !shape_ok {
        return Err("default scenario does not match the replication setup".into());
    }
    let results: Vec<SeedResult> = (1..=20u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = ScenarioConfig { seed, ..base.clone() };
            let scenario = generate_scenario(&cfg)?;
            let clean = generate_scenario(&ScenarioConfig {
                fault_windows: Vec::new(),
                ..cfg.clone()
            })?;
            Ok(SeedResult {
                ila: run_scenario(&scenario, &Strategy::Ila)?,
                gps_only: run_scenario(&scenario, &Strategy::GpsOnly)?,
                all: run_scenario(&scenario, &Strategy::All)?,
                fault_free: run_scenario(&clean, &Strategy::Ila)?,
            })
        })
        .collect::<ila::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;

    let beats_all = results.iter().filter(|r| r.ila.max_err_2d() < r.all.max_err_2d()).count();
    let beats_gps = results.iter().filter(|r| r.ila.max_err_2d() < r.gps_only.max_err_2d()).count();
    let unavailable: Vec<bool> = results
        .iter()
        .flat_map(|r| r.ila.records.iter().filter(|e| !e.available).map(|e| e.in_fault_window))
        .collect();
    let in_window = unavailable.iter().filter(|w| **w).count() as f64 / unavailable.len().max(1) as f64;
    let clean: Vec<bool> = results
        .iter()
        .flat_map(|r| r.fault_free.records.iter().map(|e| e.err_3d_m <= e.predicted_bound_m))
        .collect();
    let bounded = clean.iter().filter(|b| **b).count() as f64 / clean.len() as f64;

    let (a, b, c, d) = (beats_all >= 16, beats_gps >= 16, in_window >= 0.8, bounded >= 0.99);
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    check(
        a && b && c && d,
        format!(
            "(a) beats all-landmarks {beats_all}/20 {}; (b) beats GPS-only {beats_gps}/20 {}; \
             (c) {:.1}% of {} unavailable epochs in window {}; (d) error ≤ bound in {:.2}% of {} fault-free epochs {}",
            mark(a),
            mark(b),
            100.0 * in_window,
            unavailable.len(),
            mark(c),
            100.0 * bounded,
            clean.len(),
            mark(d)
        ),
    )
}

fn determinism() -> Outcome {
    let run = || -> ila::Result<String> {
        let scenario = generate_scenario(&ScenarioConfig {
            seed: 11,
            ..ScenarioConfig::default()
        })?;
        Ok(epochs_csv(&run_scenario(&scenario, &Strategy::Ila)?.records))
    };
    let first = run().map_err(|e| e.to_string())?;
    let second = run().map_err(|e| e.to_string())?;
    let third = std::thread::spawn(run).join().map_err(|_| "worker panicked".to_string())?.map_err(|e| e.to_string())?;
    check(
        first == second && first == third,
        format!("{} bytes of epochs.csv identical across 3 runs", first.len()),
    )
}
