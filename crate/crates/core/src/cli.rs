//! Command-line front end: scenario runs, one-shot selection on snapshot
//! files, baseline comparison and set-operation debugging.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attention::{select, SelectionConfig, SelectionRecord};
use crate::error::{Error, Result};
use crate::models::{gps_predict, GpsSatellite, NavState, VisionLandmark};
use crate::pzono::{confidence_cut, enclose_union, minkowski_sum, zonotope_size, PZonotope, WeightVector};
use crate::reach::{CameraContext, EpochInputs, GpsObservation, ReachPipeline, VisionObservation};
use crate::sim::{compare, generate_scenario, run_scenario, EpochRecord, NoiseSpec, RunOutput, Scenario, ScenarioConfig, Strategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

pub const EPOCHS_HEADER: &str = "epoch,t_s,err_3d_m,err_2d_m,predicted_bound_m,available,n_gps_selected,n_vis_selected,mean_alpha_gps,mean_alpha_vis";

#[derive(Debug, Parser)]
#[command(name = "ila", version, about = "Integrity-driven landmark attention for GPS-vision navigation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write per-epoch records and a summary.
    Simulate(SimulateArgs),
    /// Select landmarks for a single epoch snapshot.
    Select(SelectArgs),
    /// Compare ILA against the GPS-only, all-landmarks and random baselines.
    Compare(CompareArgs),
    /// Evaluate a p-Zonotope set operation on JSON sets.
    Pzono(PzonoArgs),
}

/// Selection parameter overrides shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Alert limit in meters.
    #[arg(long)]
    pub al: Option<f64>,
    /// Confidence level of the cut.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Rounding threshold.
    #[arg(long)]
    pub beta: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SelectionConfig) {
        if let Some(al) = self.al {
            cfg.alert_limit = al;
        }
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario config (JSON). Defaults to the built-in scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds to run.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Epoch snapshot (JSON).
    pub snapshot: PathBuf,
    /// Scenario config supplying selection parameters and noise bounds.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    GpsOnly,
    All,
    Random,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Baselines to report next to ILA.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Baseline::GpsOnly, Baseline::All, Baseline::Random])]
    pub baselines: Vec<Baseline>,
    /// Random selections drawn per epoch for the random baseline.
    #[arg(long, default_value_t = 50)]
    pub random_runs: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SetOp {
    /// Minkowski sum of A and B.
    Sum,
    /// Enclosing union of A and B.
    Union,
    /// Confidence cut of A at `--gamma`.
    Cut,
    /// Size of the cut of A at `--gamma` with uniform weights.
    Size,
}

#[derive(Debug, Args)]
pub struct PzonoArgs {
    #[arg(value_enum)]
    pub op: SetOp,
    pub a: PathBuf,
    pub b: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
}

/// Per-run metrics written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub seed: u64,
    pub epochs: usize,
    pub max_err_3d_m: f64,
    pub max_err_2d_m: f64,
    pub availability_fraction: f64,
    pub failed_epochs: usize,
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunSummary {
    pub fn from_run(out: &RunOutput, seed: u64, digest: &str) -> Self {
        Self {
            status: "ok".into(),
            seed,
            epochs: out.records.len(),
            max_err_3d_m: out.max_err_3d(),
            max_err_2d_m: out.max_err_2d(),
            availability_fraction: out.availability_fraction(),
            failed_epochs: out.records.iter().filter(|r| r.failure.is_some()).count(),
            config_digest: digest.into(),
            error: None,
        }
    }

    fn failed(seed: u64, digest: &str, err: &Error) -> Self {
        Self {
            status: "failed".into(),
            seed,
            epochs: 0,
            max_err_3d_m: 0.0,
            max_err_2d_m: 0.0,
            availability_fraction: 0.0,
            failed_epochs: 0,
            config_digest: digest.into(),
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub max_err_3d_m: f64,
    pub max_err_2d_m: f64,
    pub availability_fraction: f64,
}

/// Mean and worst case over Monte-Carlo seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: Vec<u64>,
    pub failed_runs: usize,
    pub mean: MetricStats,
    pub max: MetricStats,
    pub min_availability_fraction: f64,
}

impl Aggregate {
    pub fn from_summaries(summaries: &[RunSummary]) -> Self {
        let ok: Vec<&RunSummary> = summaries.iter().filter(|s| s.status == "ok").collect();
        let n = ok.len().max(1) as f64;
        let mean = |f: fn(&RunSummary) -> f64| ok.iter().map(|s| f(s)).sum::<f64>() / n;
        let max = |f: fn(&RunSummary) -> f64| ok.iter().map(|s| f(s)).fold(0.0, f64::max);
        Self {
            seeds: summaries.iter().map(|s| s.seed).collect(),
            failed_runs: summaries.len() - ok.len(),
            mean: MetricStats {
                max_err_3d_m: mean(|s| s.max_err_3d_m),
                max_err_2d_m: mean(|s| s.max_err_2d_m),
                availability_fraction: mean(|s| s.availability_fraction),
            },
            max: MetricStats {
                max_err_3d_m: max(|s| s.max_err_3d_m),
                max_err_2d_m: max(|s| s.max_err_2d_m),
                availability_fraction: max(|s| s.availability_fraction),
            },
            min_availability_fraction: ok.iter().map(|s| s.availability_fraction).fold(1.0, f64::min),
        }
    }
}

/// SHA-256 of the config serialized as JSON with sorted keys.
pub fn config_digest(cfg: &ScenarioConfig) -> Result<String> {
    // serde_json::Value keeps object keys sorted
    let canonical = serde_json::to_string(&serde_json::to_value(cfg)?)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "nan".into()
    }
}

/// Renders records as `epochs.csv`.
pub fn epochs_csv(records: &[EpochRecord]) -> String {
    let mut s = String::with_capacity(80 * (records.len() + 1));
    s.push_str(EPOCHS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.epoch,
            fmt_f64(r.t_s),
            fmt_f64(r.err_3d_m),
            fmt_f64(r.err_2d_m),
            fmt_f64(r.predicted_bound_m),
            r.available,
            r.n_gps_selected,
            r.n_vis_selected,
            fmt_f64(r.mean_alpha_gps),
            fmt_f64(r.mean_alpha_vis),
        ));
    }
    s
}

fn selection_jsonl(records: &[SelectionRecord]) -> Result<String> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Loads a scenario config, or the built-in default when `path` is `None`,
/// and applies the overrides.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::config("config", format!("{}: {e}", p.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::default(),
    };
    overrides.apply(&mut cfg.selection);
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one seed and writes `epochs.csv`, `summary.json` and
/// `selection.jsonl` into `dir`.
pub fn simulate_to_dir(cfg: &ScenarioConfig, dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(dir)?;
    let digest = config_digest(cfg)?;
    let run = generate_scenario(cfg).and_then(|sc| run_scenario(&sc, &Strategy::Ila));
    match run {
        Ok(out) => {
            fs::write(dir.join("epochs.csv"), epochs_csv(&out.records))?;
            fs::write(dir.join("selection.jsonl"), selection_jsonl(&out.selections)?)?;
            let summary = RunSummary::from_run(&out, cfg.seed, &digest);
            write_json(&dir.join("summary.json"), &summary)?;
            Ok(summary)
        }
        Err(e) => {
            write_json(&dir.join("summary.json"), &RunSummary::failed(cfg.seed, &digest, &e))?;
            Err(e)
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let n = args.seeds.unwrap_or(1);
    if n == 0 {
        return Err(Error::config("seeds", "must be at least 1"));
    }
    if args.seeds.is_none() {
        let s = simulate_to_dir(&cfg, &args.out)?;
        log::info!("seed {}: max 2D error {:.3} m, availability {:.3}", s.seed, s.max_err_2d_m, s.availability_fraction);
        return Ok(());
    }
    fs::create_dir_all(&args.out)?;
    let results: Vec<(u64, Result<RunSummary>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let c = ScenarioConfig { seed, ..cfg.clone() };
            (seed, simulate_to_dir(&c, &args.out.join(format!("seed_{seed}"))))
        })
        .collect();
    let digest = config_digest(&cfg)?;
    let mut summaries = Vec::with_capacity(n);
    let mut first_error = None;
    for (seed, r) in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(e) => {
                summaries.push(RunSummary::failed(seed, &digest, &e));
                first_error.get_or_insert(e);
            }
        }
    }
    write_json(&args.out.join("aggregate.json"), &Aggregate::from_summaries(&summaries))?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// GPS measurement in a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSatellite {
    pub id: String,
    pub position: [f64; 3],
    #[serde(default)]
    pub clock_correction: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub pseudorange: f64,
}

/// Vision measurement in a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotLandmark {
    pub id: String,
    pub position_set: PZonotope,
    pub pixel: [f64; 2],
    pub intensity: f64,
    #[serde(default)]
    pub keyframe: usize,
}

/// One epoch of measurements for the `select` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    #[serde(default)]
    pub epoch: usize,
    pub a_priori: NavState,
    pub motion_mean: NavState,
    pub satellites: Vec<SnapshotSatellite>,
    #[serde(default)]
    pub landmarks: Vec<SnapshotLandmark>,
    #[serde(default)]
    pub camera: Option<CameraContext>,
    /// Noise bounds; the config's bounds apply when absent.
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Selection parameters; the config's apply when absent.
    #[serde(default)]
    pub selection: Option<SelectionConfig>,
}

impl Snapshot {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error(de)
    }

    pub fn from_inputs(epoch: usize, inputs: &EpochInputs, noise: Option<NoiseSpec>) -> Self {
        Self {
            epoch,
            a_priori: inputs.a_priori,
            motion_mean: inputs.motion_mean,
            satellites: inputs
                .gps
                .iter()
                .map(|g| SnapshotSatellite {
                    id: g.satellite.id.clone(),
                    position: g.satellite.position.into(),
                    clock_correction: g.satellite.clock_correction,
                    elevation_deg: g.satellite.elevation_deg,
                    azimuth_deg: g.satellite.azimuth_deg,
                    pseudorange: g.pseudorange,
                })
                .collect(),
            landmarks: inputs
                .vision
                .iter()
                .map(|v| SnapshotLandmark {
                    id: v.landmark.id.clone(),
                    position_set: v.landmark.position_set.clone(),
                    pixel: v.landmark.source_pixel.into(),
                    intensity: v.intensity,
                    keyframe: v.landmark.keyframe,
                })
                .collect(),
            camera: inputs.camera.clone(),
            noise,
            selection: None,
        }
    }

    /// GPS-only snapshot of epoch `k` of a scenario: pseudoranges from the
    /// true state plus the scenario noise, plus `bias[i]` on satellite `i`.
    /// Satellites beyond `bias.len()` are dropped.
    pub fn gps_only(scenario: &Scenario, k: usize, bias: &[f64]) -> Result<Self> {
        let truth = &scenario.truth[k];
        let motion_mean = scenario.motion_mean(k, None);
        let gps = scenario
            .satellites
            .iter()
            .zip(bias)
            .enumerate()
            .map(|(i, (sat, b))| {
                Ok(GpsObservation {
                    satellite: sat.clone(),
                    pseudorange: gps_predict(truth, sat)? + scenario.gps_noise[k][i] + b,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let inputs = EpochInputs {
            a_priori: motion_mean,
            motion_mean,
            gps,
            vision: Vec::new(),
            camera: None,
        };
        let mut snap = Self::from_inputs(k, &inputs, Some(scenario.config.noise));
        snap.selection = Some(SelectionConfig {
            l_min: 0,
            ..scenario.config.selection.clone()
        });
        Ok(snap)
    }

    pub fn to_inputs(&self) -> Result<EpochInputs> {
        let gps = self
            .satellites
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let sat = GpsSatellite::new(&s.id, Vector3::from(s.position), s.clock_correction, s.elevation_deg, s.azimuth_deg)
                    .map_err(|e| Error::config(format!("satellites[{i}]"), e.to_string()))?;
                Ok(GpsObservation {
                    satellite: sat,
                    pseudorange: s.pseudorange,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let vision = self
            .landmarks
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let c = l.position_set.center();
                if c.len() != 3 {
                    return Err(Error::config(format!("landmarks[{j}].position_set"), "must be 3-dimensional"));
                }
                let lm = VisionLandmark::new(
                    l.id.clone(),
                    Vector3::new(c[0], c[1], c[2]),
                    l.position_set.clone(),
                    Vector2::from(l.pixel),
                    l.keyframe,
                )
                .map_err(|e| Error::config(format!("landmarks[{j}]"), e.to_string()))?;
                Ok(VisionObservation {
                    landmark: lm,
                    intensity: l.intensity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let inputs = EpochInputs {
            a_priori: self.a_priori,
            motion_mean: self.motion_mean,
            gps,
            vision,
            camera: self.camera.clone(),
        };
        inputs.validate().map_err(|e| Error::config("snapshot", e.to_string()))?;
        Ok(inputs)
    }
}

/// Deserializes while tracking the JSON path of the first error.
fn serde_path_to_error<'de, T: Deserialize<'de>>(de: &mut serde_json::Deserializer<serde_json::de::StrRead<'de>>) -> Result<T> {
    T::deserialize(&mut *de)
        .and_then(|v| de.end().map(|_| v))
        .map_err(|e| {
            let msg = e.to_string();
            let key = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
                .map(str::to_string)
                .unwrap_or_else(|| format!("line {} column {}", e.line(), e.column()));
            Error::config(key, msg)
        })
}

/// Selection output of the `select` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectOutput {
    #[serde(flatten)]
    pub record: SelectionRecord,
    pub gps_ids: Vec<String>,
    pub vision_ids: Vec<String>,
}

/// Runs reachability and selection on one snapshot.
/// Snapshot selection parameters take precedence over the config's, and
/// `overrides` over both.
pub fn select_snapshot(snapshot: &Snapshot, cfg: &ScenarioConfig, overrides: &Overrides) -> Result<SelectOutput> {
    let inputs = snapshot.to_inputs()?;
    let noise = snapshot.noise.unwrap_or(cfg.noise);
    noise.validate()?;
    let bounds = noise.bounds()?;
    let mut selection = snapshot.selection.clone().unwrap_or_else(|| cfg.selection.clone());
    overrides.apply(&mut selection);
    selection.validate()?;
    let analysis = ReachPipeline::new(cfg.k_window)?.analyze(&inputs, &bounds)?;
    let result = select(&analysis, &selection)?;
    Ok(SelectOutput {
        record: result.record(snapshot.epoch),
        gps_ids: analysis.gps.iter().map(|a| a.id.clone()).collect(),
        vision_ids: analysis.vision.iter().map(|a| a.id.clone()).collect(),
    })
}

fn cmd_select(args: &SelectArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let text = fs::read_to_string(&args.snapshot)
        .map_err(|e| Error::config("snapshot", format!("{}: {e}", args.snapshot.display())))?;
    let snapshot = Snapshot::from_json(&text)?;
    let out = select_snapshot(&snapshot, &cfg, &args.overrides)?;
    writeln!(stdout, "{}", serde_json::to_string_pretty(&out)?)?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let scenario = generate_scenario(&cfg)?;
    let runs = if args.baselines.contains(&Baseline::Random) {
        args.random_runs
    } else {
        0
    };
    let (rows, _) = compare(&scenario, runs)?;
    let wanted = |name: &str| match name {
        "ila" => true,
        "gps_only" => args.baselines.contains(&Baseline::GpsOnly),
        "all" => args.baselines.contains(&Baseline::All),
        "random" => args.baselines.contains(&Baseline::Random),
        _ => false,
    };
    let mut csv = String::from("strategy,max_err_2d_m,max_err_3d_m,availability_fraction\n");
    for r in rows.iter().filter(|r| wanted(&r.strategy)) {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.strategy,
            fmt_f64(r.max_err_2d_m),
            fmt_f64(r.max_err_3d_m),
            fmt_f64(r.availability_fraction)
        ));
    }
    match &args.out {
        Some(path) => fs::write(path, csv)?,
        None => stdout.write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn read_set(path: &Path) -> Result<PZonotope> {
    let text = fs::read_to_string(path).map_err(|e| Error::config("set", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
}

fn cmd_pzono(args: &PzonoArgs, stdout: &mut dyn Write) -> Result<()> {
    let a = read_set(&args.a)?;
    let b = || {
        args.b
            .as_deref()
            .ok_or_else(|| Error::config("b", "this operation needs a second set"))
            .and_then(read_set)
    };
    let value = match args.op {
        SetOp::Sum => serde_json::to_value(minkowski_sum(&a, &b()?)?)?,
        SetOp::Union => serde_json::to_value(enclose_union(&[a, b()?])?)?,
        SetOp::Cut => serde_json::to_value(confidence_cut(&a, args.gamma)?)?,
        SetOp::Size => {
            let w = WeightVector::uniform(a.dim());
            serde_json::json!({ "size": zonotope_size(&confidence_cut(&a, args.gamma)?, &w)? })
        }
    };
    writeln!(stdout, "{}", serde_json::to_string_pretty(&value)?)?;
    Ok(())
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Json(_) => EXIT_CONFIG,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_RUNTIME,
    }
}

/// Executes a parsed command, writing results to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Select(a) => cmd_select(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Pzono(a) => cmd_pzono(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
