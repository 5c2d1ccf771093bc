//! Stochastic reachability of the state error for each landmark.
//!
//! Every epoch the measurements are linearized about the a-priori state. Each
//! landmark yields a p-Zonotope of expected state error, and its innovation is
//! checked against the expected-innovation set to obtain a fault status. Fault
//! statuses are averaged over a sliding window and used to inflate members of
//! the union whose size is the selection cost.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector, RowVector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::models::{
    gps_jacobian, gps_predict, vision_jacobians, vision_predict, CameraIntrinsics, GpsSatellite, Keyframe,
    NavState, StateRow, StateVector, VisionLandmark, STATE_DIM,
};
use crate::pzono::{
    confidence_cut, enclose_union, fault_status_point, linear_map, minkowski_sum, scale, translate, zonotope_size,
    PZonotope, WeightVector,
};
use crate::sim::GroundImage;

/// Upper clamp on joint fault statuses, bounding the inflation factor at 100.
pub const ALPHA_CAP: f64 = 0.99;

/// Union members with a weight at or below this are left out.
pub const Q_FLOOR: f64 = 1e-3;

/// Gradients with a smaller norm are treated as zero.
const MIN_GRADIENT: f64 = 1e-12;

/// Declared non-faulty error sets. GPS and vision sets are 1D, motion is 7D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBounds {
    pub gps: PZonotope,
    pub vision: PZonotope,
    pub motion: PZonotope,
}

impl NoiseBounds {
    pub fn new(gps: PZonotope, vision: PZonotope, motion: PZonotope) -> Result<Self> {
        ensure_dim(1, gps.dim())?;
        ensure_dim(1, vision.dim())?;
        ensure_dim(STATE_DIM, motion.dim())?;
        Ok(Self { gps, vision, motion })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsObservation {
    pub satellite: GpsSatellite,
    pub pseudorange: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionObservation {
    pub landmark: VisionLandmark,
    pub intensity: f64,
}

/// Everything needed to evaluate the vision model this epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraContext {
    pub intrinsics: CameraIntrinsics,
    pub keyframes: Vec<Keyframe>,
    pub image: GroundImage,
}

/// Measurements and priors for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochInputs {
    pub a_priori: NavState,
    pub motion_mean: NavState,
    pub gps: Vec<GpsObservation>,
    #[serde(default)]
    pub vision: Vec<VisionObservation>,
    #[serde(default)]
    pub camera: Option<CameraContext>,
}

impl EpochInputs {
    pub fn validate(&self) -> Result<()> {
        if self.gps.is_empty() && self.vision.is_empty() {
            return Err(Error::invalid("epoch has no measurements"));
        }
        if !self.vision.is_empty() {
            let cam = self
                .camera
                .as_ref()
                .ok_or_else(|| Error::invalid("vision measurements require a camera context"))?;
            for obs in &self.vision {
                if obs.landmark.keyframe >= cam.keyframes.len() {
                    return Err(Error::invalid(format!(
                        "landmark `{}` refers to missing keyframe {}",
                        obs.landmark.id, obs.landmark.keyframe
                    )));
                }
            }
        }
        for g in &self.gps {
            if !g.pseudorange.is_finite() {
                return Err(Error::invalid(format!("pseudorange of `{}` is not finite", g.satellite.id)));
            }
        }
        Ok(())
    }

    fn camera(&self) -> Result<&CameraContext> {
        self.camera
            .as_ref()
            .ok_or_else(|| Error::invalid("vision measurements require a camera context"))
    }

    /// `Δz_mm = z_mm ⊟ x_apriori`.
    pub fn motion_delta(&self) -> StateVector {
        self.motion_mean.difference(&self.a_priori)
    }
}

/// First-order model of one measurement about the a-priori state.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearized {
    /// Measurement minus prediction at the a-priori state.
    pub residual: f64,
    pub jac_state: StateRow,
    /// Derivative with respect to the landmark position (vision only).
    pub jac_landmark: Option<RowVector3<f64>>,
}

pub fn linearize_gps(inputs: &EpochInputs, i: usize) -> Result<Linearized> {
    let obs = inputs
        .gps
        .get(i)
        .ok_or_else(|| Error::invalid(format!("no satellite at index {i}")))?;
    let predicted = gps_predict(&inputs.a_priori, &obs.satellite)?;
    Ok(Linearized {
        residual: obs.pseudorange - predicted,
        jac_state: gps_jacobian(&inputs.a_priori, &obs.satellite)?,
        jac_landmark: None,
    })
}

pub fn linearize_vision(inputs: &EpochInputs, j: usize) -> Result<Linearized> {
    let obs = inputs
        .vision
        .get(j)
        .ok_or_else(|| Error::invalid(format!("no vision landmark at index {j}")))?;
    let cam = inputs.camera()?;
    let kf = cam
        .keyframes
        .get(obs.landmark.keyframe)
        .ok_or_else(|| Error::invalid(format!("missing keyframe {}", obs.landmark.keyframe)))?;
    let p = &obs.landmark.position;
    let predicted = vision_predict(&inputs.a_priori, p, kf, &cam.intrinsics, &cam.image)?;
    let (b_x, b_p) = vision_jacobians(&inputs.a_priori, p, &cam.intrinsics, &cam.image)?;
    Ok(Linearized {
        residual: obs.intensity - predicted,
        jac_state: b_x,
        jac_landmark: Some(b_p),
    })
}

fn row_matrix(row: &StateRow) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, STATE_DIM, row.as_slice())
}

/// Moore–Penrose pseudoinverse `Hᵀ / (H Hᵀ)` of a nonzero row.
pub fn row_pseudoinverse(row: &StateRow) -> Option<DMatrix<f64>> {
    let n2 = row.norm_squared();
    if n2.sqrt() < MIN_GRADIENT {
        return None;
    }
    Some(DMatrix::from_column_slice(STATE_DIM, 1, row.as_slice()) / n2)
}

/// Landmark position uncertainty expressed as a deviation about its estimate.
fn landmark_deviation(lm: &VisionLandmark) -> PZonotope {
    let s = &lm.position_set;
    PZonotope::from_parts(DVector::zeros(3), s.generators().clone(), s.covariance().clone())
}

fn uninformative(inputs: &EpochInputs, j: usize) -> Error {
    Error::Uninformative(inputs.vision[j].landmark.id.clone())
}

/// Motion-model set `Δz_mm + 𝓛_ν`.
pub fn expected_state_motion(inputs: &EpochInputs, bounds: &NoiseBounds) -> Result<PZonotope> {
    let d = inputs.motion_delta();
    translate(&DVector::from_column_slice(d.as_slice()), &bounds.motion)
}

/// Expected state error from satellite `i`: `H⁺ (Δz + 𝓛_η)`.
pub fn expected_state_gps(inputs: &EpochInputs, bounds: &NoiseBounds, i: usize) -> Result<PZonotope> {
    let lin = linearize_gps(inputs, i)?;
    expected_state_gps_from(&lin, bounds, &inputs.gps[i].satellite.id)
}

fn expected_state_gps_from(lin: &Linearized, bounds: &NoiseBounds, id: &str) -> Result<PZonotope> {
    let pinv = row_pseudoinverse(&lin.jac_state)
        .ok_or_else(|| Error::DegenerateGeometry(format!("zero measurement gradient for satellite `{id}`")))?;
    let shifted = translate(&DVector::from_element(1, lin.residual), &bounds.gps)?;
    linear_map(&pinv, &shifted)
}

/// Expected state error from vision landmark `j`:
/// `B_x⁺ (B_p 𝓛_p ⊕ (Δz + 𝓛_ξ))`.
pub fn expected_state_vision(inputs: &EpochInputs, bounds: &NoiseBounds, j: usize) -> Result<PZonotope> {
    let lin = linearize_vision(inputs, j)?;
    expected_state_vision_from(&lin, bounds, &inputs.vision[j].landmark)
        .map_err(|e| if matches!(e, Error::Uninformative(_)) { uninformative(inputs, j) } else { e })
}

fn expected_state_vision_from(lin: &Linearized, bounds: &NoiseBounds, lm: &VisionLandmark) -> Result<PZonotope> {
    let pinv = row_pseudoinverse(&lin.jac_state).ok_or_else(|| Error::Uninformative(lm.id.clone()))?;
    let b_p = lin.jac_landmark.expect("vision linearization carries a landmark Jacobian");
    let b_p = DMatrix::from_row_slice(1, 3, b_p.as_slice());
    let from_position = linear_map(&b_p, &landmark_deviation(lm))?;
    let shifted = translate(&DVector::from_element(1, lin.residual), &bounds.vision)?;
    linear_map(&pinv, &minkowski_sum(&from_position, &shifted)?)
}

/// Innovation of satellite `i` and its expected set `H 𝓛_ν ⊕ 𝓛_η`.
///
/// The innovation is `Δz - H Δz_mm`, so the set is expressed about the motion
/// prediction rather than about `H Δz_mm`.
pub fn innovation_pzono_gps(inputs: &EpochInputs, bounds: &NoiseBounds, i: usize) -> Result<(f64, PZonotope)> {
    let lin = linearize_gps(inputs, i)?;
    innovation_from(&lin, inputs, bounds, &bounds.gps, None)
}

/// Innovation of vision landmark `j` and its expected set
/// `B_x 𝓛_ν ⊕ B_p 𝓛_p ⊕ 𝓛_ξ`.
pub fn innovation_pzono_vision(inputs: &EpochInputs, bounds: &NoiseBounds, j: usize) -> Result<(f64, PZonotope)> {
    let lin = linearize_vision(inputs, j)?;
    if lin.jac_state.norm() < MIN_GRADIENT {
        return Err(uninformative(inputs, j));
    }
    innovation_from(&lin, inputs, bounds, &bounds.vision, Some(&inputs.vision[j].landmark))
}

fn innovation_from(
    lin: &Linearized,
    inputs: &EpochInputs,
    bounds: &NoiseBounds,
    noise: &PZonotope,
    landmark: Option<&VisionLandmark>,
) -> Result<(f64, PZonotope)> {
    let h = row_matrix(&lin.jac_state);
    let dz_mm = inputs.motion_delta();
    let eps = lin.residual - (lin.jac_state * dz_mm)[0];
    let mut set = minkowski_sum(&linear_map(&h, &bounds.motion)?, noise)?;
    if let (Some(lm), Some(b_p)) = (landmark, lin.jac_landmark) {
        let b_p = DMatrix::from_row_slice(1, 3, b_p.as_slice());
        set = minkowski_sum(&set, &linear_map(&b_p, &landmark_deviation(lm))?)?;
    }
    Ok((eps, set))
}

/// Windowed mean of the most recent `k` statuses, clamped to [`ALPHA_CAP`].
pub fn joint_fault_status(history: &[f64], k: usize) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::invalid("fault-status history is empty"));
    }
    if k == 0 {
        return Err(Error::invalid("fault-status window must be at least 1"));
    }
    let recent = &history[history.len().saturating_sub(k)..];
    let mean = recent.iter().sum::<f64>() / recent.len() as f64;
    Ok(mean.clamp(0.0, ALPHA_CAP))
}

/// Inflation factor `q / (1 - α̃)`.
pub fn member_scale(q: f64, alpha: f64) -> f64 {
    q / (1.0 - alpha.clamp(0.0, ALPHA_CAP))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandmarkKind {
    Gps,
    Vision,
}

/// Reachability results for one landmark in one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkAnalysis {
    pub id: String,
    pub kind: LandmarkKind,
    /// Position in the epoch's measurement list of its kind.
    pub index: usize,
    pub linear: LinearSummary,
    pub expected_state: PZonotope,
    pub innovation: f64,
    pub innovation_set: PZonotope,
    pub epoch_status: f64,
    pub joint_status: f64,
}

/// Serializable copy of a measurement linearization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSummary {
    pub residual: f64,
    pub jac_state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochAnalysis {
    pub motion_set: PZonotope,
    pub gps: Vec<LandmarkAnalysis>,
    pub vision: Vec<LandmarkAnalysis>,
    /// Vision landmarks dropped for carrying no information or for falling
    /// outside the image at the a-priori state.
    pub skipped: Vec<String>,
}

impl EpochAnalysis {
    pub fn n_gps(&self) -> usize {
        self.gps.len()
    }

    pub fn n_vision(&self) -> usize {
        self.vision.len()
    }
}

/// Per-landmark work that does not touch the fault history.
fn analyze_one(
    inputs: &EpochInputs,
    bounds: &NoiseBounds,
    kind: LandmarkKind,
    index: usize,
) -> Result<LandmarkAnalysis> {
    let (id, lin, expected, (eps, set)) = match kind {
        LandmarkKind::Gps => {
            let lin = linearize_gps(inputs, index)?;
            let id = inputs.gps[index].satellite.id.clone();
            let expected = expected_state_gps_from(&lin, bounds, &id)?;
            let innov = innovation_from(&lin, inputs, bounds, &bounds.gps, None)?;
            (id, lin, expected, innov)
        }
        LandmarkKind::Vision => {
            let lin = linearize_vision(inputs, index)?;
            let lm = &inputs.vision[index].landmark;
            let expected = expected_state_vision_from(&lin, bounds, lm)?;
            let innov = innovation_from(&lin, inputs, bounds, &bounds.vision, Some(lm))?;
            (lm.id.clone(), lin, expected, innov)
        }
    };
    let epoch_status = fault_status_point(&set, &DVector::from_element(1, eps))?;
    Ok(LandmarkAnalysis {
        id,
        kind,
        index,
        linear: LinearSummary {
            residual: lin.residual,
            jac_state: lin.jac_state.iter().copied().collect(),
        },
        expected_state: expected,
        innovation: eps,
        innovation_set: set,
        epoch_status,
        joint_status: epoch_status,
    })
}

/// Owns the per-landmark fault-status histories across epochs.
#[derive(Debug, Clone)]
pub struct ReachPipeline {
    k_window: usize,
    histories: HashMap<(LandmarkKind, String), VecDeque<f64>>,
}

impl ReachPipeline {
    pub fn new(k_window: usize) -> Result<Self> {
        if k_window == 0 {
            return Err(Error::invalid("fault-status window must be at least 1"));
        }
        Ok(Self {
            k_window,
            histories: HashMap::new(),
        })
    }

    pub fn k_window(&self) -> usize {
        self.k_window
    }

    pub fn history(&self, kind: LandmarkKind, id: &str) -> Option<&VecDeque<f64>> {
        self.histories.get(&(kind, id.to_string()))
    }

    pub fn reset(&mut self) {
        self.histories.clear();
    }

    /// Runs every reachability step for one epoch and records the new
    /// per-epoch fault statuses.
    pub fn analyze(&mut self, inputs: &EpochInputs, bounds: &NoiseBounds) -> Result<EpochAnalysis> {
        inputs.validate()?;
        let motion_set = expected_state_motion(inputs, bounds)?;
        let mut gps = (0..inputs.gps.len())
            .map(|i| analyze_one(inputs, bounds, LandmarkKind::Gps, i))
            .collect::<Result<Vec<_>>>()?;
        let vision_results: Vec<Result<LandmarkAnalysis>> = (0..inputs.vision.len())
            .into_par_iter()
            .map(|j| analyze_one(inputs, bounds, LandmarkKind::Vision, j))
            .collect();
        let mut vision = Vec::with_capacity(vision_results.len());
        let mut skipped = Vec::new();
        for (j, r) in vision_results.into_iter().enumerate() {
            match r {
                Ok(a) => vision.push(a),
                Err(Error::Uninformative(id)) => skipped.push(id),
                Err(Error::DegenerateGeometry(_) | Error::BehindCamera { .. }) => {
                    skipped.push(inputs.vision[j].landmark.id.clone())
                }
                Err(e) => return Err(e),
            }
        }
        for a in gps.iter_mut().chain(vision.iter_mut()) {
            let hist = self.histories.entry((a.kind, a.id.clone())).or_default();
            hist.push_back(a.epoch_status);
            while hist.len() > self.k_window {
                hist.pop_front();
            }
            a.joint_status = joint_fault_status(hist.make_contiguous(), self.k_window)?;
        }
        Ok(EpochAnalysis {
            motion_set,
            gps,
            vision,
            skipped,
        })
    }
}

/// Union of the motion set and every member with `q > Q_FLOOR`, each scaled
/// by `q / (1 - α̃)`.
pub fn scaled_union(analysis: &EpochAnalysis, q_gps: &[f64], q_vis: &[f64]) -> Result<PZonotope> {
    ensure_dim(analysis.gps.len(), q_gps.len())?;
    ensure_dim(analysis.vision.len(), q_vis.len())?;
    let mut members = vec![analysis.motion_set.clone()];
    for (a, &q) in analysis.gps.iter().zip(q_gps).chain(analysis.vision.iter().zip(q_vis)) {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!("attention weight {q} outside [0, 1]")));
        }
        if q > Q_FLOOR {
            members.push(scale(member_scale(q, a.joint_status), &a.expected_state));
        }
    }
    enclose_union(&members)
}

/// Size of the γ-confidence cut of `union_set` under axis weights `w`.
pub fn pzono_cost(union_set: &PZonotope, gamma: f64, w: &WeightVector) -> Result<f64> {
    zonotope_size(&confidence_cut(union_set, gamma)?, w)
}
