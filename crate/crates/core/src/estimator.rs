//! Baseline GPS-vision estimator: weighted Gauss-Newton over the selected
//! measurements with a Gaussian prior, and per-landmark position refinement.

use nalgebra::{DMatrix, DVector, Matrix3, RowVector3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    gps_jacobian, gps_predict, vision_jacobians, vision_predict, NavState, StateMatrix, StateRow, StateVector,
};
use crate::pzono::PZonotope;
use crate::reach::{CameraContext, GpsObservation, VisionObservation};

/// Gradients with a smaller norm are treated as zero.
const MIN_GRADIENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Pseudorange noise variance (m²).
    pub gps_variance: f64,
    /// Intensity noise variance.
    pub vision_variance: f64,
    /// Covariance growth per epoch for landmarks that were not observed.
    pub landmark_inflation: f64,
    pub max_iterations: usize,
    pub step_tolerance: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            gps_variance: 5.0,
            vision_variance: 1.0,
            landmark_inflation: 1.01,
            max_iterations: 20,
            step_tolerance: 1e-8,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gps_variance > 0.0) || !(self.vision_variance > 0.0) {
            return Err(Error::config("estimator", "noise variances must be positive"));
        }
        if !(self.landmark_inflation >= 1.0) {
            return Err(Error::config("estimator.landmark_inflation", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("estimator.max_iterations", "must be positive"));
        }
        Ok(())
    }
}

/// Position estimate of one vision landmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkEstimate {
    pub id: String,
    pub position: Vector3<f64>,
    pub covariance: Matrix3<f64>,
}

impl LandmarkEstimate {
    /// The estimate as a p-Zonotope with no generators.
    pub fn position_set(&self) -> Result<PZonotope> {
        PZonotope::gaussian(
            DVector::from_column_slice(self.position.as_slice()),
            DMatrix::from_column_slice(3, 3, self.covariance.as_slice()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub state: NavState,
    pub state_covariance: StateMatrix,
    pub landmarks: Vec<LandmarkEstimate>,
}

impl EstimatorState {
    pub fn new(state: NavState, state_covariance: StateMatrix) -> Self {
        Self {
            state,
            state_covariance,
            landmarks: Vec::new(),
        }
    }

    pub fn landmark(&self, id: &str) -> Option<&LandmarkEstimate> {
        self.landmarks.iter().find(|l| l.id == id)
    }
}

/// One scalar residual with its Jacobian and variance.
struct Row {
    residual: f64,
    jac: StateRow,
    variance: f64,
}

struct Problem<'a> {
    gps: &'a [GpsObservation],
    vision: &'a [VisionObservation],
    camera: Option<&'a CameraContext>,
    prior: &'a NavState,
    prior_info: StateMatrix,
    cfg: &'a EstimatorConfig,
}

impl Problem<'_> {
    fn rows(&self, x: &NavState) -> Result<Vec<Row>> {
        let mut rows = Vec::with_capacity(self.gps.len() + self.vision.len());
        for g in self.gps {
            rows.push(Row {
                residual: g.pseudorange - gps_predict(x, &g.satellite)?,
                jac: gps_jacobian(x, &g.satellite)?,
                variance: self.cfg.gps_variance,
            });
        }
        if !self.vision.is_empty() {
            let cam = self
                .camera
                .ok_or_else(|| Error::invalid("vision measurements require a camera context"))?;
            for v in self.vision {
                let lm = &v.landmark;
                let kf = cam
                    .keyframes
                    .get(lm.keyframe)
                    .ok_or_else(|| Error::invalid(format!("missing keyframe {}", lm.keyframe)))?;
                let predicted = vision_predict(x, &lm.position, kf, &cam.intrinsics, &cam.image)?;
                let (b_x, b_p) = vision_jacobians(x, &lm.position, &cam.intrinsics, &cam.image)?;
                let sp = lm.position_set.covariance();
                let sp = Matrix3::from_fn(|i, j| sp.get((i, j)).copied().unwrap_or(0.0));
                rows.push(Row {
                    residual: v.intensity - predicted,
                    jac: b_x,
                    variance: self.cfg.vision_variance + (b_p * sp * b_p.transpose())[0],
                });
            }
        }
        Ok(rows)
    }

    fn cost(&self, x: &NavState, rows: &[Row]) -> f64 {
        let e = x.difference(self.prior);
        let meas: f64 = rows.iter().map(|r| r.residual * r.residual / r.variance).sum();
        meas + (e.transpose() * self.prior_info * e)[0]
    }

    /// Normal equations `(JᵀWJ + P⁻¹) δ = JᵀW r - P⁻¹ e`.
    fn normal_equations(&self, x: &NavState, rows: &[Row]) -> (StateMatrix, StateVector) {
        let e = x.difference(self.prior);
        let mut info = self.prior_info;
        let mut rhs = -(self.prior_info * e);
        for r in rows {
            let jt = r.jac.transpose();
            info += jt * r.jac / r.variance;
            rhs += jt * (r.residual / r.variance);
        }
        (info, rhs)
    }
}

fn invert_spd(m: &StateMatrix) -> Result<StateMatrix> {
    let sym = (m + m.transpose()) * 0.5;
    sym.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::EstimationFailure("information matrix is not positive definite".into()))
}

/// Weighted Gauss-Newton estimate of the state from the selected measurements.
///
/// The prior state and covariance regularize directions the measurements do
/// not observe. Landmark positions are held fixed; their covariance inflates
/// the vision noise.
pub fn estimate_state(
    gps: &[GpsObservation],
    vision: &[VisionObservation],
    camera: Option<&CameraContext>,
    prior: &EstimatorState,
    cfg: &EstimatorConfig,
) -> Result<EstimatorState> {
    cfg.validate()?;
    let mut out = prior.clone();
    if gps.is_empty() && vision.is_empty() {
        return Ok(out);
    }
    let problem = Problem {
        gps,
        vision,
        camera,
        prior: &prior.state,
        prior_info: invert_spd(&prior.state_covariance)?,
        cfg,
    };
    let mut x = prior.state;
    let mut rows = problem.rows(&x)?;
    // weights stay fixed at the prior so the cost is a plain least squares
    let variances: Vec<f64> = rows.iter().map(|r| r.variance).collect();
    let freeze = |mut r: Vec<Row>| {
        for (row, v) in r.iter_mut().zip(&variances) {
            row.variance = *v;
        }
        r
    };
    let mut cost = problem.cost(&x, &rows);
    let mut increases = 0;
    let mut step_scale = 1.0;
    for _ in 0..cfg.max_iterations {
        let (info, rhs) = problem.normal_equations(&x, &rows);
        let delta = invert_spd(&info)? * rhs * step_scale;
        if delta.amax() < cfg.step_tolerance {
            break;
        }
        let candidate = x.perturbed(&delta);
        let trial = problem
            .rows(&candidate)
            .map(freeze)
            .map(|r| {
                let c = problem.cost(&candidate, &r);
                (r, c)
            })
            .ok()
            .filter(|(_, c)| c.is_finite());
        match trial {
            // a change at rounding level means the minimum has been reached
            Some((_, c)) if (c - cost).abs() <= 1e-9 * cost.max(1.0) => break,
            Some((r, c)) if c <= cost => {
                x = candidate;
                rows = r;
                cost = c;
                increases = 0;
                step_scale = 1.0;
                if delta.amax() < cfg.step_tolerance {
                    break;
                }
            }
            _ => {
                increases += 1;
                if increases >= 3 {
                    return Err(Error::EstimationFailure(format!(
                        "cost increased on {increases} consecutive iterations"
                    )));
                }
                step_scale *= 0.5;
            }
        }
    }
    let (info, _) = problem.normal_equations(&x, &rows);
    out.state = x;
    out.state_covariance = invert_spd(&info)?;
    Ok(out)
}

/// Refines the observed landmarks by one Gauss-Newton step each and inflates
/// the covariance of the others.
///
/// Each observation's landmark entry supplies the prior position used by the
/// measurement model; estimates without an entry in `prev` are added.
pub fn update_landmarks(
    vision: &[VisionObservation],
    camera: Option<&CameraContext>,
    state: &EstimatorState,
    prev: &[LandmarkEstimate],
    cfg: &EstimatorConfig,
) -> Result<Vec<LandmarkEstimate>> {
    cfg.validate()?;
    let mut out: Vec<LandmarkEstimate> = prev
        .iter()
        .map(|l| {
            let mut l = l.clone();
            if !vision.iter().any(|v| v.landmark.id == l.id) {
                l.covariance *= cfg.landmark_inflation;
            }
            l
        })
        .collect();
    if vision.is_empty() {
        return Ok(out);
    }
    let cam = camera.ok_or_else(|| Error::invalid("vision measurements require a camera context"))?;
    for v in vision {
        let lm = &v.landmark;
        let slot = match out.iter().position(|l| l.id == lm.id) {
            Some(i) => i,
            None => {
                let sp = lm.position_set.covariance();
                out.push(LandmarkEstimate {
                    id: lm.id.clone(),
                    position: lm.position,
                    covariance: Matrix3::from_fn(|i, j| sp.get((i, j)).copied().unwrap_or(0.0)),
                });
                out.len() - 1
            }
        };
        let current = &out[slot];
        let kf = cam
            .keyframes
            .get(lm.keyframe)
            .ok_or_else(|| Error::invalid(format!("missing keyframe {}", lm.keyframe)))?;
        let observed = vision_predict(&state.state, &current.position, kf, &cam.intrinsics, &cam.image)
            .and_then(|pred| {
                let (b_x, b_p) = vision_jacobians(&state.state, &current.position, &cam.intrinsics, &cam.image)?;
                Ok((v.intensity - pred, b_x, b_p))
            });
        let Ok((residual, b_x, b_p)) = observed else {
            continue;
        };
        if b_p.norm() < MIN_GRADIENT {
            continue;
        }
        let variance = cfg.vision_variance + (b_x * state.state_covariance * b_x.transpose())[0];
        if let Some(updated) = refine(current, residual, &b_p, variance) {
            out[slot] = updated;
        }
    }
    Ok(out)
}

/// Scalar-measurement update of one landmark in covariance form.
fn refine(est: &LandmarkEstimate, residual: f64, b_p: &RowVector3<f64>, variance: f64) -> Option<LandmarkEstimate> {
    let pb = est.covariance * b_p.transpose();
    let s = (b_p * pb)[0] + variance;
    if !(s > 0.0) {
        return None;
    }
    let gain = pb / s;
    let covariance = est.covariance - gain * pb.transpose();
    Some(LandmarkEstimate {
        id: est.id.clone(),
        position: est.position + gain * residual,
        covariance: (covariance + covariance.transpose()) * 0.5,
    })
}

/// State used to start the next epoch: the estimate when the previous epoch
/// was predicted available, the motion mean otherwise.
pub fn feedback_motion(available: bool, estimate: &NavState, motion_mean: &NavState) -> NavState {
    if available {
        *estimate
    } else {
        *motion_mean
    }
}
