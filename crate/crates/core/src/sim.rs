//! Seeded scenario synthesis: textured ground plane, trajectory, satellite
//! geometry, bounded noise processes and fault injection.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::{select, AttentionSet, SelectionConfig, SelectionRecord};
use crate::error::{Error, Result};
use crate::estimator::{estimate_state, feedback_motion, update_landmarks, EstimatorConfig, EstimatorState, LandmarkEstimate};
use crate::models::{
    gps_predict, project, unproject, CameraIntrinsics, GpsSatellite, ImageField, Keyframe, NavState, StateMatrix,
    StateVector, VisionLandmark,
};
use crate::pzono::{from_bounds, WeightVector};
use crate::reach::{
    pzono_cost, scaled_union, CameraContext, EpochAnalysis, EpochInputs, GpsObservation, NoiseBounds, ReachPipeline,
    VisionObservation,
};

/// Shape of the procedural ground texture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextureSpec {
    /// Magnitude of the linear ramp (intensity per meter).
    pub ramp_per_m: f64,
    /// Component amplitude is this factor times the squared wavelength.
    pub amplitude_scale: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        Self {
            ramp_per_m: 2.0,
            amplitude_scale: 0.05,
        }
    }
}

/// One plane-wave component of the ground texture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// Spatial angular frequency (rad/m) along x and y.
    pub wavevector: [f64; 2],
    pub phase: f64,
}

/// Smooth brightness over the ground plane `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityField {
    pub offset: f64,
    /// Linear ramp (intensity per meter) along x and y.
    pub ramp: [f64; 2],
    pub components: Vec<Sinusoid>,
}

impl IntensityField {
    /// Draws a field with the default [`TextureSpec`].
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::random_with(rng, &TextureSpec::default())
    }

    /// Draws 3 to 8 components with wavelengths in `[0.5, 5]` m on top of a
    /// linear ramp. Amplitudes grow with the square of the wavelength.
    pub fn random_with<R: Rng + ?Sized>(rng: &mut R, spec: &TextureSpec) -> Self {
        let n = rng.random_range(3..=8);
        let components = (0..n)
            .map(|_| {
                let wavelength: f64 = rng.random_range(0.5..5.0);
                let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let k = std::f64::consts::TAU / wavelength;
                Sinusoid {
                    amplitude: spec.amplitude_scale * wavelength * wavelength,
                    wavevector: [k * dir.cos(), k * dir.sin()],
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                }
            })
            .collect();
        let ramp_dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Self {
            offset: 128.0,
            ramp: [spec.ramp_per_m * ramp_dir.cos(), spec.ramp_per_m * ramp_dir.sin()],
            components,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            offset: value,
            ramp: [0.0, 0.0],
            components: Vec::new(),
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.offset
            + self.ramp[0] * x
            + self.ramp[1] * y
            + self
                .components
                .iter()
                .map(|c| c.amplitude * (c.wavevector[0] * x + c.wavevector[1] * y + c.phase).sin())
                .sum::<f64>()
    }

    pub fn gradient(&self, x: f64, y: f64) -> Vector2<f64> {
        let mut g = Vector2::new(self.ramp[0], self.ramp[1]);
        for c in &self.components {
            let d = c.amplitude * (c.wavevector[0] * x + c.wavevector[1] * y + c.phase).cos();
            g += Vector2::new(d * c.wavevector[0], d * c.wavevector[1]);
        }
        g
    }

    pub fn hessian(&self, x: f64, y: f64) -> Matrix2<f64> {
        let mut h = Matrix2::zeros();
        for c in &self.components {
            let s = -c.amplitude * (c.wavevector[0] * x + c.wavevector[1] * y + c.phase).sin();
            let k = Vector2::new(c.wavevector[0], c.wavevector[1]);
            h += k * k.transpose() * s;
        }
        h
    }
}

/// The current camera image of a textured ground plane, rendered from the
/// true camera pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundImage {
    pub texture: IntensityField,
    pub camera: NavState,
    pub intrinsics: CameraIntrinsics,
}

impl GroundImage {
    /// World direction of the ray through pixel `u`.
    fn ray(&self, u: &Vector2<f64>) -> Vector3<f64> {
        let k = &self.intrinsics;
        let d_cam = Vector3::new((u[0] - k.cx) / k.fx, (u[1] - k.cy) / k.fy, 1.0);
        self.camera.camera_rotation() * d_cam
    }

    /// Ground point seen through pixel `u`.
    pub fn ground_point(&self, u: &Vector2<f64>) -> Result<Vector3<f64>> {
        let d = self.ray(u);
        let h = self.camera.position[2];
        if !(d[2] < -1e-9) || !(h > 0.0) {
            return Err(Error::DegenerateGeometry(format!(
                "pixel ({:.3}, {:.3}) does not see the ground",
                u[0], u[1]
            )));
        }
        Ok(self.camera.position - d * (h / d[2]))
    }

    /// Derivative of the ground point with respect to the pixel (x and y rows).
    fn ground_point_jacobian(&self, u: &Vector2<f64>) -> Result<Matrix2<f64>> {
        let d = self.ray(u);
        let h = self.camera.position[2];
        if !(d[2] < -1e-9) || !(h > 0.0) {
            return Err(Error::DegenerateGeometry("pixel does not see the ground".into()));
        }
        let k = &self.intrinsics;
        let r = self.camera.camera_rotation();
        // d(ray)/du: columns are R · e_x / fx and R · e_y / fy
        let dd = Matrix2x3::from_rows(&[
            (r.column(0) / k.fx).transpose(),
            (r.column(1) / k.fy).transpose(),
        ])
        .transpose();
        // g = p - d h / d_z  ->  dg = -(h / d_z) (I - d e_zᵀ / d_z) dd
        let mut proj = nalgebra::Matrix3::identity();
        for i in 0..3 {
            proj[(i, 2)] -= d[i] / d[2];
        }
        let full = proj * dd * (-h / d[2]);
        Ok(Matrix2::new(full[(0, 0)], full[(0, 1)], full[(1, 0)], full[(1, 1)]))
    }
}

impl ImageField for GroundImage {
    fn intensity(&self, u: &Vector2<f64>) -> Result<f64> {
        let g = self.ground_point(u)?;
        Ok(self.texture.value(g[0], g[1]))
    }

    fn gradient(&self, u: &Vector2<f64>) -> Result<Vector2<f64>> {
        let g = self.ground_point(u)?;
        let j = self.ground_point_jacobian(u)?;
        Ok(j.transpose() * self.texture.gradient(g[0], g[1]))
    }
}

/// Parametric ground trajectory: constant speed with a sinusoidal yaw sweep
/// and small attitude oscillations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySpec {
    /// ENU start position; the third entry is the camera height above ground.
    pub start_m: [f64; 3],
    /// Initial yaw, counter-clockwise from east.
    pub yaw_deg: f64,
    pub speed_mps: f64,
    pub yaw_amplitude_deg: f64,
    pub yaw_period_s: f64,
    pub attitude_amplitude_deg: f64,
    pub clock_bias_m: f64,
    pub clock_drift_mps: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            start_m: [0.0, 0.0, 1.5],
            yaw_deg: 30.0,
            speed_mps: 1.5,
            yaw_amplitude_deg: 20.0,
            yaw_period_s: 60.0,
            attitude_amplitude_deg: 1.0,
            clock_bias_m: 30.0,
            clock_drift_mps: 0.2,
        }
    }
}

impl TrajectorySpec {
    fn yaw(&self, t: f64) -> f64 {
        let a = self.yaw_amplitude_deg.to_radians();
        self.yaw_deg.to_radians() + a * (std::f64::consts::TAU * t / self.yaw_period_s).sin()
    }

    /// Truth state at time `t`, integrating the velocity from zero.
    pub fn state_at(&self, t: f64) -> NavState {
        let steps = ((t * 20.0).ceil() as usize).max(1);
        let dt = t / steps as f64;
        let mut p = Vector3::from(self.start_m);
        for s in 0..steps {
            let yaw = self.yaw((s as f64 + 0.5) * dt);
            p += Vector3::new(yaw.cos(), yaw.sin(), 0.0) * (self.speed_mps * dt);
        }
        let a = self.attitude_amplitude_deg.to_radians();
        let orientation = Vector3::new(
            a * (std::f64::consts::TAU * t / 7.0).sin(),
            a * (std::f64::consts::TAU * t / 11.0 + 1.0).sin(),
            self.yaw(t),
        );
        NavState::from_vector(&StateVector::from_column_slice(&[
            p[0],
            p[1],
            p[2],
            orientation[0],
            orientation[1],
            orientation[2],
            self.clock_bias_m + self.clock_drift_mps * t,
        ]))
    }
}

/// Coarse satellite distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeClass {
    Near,
    #[default]
    Mid,
    Far,
}

impl RangeClass {
    pub fn range_m(self) -> f64 {
        match self {
            RangeClass::Near => 20.2e6,
            RangeClass::Mid => 22.5e6,
            RangeClass::Far => 25.0e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteSpec {
    pub id: String,
    pub elevation_deg: f64,
    /// Clockwise from north.
    pub azimuth_deg: f64,
    #[serde(default)]
    pub range_class: RangeClass,
    #[serde(default)]
    pub clock_correction_m: f64,
}

impl SatelliteSpec {
    pub fn new(id: &str, elevation_deg: f64, azimuth_deg: f64, range_class: RangeClass) -> Self {
        Self {
            id: id.into(),
            elevation_deg,
            azimuth_deg,
            range_class,
            clock_correction_m: 0.0,
        }
    }
}

/// Eight satellites: one low in the street axis (blocked inside fault
/// windows), three in the multipath band and four clear.
pub fn default_catalog() -> Vec<SatelliteSpec> {
    use RangeClass::*;
    vec![
        SatelliteSpec::new("G01", 15.0, 100.0, Far),
        SatelliteSpec::new("G02", 30.0, 70.0, Mid),
        SatelliteSpec::new("G03", 40.0, 250.0, Mid),
        SatelliteSpec::new("G04", 25.0, 290.0, Far),
        SatelliteSpec::new("G05", 65.0, 20.0, Near),
        SatelliteSpec::new("G06", 50.0, 160.0, Mid),
        SatelliteSpec::new("G07", 35.0, 200.0, Mid),
        SatelliteSpec::new("G08", 80.0, 330.0, Near),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            fx: 400.0,
            fy: 400.0,
            cx: 320.0,
            cy: 240.0,
            width: 640.0,
            height: 480.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VisionSpec {
    /// Landmarks seeded per keyframe.
    pub landmark_count: usize,
    pub keyframe_interval_s: f64,
    /// Horizontal distance band in which keyframe landmarks are placed.
    pub min_range_m: f64,
    pub max_range_m: f64,
    /// Standard deviation of the initial landmark position error.
    pub landmark_sigma_m: f64,
    pub texture: TextureSpec,
}

impl Default for VisionSpec {
    fn default() -> Self {
        Self {
            landmark_count: 50,
            keyframe_interval_s: 2.0,
            min_range_m: 5.0,
            max_range_m: 15.0,
            landmark_sigma_m: 0.05,
            texture: TextureSpec::default(),
        }
    }
}

/// Declared non-faulty bounds and the parameters of the noise actually drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// GPS noise mean stays in `±gps_mean_bound_m`.
    pub gps_mean_bound_m: f64,
    /// GPS noise variance stays in `[0, gps_variance_max_m2]`.
    pub gps_variance_max_m2: f64,
    /// Spread (standard deviation) of the initial GPS noise means, clipped
    /// to the bound.
    pub gps_mean_spread_m: f64,
    /// Step of the GPS mean random walk per epoch.
    pub gps_mean_step_m: f64,
    /// Multiplies the declared GPS covariance.
    pub gps_covariance_factor: f64,
    pub vision_mean_bound: f64,
    pub vision_variance_max: f64,
    pub vision_mean_spread: f64,
    pub vision_mean_step: f64,
    /// Per-epoch odometry noise (standard deviations).
    pub odometry_position_m: f64,
    pub odometry_angle_rad: f64,
    pub odometry_clock_m: f64,
    /// Declared motion-model bounds: half-widths and variances. Position is
    /// split into horizontal and vertical.
    pub motion_position_m: f64,
    pub motion_position_var_m2: f64,
    pub motion_vertical_m: f64,
    pub motion_vertical_var_m2: f64,
    pub motion_angle_rad: f64,
    pub motion_angle_var_rad2: f64,
    pub motion_clock_m: f64,
    pub motion_clock_var_m2: f64,
    /// Error of the initial state (standard deviations).
    pub initial_position_m: f64,
    pub initial_angle_rad: f64,
    pub initial_clock_m: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            gps_mean_bound_m: 5.0,
            gps_variance_max_m2: 5.0,
            gps_mean_spread_m: 1.5,
            gps_mean_step_m: 0.2,
            gps_covariance_factor: 1.0,
            vision_mean_bound: 1.0,
            vision_variance_max: 1.0,
            vision_mean_spread: 0.3,
            vision_mean_step: 0.05,
            odometry_position_m: 0.05,
            odometry_angle_rad: 0.002,
            odometry_clock_m: 0.2,
            motion_position_m: 4.0,
            motion_position_var_m2: 1.0,
            motion_vertical_m: 0.5,
            motion_vertical_var_m2: 0.05,
            motion_angle_rad: 0.05,
            motion_angle_var_rad2: 1e-4,
            motion_clock_m: 6.0,
            motion_clock_var_m2: 4.0,
            initial_position_m: 1.0,
            initial_angle_rad: 0.005,
            initial_clock_m: 2.0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("noise.gps_mean_bound_m", self.gps_mean_bound_m),
            ("noise.gps_variance_max_m2", self.gps_variance_max_m2),
            ("noise.gps_mean_spread_m", self.gps_mean_spread_m),
            ("noise.gps_mean_step_m", self.gps_mean_step_m),
            ("noise.vision_mean_bound", self.vision_mean_bound),
            ("noise.vision_variance_max", self.vision_variance_max),
            ("noise.vision_mean_spread", self.vision_mean_spread),
            ("noise.vision_mean_step", self.vision_mean_step),
            ("noise.odometry_position_m", self.odometry_position_m),
            ("noise.odometry_angle_rad", self.odometry_angle_rad),
            ("noise.odometry_clock_m", self.odometry_clock_m),
            ("noise.motion_position_m", self.motion_position_m),
            ("noise.motion_position_var_m2", self.motion_position_var_m2),
            ("noise.motion_vertical_m", self.motion_vertical_m),
            ("noise.motion_vertical_var_m2", self.motion_vertical_var_m2),
            ("noise.motion_angle_rad", self.motion_angle_rad),
            ("noise.motion_angle_var_rad2", self.motion_angle_var_rad2),
            ("noise.motion_clock_m", self.motion_clock_m),
            ("noise.motion_clock_var_m2", self.motion_clock_var_m2),
            ("noise.initial_position_m", self.initial_position_m),
            ("noise.initial_angle_rad", self.initial_angle_rad),
            ("noise.initial_clock_m", self.initial_clock_m),
        ];
        for (key, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be a finite non-negative number"));
            }
        }
        if !(self.gps_covariance_factor >= 1.0) {
            return Err(Error::config("noise.gps_covariance_factor", "must be at least 1"));
        }
        Ok(())
    }

    /// Declared bounds used by the reachability analysis.
    pub fn bounds(&self) -> Result<NoiseBounds> {
        let gps = from_bounds(
            &[(-self.gps_mean_bound_m, self.gps_mean_bound_m)],
            &[self.gps_variance_max_m2],
            self.gps_covariance_factor,
        )?;
        let vision = from_bounds(
            &[(-self.vision_mean_bound, self.vision_mean_bound)],
            &[self.vision_variance_max],
            1.0,
        )?;
        let (hw, var) = self.motion_halfwidths_and_variances();
        let intervals: Vec<(f64, f64)> = hw.iter().map(|h| (-h, *h)).collect();
        let motion = from_bounds(&intervals, &var, 1.0)?;
        NoiseBounds::new(gps, vision, motion)
    }

    fn motion_halfwidths_and_variances(&self) -> ([f64; 7], [f64; 7]) {
        let (p, a, c) = (self.motion_position_m, self.motion_angle_rad, self.motion_clock_m);
        let (pv, av, cv) = (self.motion_position_var_m2, self.motion_angle_var_rad2, self.motion_clock_var_m2);
        let (v, vv) = (self.motion_vertical_m, self.motion_vertical_var_m2);
        ([p, p, v, a, a, a, c], [pv, pv, vv, av, av, av, cv])
    }

    /// Prior covariance of the motion mean: half-width² plus variance per axis,
    /// floored so the prior stays invertible.
    pub fn motion_prior_covariance(&self) -> StateMatrix {
        let (hw, var) = self.motion_halfwidths_and_variances();
        StateMatrix::from_diagonal(&StateVector::from_fn(|i, _| (hw[i] * hw[i] + var[i]).max(1e-9)))
    }
}

/// Satellite condition inside a fault window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SatelliteCondition {
    Clear,
    Multipath,
    Blocked,
}

/// Geometry rules that decide which satellites are reflected or blocked
/// inside a fault window, plus the vision fault model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultRules {
    pub enabled: bool,
    pub multipath_elevation_deg: [f64; 2],
    /// Satellites below this elevation inside an azimuth band are blocked.
    pub blockage_elevation_deg: f64,
    pub azimuth_bands_deg: Vec<[f64; 2]>,
    pub multipath_bias_m: [f64; 2],
    /// Fraction of each keyframe's landmarks with an association fault.
    pub vision_fraction: f64,
    /// Vision fault magnitude in units of the intensity noise standard deviation.
    pub vision_bias_sigma: f64,
}

impl Default for FaultRules {
    fn default() -> Self {
        Self {
            enabled: true,
            multipath_elevation_deg: [20.0, 45.0],
            blockage_elevation_deg: 20.0,
            azimuth_bands_deg: vec![[45.0, 135.0], [225.0, 315.0]],
            multipath_bias_m: [20.0, 65.0],
            vision_fraction: 0.2,
            vision_bias_sigma: 10.0,
        }
    }
}

impl FaultRules {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.multipath_elevation_deg;
        if !(0.0..=90.0).contains(&lo) || !(lo..=90.0).contains(&hi) {
            return Err(Error::config("faults.multipath_elevation_deg", "must be an ordered band within [0, 90]"));
        }
        if !(0.0..=90.0).contains(&self.blockage_elevation_deg) {
            return Err(Error::config("faults.blockage_elevation_deg", "must lie in [0, 90]"));
        }
        for b in &self.azimuth_bands_deg {
            if !(0.0..=360.0).contains(&b[0]) || !(b[0]..=360.0).contains(&b[1]) {
                return Err(Error::config("faults.azimuth_bands_deg", "bands must be ordered within [0, 360]"));
            }
        }
        let [blo, bhi] = self.multipath_bias_m;
        if !(blo > 0.0 && bhi >= blo && bhi.is_finite()) {
            return Err(Error::config("faults.multipath_bias_m", "must be a positive ordered range"));
        }
        if !(0.0..=1.0).contains(&self.vision_fraction) {
            return Err(Error::config("faults.vision_fraction", "must lie in [0, 1]"));
        }
        if !(self.vision_bias_sigma >= 0.0 && self.vision_bias_sigma.is_finite()) {
            return Err(Error::config("faults.vision_bias_sigma", "must be non-negative"));
        }
        Ok(())
    }

    pub fn in_azimuth_band(&self, azimuth_deg: f64) -> bool {
        let az = azimuth_deg.rem_euclid(360.0);
        self.azimuth_bands_deg.iter().any(|b| az >= b[0] && az <= b[1])
    }

    /// Condition of a satellite inside a fault window.
    pub fn condition(&self, elevation_deg: f64, azimuth_deg: f64) -> SatelliteCondition {
        if !self.enabled || !self.in_azimuth_band(azimuth_deg) {
            return SatelliteCondition::Clear;
        }
        let [lo, hi] = self.multipath_elevation_deg;
        if elevation_deg < self.blockage_elevation_deg {
            SatelliteCondition::Blocked
        } else if elevation_deg >= lo && elevation_deg <= hi {
            SatelliteCondition::Multipath
        } else {
            SatelliteCondition::Clear
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl FaultWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t <= self.end_s
    }
}

/// Everything needed to synthesize and run one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
    pub trajectory: TrajectorySpec,
    pub satellites: Vec<SatelliteSpec>,
    pub camera: CameraSpec,
    pub vision: VisionSpec,
    pub noise: NoiseSpec,
    pub faults: FaultRules,
    pub fault_windows: Vec<FaultWindow>,
    pub selection: SelectionConfig,
    pub estimator: EstimatorConfig,
    /// Number of epochs in the joint fault status history.
    pub k_window: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            rate_hz: 1.0,
            seed: 1,
            trajectory: TrajectorySpec::default(),
            satellites: default_catalog(),
            camera: CameraSpec::default(),
            vision: VisionSpec::default(),
            noise: NoiseSpec::default(),
            faults: FaultRules::default(),
            fault_windows: vec![FaultWindow {
                start_s: 9.0,
                end_s: 24.0,
            }],
            selection: SelectionConfig::default(),
            estimator: EstimatorConfig::default(),
            k_window: 8,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(json_error_key(text, &e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::config("rate_hz", "must be positive"));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::config("duration_s", "must be positive"));
        }
        if self.epoch_count() == 0 {
            return Err(Error::config("duration_s", "shorter than one epoch"));
        }
        for w in &self.fault_windows {
            if !(w.start_s >= 0.0 && w.end_s >= w.start_s && w.end_s <= self.duration_s) {
                return Err(Error::config("fault_windows", "windows must be ordered and inside the duration"));
            }
        }
        if self.satellites.is_empty() {
            return Err(Error::config("satellites", "catalog is empty"));
        }
        for (i, s) in self.satellites.iter().enumerate() {
            if !(s.elevation_deg > 0.0 && s.elevation_deg <= 90.0) {
                return Err(Error::config(format!("satellites[{i}].elevation_deg"), "must lie in (0, 90]"));
            }
            if self.satellites[..i].iter().any(|o| o.id == s.id) {
                return Err(Error::config(format!("satellites[{i}].id"), format!("duplicate id `{}`", s.id)));
            }
        }
        let t = &self.trajectory;
        if !(t.start_m[2] > 0.0) {
            return Err(Error::config("trajectory.start_m", "camera height must be positive"));
        }
        if !(t.yaw_period_s > 0.0) {
            return Err(Error::config("trajectory.yaw_period_s", "must be positive"));
        }
        let v = &self.vision;
        if !(v.keyframe_interval_s > 0.0) {
            return Err(Error::config("vision.keyframe_interval_s", "must be positive"));
        }
        if !(v.min_range_m > 0.0 && v.max_range_m > v.min_range_m) {
            return Err(Error::config("vision.min_range_m", "range band must be positive and ordered"));
        }
        if !(v.landmark_sigma_m >= 0.0) {
            return Err(Error::config("vision.landmark_sigma_m", "must be non-negative"));
        }
        CameraIntrinsics::new(self.camera.fx, self.camera.fy, self.camera.cx, self.camera.cy)
            .map_err(|e| Error::config("camera", e.to_string()))?;
        if self.k_window == 0 {
            return Err(Error::config("k_window", "must be at least 1"));
        }
        self.noise.validate()?;
        self.faults.validate()?;
        self.selection.validate().map_err(|e| prefix_key(e, "selection"))?;
        self.estimator.validate()?;
        Ok(())
    }

    pub fn epoch_count(&self) -> usize {
        (self.duration_s * self.rate_hz).round() as usize
    }

    pub fn time_of(&self, k: usize) -> f64 {
        k as f64 / self.rate_hz
    }

    pub fn in_fault_window(&self, t: f64) -> bool {
        self.fault_windows.iter().any(|w| w.contains(t))
    }

    fn keyframe_stride(&self) -> usize {
        ((self.vision.keyframe_interval_s * self.rate_hz).round() as usize).max(1)
    }
}

fn prefix_key(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { key, message } => Error::config(format!("{prefix}.{key}"), message),
        other => other,
    }
}

/// Best-effort name of the key a JSON error refers to.
fn json_error_key(text: &str, e: &serde_json::Error) -> String {
    let msg = e.to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        return rest.split('`').next().unwrap_or("?").to_string();
    }
    if let Some(rest) = msg.strip_prefix("missing field `") {
        return rest.split('`').next().unwrap_or("?").to_string();
    }
    // otherwise report the last key before the error position
    let line = e.line().saturating_sub(1);
    let upto: String = text
        .lines()
        .take(line + 1)
        .enumerate()
        .map(|(i, l)| if i == line { &l[..e.column().min(l.len())] } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    upto.rsplit('"')
        .nth(1)
        .filter(|k| !k.is_empty())
        .map(str::to_string)
        .unwrap_or_else(|| format!("line {}", e.line()))
}

/// Landmarks seeded at one keyframe epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframePlan {
    pub epoch: usize,
    pub pixels: Vec<Vector2<f64>>,
    /// True ground points behind the key pixels.
    pub points: Vec<Vector3<f64>>,
    /// Error added to each initial landmark estimate.
    pub init_error: Vec<Vector3<f64>>,
    /// Intensity bias inside fault windows; zero for clean landmarks.
    pub fault_bias: Vec<f64>,
    /// Intensity noise, `[epochs since keyframe][landmark]`.
    pub noise: Vec<Vec<f64>>,
}

impl KeyframePlan {
    pub fn landmark_id(&self, j: usize) -> String {
        format!("K{:03}V{:02}", self.epoch, j)
    }
}

/// A synthesized scenario with all random draws fixed up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub truth: Vec<NavState>,
    pub satellites: Vec<GpsSatellite>,
    pub conditions: Vec<SatelliteCondition>,
    pub texture: IntensityField,
    pub intrinsics: CameraIntrinsics,
    pub keyframes: Vec<KeyframePlan>,
    /// Non-faulty pseudorange noise, `[epoch][satellite]`.
    pub gps_noise: Vec<Vec<f64>>,
    /// Multipath bias, `[epoch][satellite]`, zero outside fault windows.
    pub gps_fault: Vec<Vec<f64>>,
    pub odometry_noise: Vec<StateVector>,
    pub initial_error: StateVector,
}

fn gauss<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Per-channel noise process that stays inside the declared bounds.
#[derive(Debug, Clone, Copy)]
struct NoiseProcess {
    bound: f64,
    spread: f64,
    step: f64,
    var_max: f64,
}

/// Bounded random-walk mean plus Gaussian noise with a fixed variance drawn
/// from `[0, var_max]`. Returns `[epoch][channel]`.
fn draw_noise(rng: &mut ChaCha8Rng, epochs: usize, channels: usize, process: NoiseProcess) -> Vec<Vec<f64>> {
    let NoiseProcess {
        bound,
        spread,
        step,
        var_max,
    } = process;
    let mut means: Vec<f64> = (0..channels).map(|_| gauss(rng, spread).clamp(-bound, bound)).collect();
    let sigmas: Vec<f64> = (0..channels).map(|_| uniform(rng, 0.0, var_max).sqrt()).collect();
    let mut out = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let row = (0..channels)
            .map(|c| {
                let mut m = means[c] + gauss(rng, step);
                // reflect back into [-bound, bound]
                if bound > 0.0 {
                    while m.abs() > bound {
                        m = m.signum() * 2.0 * bound - m;
                    }
                } else {
                    m = 0.0;
                }
                means[c] = m;
                m + gauss(rng, sigmas[c])
            })
            .collect();
        out.push(row);
    }
    out
}

/// Fraction of probe points where the texture gradient vanishes.
fn flat_fraction(texture: &IntensityField, rng: &mut ChaCha8Rng, truth: &[NavState]) -> f64 {
    let probes = 400;
    let flat = (0..probes)
        .filter(|_| {
            let s = &truth[rng.random_range(0..truth.len())];
            let x = s.position[0] + uniform(rng, -20.0, 20.0);
            let y = s.position[1] + uniform(rng, -20.0, 20.0);
            texture.gradient(x, y).norm() < 1e-6
        })
        .count();
    flat as f64 / probes as f64
}

fn plan_keyframe(
    cfg: &ScenarioConfig,
    epoch: usize,
    pose: &NavState,
    texture: &IntensityField,
    intrinsics: &CameraIntrinsics,
    rng: &mut ChaCha8Rng,
) -> Result<KeyframePlan> {
    let view = GroundImage {
        texture: texture.clone(),
        camera: *pose,
        intrinsics: *intrinsics,
    };
    let v = &cfg.vision;
    let (w, h) = (cfg.camera.width, cfg.camera.height);
    let mut pixels = Vec::with_capacity(v.landmark_count);
    let mut points = Vec::with_capacity(v.landmark_count);
    let mut attempts = 0;
    while pixels.len() < v.landmark_count {
        attempts += 1;
        if attempts > 200 * v.landmark_count.max(1) {
            return Err(Error::DegenerateGeometry(format!(
                "could not place {} landmarks at keyframe {epoch}",
                v.landmark_count
            )));
        }
        let u = Vector2::new(uniform(rng, 0.0, w), uniform(rng, 0.0, h));
        let Ok(p) = view.ground_point(&u) else { continue };
        let range = (p - pose.position).xy().norm();
        if range < v.min_range_m || range > v.max_range_m {
            continue;
        }
        if texture.gradient(p[0], p[1]).norm() < 1e-6 {
            continue;
        }
        pixels.push(u);
        points.push(p);
    }
    let n = pixels.len();
    let init_error = (0..n)
        .map(|_| {
            Vector3::new(
                gauss(rng, v.landmark_sigma_m),
                gauss(rng, v.landmark_sigma_m),
                gauss(rng, v.landmark_sigma_m),
            )
        })
        .collect();
    let mut fault_bias = vec![0.0; n];
    if cfg.faults.enabled {
        let n_faulty = (cfg.faults.vision_fraction * n as f64).round() as usize;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let magnitude = cfg.faults.vision_bias_sigma * cfg.noise.vision_variance_max.sqrt();
        for &j in idx.iter().take(n_faulty) {
            fault_bias[j] = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        }
    }
    Ok(KeyframePlan {
        epoch,
        pixels,
        points,
        init_error,
        fault_bias,
        noise: Vec::new(),
    })
}

/// Synthesizes a scenario. Identical configs give identical scenarios.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.epoch_count();
    let truth: Vec<NavState> = (0..n).map(|k| cfg.trajectory.state_at(cfg.time_of(k))).collect();
    let origin = truth[0].position;
    let satellites = cfg
        .satellites
        .iter()
        .map(|s| {
            GpsSatellite::from_look_angles(
                s.id.clone(),
                &origin,
                s.elevation_deg,
                s.azimuth_deg,
                s.range_class.range_m(),
                s.clock_correction_m,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let conditions: Vec<SatelliteCondition> = cfg
        .satellites
        .iter()
        .map(|s| cfg.faults.condition(s.elevation_deg, s.azimuth_deg))
        .collect();
    let intrinsics = CameraIntrinsics::new(cfg.camera.fx, cfg.camera.fy, cfg.camera.cx, cfg.camera.cy)?;

    let mut texture = IntensityField::random_with(&mut rng, &cfg.vision.texture);
    for _ in 0..20 {
        if flat_fraction(&texture, &mut rng, &truth) <= 0.01 {
            break;
        }
        texture = IntensityField::random_with(&mut rng, &cfg.vision.texture);
    }

    let ns = &cfg.noise;
    let n_sat = satellites.len();
    let gps_noise = draw_noise(
        &mut rng,
        n,
        n_sat,
        NoiseProcess {
            bound: ns.gps_mean_bound_m,
            spread: ns.gps_mean_spread_m,
            step: ns.gps_mean_step_m,
            var_max: ns.gps_variance_max_m2,
        },
    );
    let mut gps_fault = vec![vec![0.0; n_sat]; n];
    for w in &cfg.fault_windows {
        let biases: Vec<f64> = (0..n_sat)
            .map(|_| uniform(&mut rng, cfg.faults.multipath_bias_m[0], cfg.faults.multipath_bias_m[1]))
            .collect();
        for (k, row) in gps_fault.iter_mut().enumerate() {
            if w.contains(cfg.time_of(k)) {
                for i in 0..n_sat {
                    if conditions[i] == SatelliteCondition::Multipath {
                        row[i] = biases[i];
                    }
                }
            }
        }
    }

    let stride = cfg.keyframe_stride();
    let vision_process = NoiseProcess {
        bound: ns.vision_mean_bound,
        spread: ns.vision_mean_spread,
        step: ns.vision_mean_step,
        var_max: ns.vision_variance_max,
    };
    let keyframes = (0..n)
        .step_by(stride)
        .map(|k| {
            let mut plan = plan_keyframe(cfg, k, &truth[k], &texture, &intrinsics, &mut rng)?;
            plan.noise = draw_noise(&mut rng, n - k, plan.pixels.len(), vision_process);
            Ok(plan)
        })
        .collect::<Result<Vec<_>>>()?;
    let odo = [
        ns.odometry_position_m,
        ns.odometry_position_m,
        ns.odometry_position_m,
        ns.odometry_angle_rad,
        ns.odometry_angle_rad,
        ns.odometry_angle_rad,
        ns.odometry_clock_m,
    ];
    let odometry_noise = (0..n)
        .map(|_| StateVector::from_fn(|i, _| gauss(&mut rng, odo[i])))
        .collect();
    let init = [
        ns.initial_position_m,
        ns.initial_position_m,
        ns.initial_position_m,
        ns.initial_angle_rad,
        ns.initial_angle_rad,
        ns.initial_angle_rad,
        ns.initial_clock_m,
    ];
    let initial_error = StateVector::from_fn(|i, _| gauss(&mut rng, init[i]));

    Ok(Scenario {
        config: cfg.clone(),
        truth,
        satellites,
        conditions,
        texture,
        intrinsics,
        keyframes,
        gps_noise,
        gps_fault,
        odometry_noise,
        initial_error,
    })
}

/// Landmarks currently tracked against one keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct VisionTrack {
    pub plan: usize,
    pub keyframe: Keyframe,
}

/// One epoch of synthesized measurements with the truth behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEpoch {
    pub inputs: EpochInputs,
    pub truth: NavState,
    pub in_fault_window: bool,
    /// Multipath-affected entries of `inputs.gps`.
    pub faulty_gps: Vec<bool>,
    /// Association-faulted entries of `inputs.vision`.
    pub faulty_vision: Vec<bool>,
}

impl Scenario {
    pub fn epochs(&self) -> usize {
        self.truth.len()
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.config.time_of(k)
    }

    pub fn in_fault_window(&self, k: usize) -> bool {
        self.config.in_fault_window(self.time_of(k))
    }

    /// Whether satellite `i` is received at epoch `k`.
    pub fn satellite_visible(&self, i: usize, k: usize) -> bool {
        !(self.conditions[i] == SatelliteCondition::Blocked && self.in_fault_window(k))
    }

    /// Index of the keyframe plan seeded at epoch `k`, if any.
    pub fn keyframe_at(&self, k: usize) -> Option<usize> {
        self.keyframes.iter().position(|p| p.epoch == k)
    }

    /// Motion mean: the previous navigation state moved by the true
    /// displacement plus odometry noise. At the first epoch it is the truth
    /// plus the initial error.
    pub fn motion_mean(&self, k: usize, previous: Option<&NavState>) -> NavState {
        match (k, previous) {
            (0, _) | (_, None) => self.truth[k].perturbed(&self.initial_error),
            (_, Some(prev)) => {
                let step = self.truth[k].difference(&self.truth[k - 1]);
                prev.perturbed(&(step + self.odometry_noise[k]))
            }
        }
    }

    /// Starts tracking the landmarks of keyframe plan `plan` from the
    /// estimated pose `estimate`, so landmark errors follow the pose error.
    /// `position_cov` is the uncertainty of the estimated camera position and
    /// is added to every landmark covariance.
    pub fn start_track(
        &self,
        plan: usize,
        estimate: &NavState,
        position_cov: &Matrix3<f64>,
    ) -> Result<(VisionTrack, Vec<LandmarkEstimate>)> {
        let kp = &self.keyframes[plan];
        let truth = &self.truth[kp.epoch];
        let sigma2 = self.config.vision.landmark_sigma_m.powi(2).max(1e-6);
        let mut estimates = Vec::with_capacity(kp.points.len());
        let mut depths = Vec::with_capacity(kp.points.len());
        for (j, (u, p)) in kp.pixels.iter().zip(&kp.points).enumerate() {
            let depth = truth.world_to_camera(p)[2];
            let p_est = estimate.camera_to_world(&unproject(&self.intrinsics, u, 1.0 / depth)?) + kp.init_error[j];
            let d_est = estimate.world_to_camera(&p_est)[2];
            if !(d_est > 0.0) {
                return Err(Error::BehindCamera { depth: d_est });
            }
            depths.push(1.0 / d_est);
            estimates.push(LandmarkEstimate {
                id: kp.landmark_id(j),
                position: p_est,
                covariance: Matrix3::identity() * sigma2 + position_cov,
            });
        }
        let intensities = kp.points.iter().map(|p| self.texture.value(p[0], p[1])).collect();
        let keyframe = Keyframe::new(*estimate, kp.pixels.clone(), depths, intensities)?;
        Ok((VisionTrack { plan, keyframe }, estimates))
    }

    fn camera_context(&self, k: usize, track: &VisionTrack) -> CameraContext {
        CameraContext {
            intrinsics: self.intrinsics,
            keyframes: vec![track.keyframe.clone()],
            image: GroundImage {
                texture: self.texture.clone(),
                camera: self.truth[k],
                intrinsics: self.intrinsics,
            },
        }
    }

    fn in_view(&self, pose: &NavState, p: &Vector3<f64>) -> bool {
        let pc = pose.world_to_camera(p);
        if pc[2] < 0.5 {
            return false;
        }
        project(&self.intrinsics, &pc)
            .map(|u| u[0] >= 0.0 && u[0] <= self.config.camera.width && u[1] >= 0.0 && u[1] <= self.config.camera.height)
            .unwrap_or(false)
    }
}

/// Measurements of epoch `k` linearized about `motion_mean`.
///
/// Pseudoranges come from the true state plus noise and active multipath;
/// blocked satellites are omitted. Intensities are the texture at the true
/// landmark position plus noise and, inside fault windows, the association
/// bias. Landmark positions in the inputs are the current estimates.
pub fn sample_measurements(
    scenario: &Scenario,
    k: usize,
    motion_mean: &NavState,
    track: Option<&VisionTrack>,
    landmarks: &[LandmarkEstimate],
) -> Result<SampledEpoch> {
    if k >= scenario.epochs() {
        return Err(Error::invalid(format!("epoch {k} beyond scenario length {}", scenario.epochs())));
    }
    let truth = scenario.truth[k];
    let in_window = scenario.in_fault_window(k);
    let mut gps = Vec::new();
    let mut faulty_gps = Vec::new();
    for (i, sat) in scenario.satellites.iter().enumerate() {
        if !scenario.satellite_visible(i, k) {
            continue;
        }
        let fault = scenario.gps_fault[k][i];
        gps.push(GpsObservation {
            satellite: sat.clone(),
            pseudorange: gps_predict(&truth, sat)? + scenario.gps_noise[k][i] + fault,
        });
        faulty_gps.push(fault != 0.0);
    }
    let mut vision = Vec::new();
    let mut faulty_vision = Vec::new();
    let mut camera = None;
    if let Some(track) = track {
        let kp = &scenario.keyframes[track.plan];
        for (j, p) in kp.points.iter().enumerate() {
            if !scenario.in_view(&truth, p) {
                continue;
            }
            let id = kp.landmark_id(j);
            let Some(est) = landmarks.iter().find(|l| l.id == id) else { continue };
            if !scenario.in_view(motion_mean, &est.position) {
                continue;
            }
            let bias = if in_window { kp.fault_bias[j] } else { 0.0 };
            let landmark = VisionLandmark::new(id, est.position, est.position_set()?, kp.pixels[j], 0)?;
            vision.push(VisionObservation {
                landmark,
                intensity: scenario.texture.value(p[0], p[1]) + kp.noise[k - kp.epoch][j] + bias,
            });
            faulty_vision.push(bias != 0.0);
        }
        if !vision.is_empty() {
            camera = Some(scenario.camera_context(k, track));
        }
    }
    Ok(SampledEpoch {
        inputs: EpochInputs {
            a_priori: *motion_mean,
            motion_mean: *motion_mean,
            gps,
            vision,
            camera,
        },
        truth,
        in_fault_window: in_window,
        faulty_gps,
        faulty_vision,
    })
}

/// Landmark selection policy for a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Relaxed selection with rounding and availability feedback.
    Ila,
    GpsOnly,
    All,
    /// Uniformly random subsets with the given per-epoch `(gps, vision)` counts.
    Random { counts: Vec<(usize, usize)>, seed: u64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Ila => "ila",
            Strategy::GpsOnly => "gps_only",
            Strategy::All => "all",
            Strategy::Random { .. } => "random",
        }
    }
}

/// One row of `epochs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub t_s: f64,
    pub err_3d_m: f64,
    pub err_2d_m: f64,
    pub predicted_bound_m: f64,
    pub available: bool,
    pub n_gps_selected: usize,
    pub n_vis_selected: usize,
    pub mean_alpha_gps: f64,
    pub mean_alpha_vis: f64,
    pub in_fault_window: bool,
    /// Error message when a step of the epoch failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub records: Vec<EpochRecord>,
    /// Selection log (ILA runs only).
    pub selections: Vec<SelectionRecord>,
}

impl RunOutput {
    pub fn max_err_2d(&self) -> f64 {
        self.records.iter().map(|r| r.err_2d_m).fold(0.0, f64::max)
    }

    pub fn max_err_3d(&self) -> f64 {
        self.records.iter().map(|r| r.err_3d_m).fold(0.0, f64::max)
    }

    pub fn availability_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.available).count() as f64 / self.records.len() as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Position bound of an explicit selection.
fn selection_bound(analysis: &EpochAnalysis, q: &AttentionSet, cfg: &SelectionConfig) -> Result<f64> {
    let union = scaled_union(analysis, &q.gps, &q.vision)?;
    Ok(pzono_cost(&union, cfg.gamma, &WeightVector::position_only())?.sqrt())
}

struct Choice {
    q: AttentionSet,
    bound: f64,
    available: bool,
    failure: Option<String>,
    log: Option<SelectionRecord>,
}

fn choose(strategy: &Strategy, analysis: &EpochAnalysis, cfg: &SelectionConfig, k: usize, rng: &mut ChaCha8Rng) -> Result<Choice> {
    let (ng, nv) = (analysis.n_gps(), analysis.n_vision());
    let fixed = |q: AttentionSet| -> Result<Choice> {
        let bound = if q.total() > 0.0 {
            selection_bound(analysis, &q, cfg)?
        } else {
            f64::INFINITY
        };
        Ok(Choice {
            available: bound <= cfg.alert_limit,
            q,
            bound,
            failure: None,
            log: None,
        })
    };
    match strategy {
        Strategy::Ila => match select(analysis, cfg) {
            Ok(sel) => Ok(Choice {
                q: sel.rounded.clone(),
                bound: sel.predicted_bound,
                available: sel.available,
                failure: None,
                log: Some(sel.record(k)),
            }),
            Err(Error::Infeasible(msg)) => Ok(Choice {
                q: AttentionSet::ones(ng, nv),
                bound: f64::INFINITY,
                available: false,
                failure: Some(format!("infeasible selection: {msg}")),
                log: None,
            }),
            Err(e) => Err(e),
        },
        Strategy::GpsOnly => fixed(AttentionSet {
            gps: vec![1.0; ng],
            vision: vec![0.0; nv],
            relaxed: false,
        }),
        Strategy::All => fixed(AttentionSet::ones(ng, nv)),
        Strategy::Random { counts, .. } => {
            let (cg, cv) = counts.get(k).copied().unwrap_or((ng, nv));
            let pick = |n: usize, c: usize, rng: &mut ChaCha8Rng| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(rng);
                let mut q = vec![0.0; n];
                for &i in idx.iter().take(c.min(n)) {
                    q[i] = 1.0;
                }
                q
            };
            let gps = pick(ng, cg, rng);
            let vision = pick(nv, cv, rng);
            fixed(AttentionSet {
                gps,
                vision,
                relaxed: false,
            })
        }
    }
}

/// Runs the closed loop over every epoch of `scenario` with one selection
/// strategy.
///
/// Per epoch: measurements, fault statuses, selection, predicted bound,
/// estimation, landmark refinement and feedback. The ILA strategy feeds the
/// estimate back only when the epoch is predicted available and falls back
/// to the motion mean otherwise; baselines always feed back their estimate.
/// The recorded error is that of the fed-back navigation state. Failures of
/// a step are recorded on the epoch and the run continues from the motion
/// mean.
pub fn run_scenario(scenario: &Scenario, strategy: &Strategy) -> Result<RunOutput> {
    let cfg = &scenario.config;
    let bounds = cfg.noise.bounds()?;
    let mut est_cfg = cfg.estimator;
    est_cfg.gps_variance = bounds.gps.covariance()[(0, 0)].max(1e-6);
    est_cfg.vision_variance = bounds.vision.covariance()[(0, 0)].max(1e-6);
    let prior_cov = cfg.noise.motion_prior_covariance();
    let mut pipeline = ReachPipeline::new(cfg.k_window)?;
    let seed = match strategy {
        Strategy::Random { seed, .. } => *seed,
        _ => cfg.seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_a11);
    let uses_availability = matches!(strategy, Strategy::Ila);

    let mut out = RunOutput::default();
    let mut previous: Option<NavState> = None;
    let mut track: Option<VisionTrack> = None;
    let mut landmarks: Vec<LandmarkEstimate> = Vec::new();
    let odometry_var = Matrix3::identity() * cfg.noise.odometry_position_m.powi(2);
    let mut pose_cov = Matrix3::identity() * cfg.noise.initial_position_m.powi(2) - odometry_var;
    for k in 0..scenario.epochs() {
        let motion_mean = scenario.motion_mean(k, previous.as_ref());
        pose_cov += odometry_var;
        if let Some(plan) = scenario.keyframe_at(k) {
            match scenario.start_track(plan, &motion_mean, &pose_cov) {
                Ok((t, l)) => {
                    track = Some(t);
                    landmarks = l;
                }
                Err(e) => log::warn!("epoch {k}: keyframe not started: {e}"),
            }
        }
        let sampled = sample_measurements(scenario, k, &motion_mean, track.as_ref(), &landmarks)?;
        let epoch = run_epoch(
            scenario, strategy, k, &sampled, &mut pipeline, &bounds, &est_cfg, &prior_cov, &landmarks, &mut rng,
        );
        let (state, record) = match epoch {
            Ok(step) => {
                landmarks = step.landmarks;
                let fed = if uses_availability {
                    feedback_motion(step.record.available, &step.estimate, &motion_mean)
                } else {
                    step.estimate
                };
                if !uses_availability || step.record.available {
                    pose_cov = step.position_cov;
                }
                if let Some(log) = step.log {
                    out.selections.push(log);
                }
                (fed, step.record)
            }
            Err(e) => {
                log::warn!("epoch {k}: {e}");
                let record = EpochRecord {
                    epoch: k,
                    t_s: scenario.time_of(k),
                    err_3d_m: 0.0,
                    err_2d_m: 0.0,
                    predicted_bound_m: f64::INFINITY,
                    available: false,
                    n_gps_selected: 0,
                    n_vis_selected: 0,
                    mean_alpha_gps: 0.0,
                    mean_alpha_vis: 0.0,
                    in_fault_window: sampled.in_fault_window,
                    failure: Some(e.to_string()),
                };
                (motion_mean, record)
            }
        };
        let d = state.position - sampled.truth.position;
        out.records.push(EpochRecord {
            err_3d_m: d.norm(),
            err_2d_m: d.xy().norm(),
            ..record
        });
        previous = Some(state);
    }
    Ok(out)
}

struct EpochStep {
    estimate: NavState,
    position_cov: Matrix3<f64>,
    landmarks: Vec<LandmarkEstimate>,
    record: EpochRecord,
    log: Option<SelectionRecord>,
}

#[allow(clippy::too_many_arguments)]
fn run_epoch(
    scenario: &Scenario,
    strategy: &Strategy,
    k: usize,
    sampled: &SampledEpoch,
    pipeline: &mut ReachPipeline,
    bounds: &NoiseBounds,
    est_cfg: &EstimatorConfig,
    prior_cov: &StateMatrix,
    landmarks: &[LandmarkEstimate],
    rng: &mut ChaCha8Rng,
) -> Result<EpochStep> {
    let cfg = &scenario.config;
    let inputs = &sampled.inputs;
    let analysis = pipeline.analyze(inputs, bounds)?;
    let choice = choose(strategy, &analysis, &cfg.selection, k, rng)?;
    let gps: Vec<GpsObservation> = analysis
        .gps
        .iter()
        .zip(&choice.q.gps)
        .filter(|(_, q)| **q >= 0.5)
        .map(|(a, _)| inputs.gps[a.index].clone())
        .collect();
    let vision: Vec<VisionObservation> = analysis
        .vision
        .iter()
        .zip(&choice.q.vision)
        .filter(|(_, q)| **q >= 0.5)
        .map(|(a, _)| inputs.vision[a.index].clone())
        .collect();
    let prior = EstimatorState {
        state: inputs.motion_mean,
        state_covariance: *prior_cov,
        landmarks: landmarks.to_vec(),
    };
    let mut failure = choice.failure;
    let estimated = match estimate_state(&gps, &vision, inputs.camera.as_ref(), &prior, est_cfg) {
        Ok(e) => e,
        Err(e) => {
            failure = Some(e.to_string());
            prior.clone()
        }
    };
    let landmarks = update_landmarks(&vision, inputs.camera.as_ref(), &estimated, landmarks, est_cfg)?;
    let available = choice.available && failure.is_none();
    Ok(EpochStep {
        estimate: estimated.state,
        position_cov: estimated.state_covariance.fixed_view::<3, 3>(0, 0).into_owned(),
        landmarks,
        record: EpochRecord {
            epoch: k,
            t_s: scenario.time_of(k),
            err_3d_m: 0.0,
            err_2d_m: 0.0,
            predicted_bound_m: choice.bound,
            available,
            n_gps_selected: gps.len(),
            n_vis_selected: vision.len(),
            mean_alpha_gps: mean(analysis.gps.iter().map(|a| a.joint_status)),
            mean_alpha_vis: mean(analysis.vision.iter().map(|a| a.joint_status)),
            in_fault_window: sampled.in_fault_window,
            failure,
        },
        log: choice.log,
    })
}

/// Maximum errors of one strategy over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: String,
    pub max_err_2d_m: f64,
    pub max_err_3d_m: f64,
    pub availability_fraction: f64,
}

/// Runs ILA and the baselines on one scenario.
///
/// The random baseline draws `random_runs` selections with the per-epoch
/// counts chosen by ILA and keeps the smallest error at each epoch.
pub fn compare(scenario: &Scenario, random_runs: usize) -> Result<(Vec<ComparisonRow>, RunOutput)> {
    let ila = run_scenario(scenario, &Strategy::Ila)?;
    let row = |name: &str, out: &RunOutput| ComparisonRow {
        strategy: name.to_string(),
        max_err_2d_m: out.max_err_2d(),
        max_err_3d_m: out.max_err_3d(),
        availability_fraction: out.availability_fraction(),
    };
    let mut rows = vec![row("ila", &ila)];
    for s in [Strategy::GpsOnly, Strategy::All] {
        rows.push(row(s.name(), &run_scenario(scenario, &s)?));
    }
    if random_runs > 0 {
        let counts: Vec<(usize, usize)> = ila.records.iter().map(|r| (r.n_gps_selected, r.n_vis_selected)).collect();
        let runs = (0..random_runs as u64)
            .into_par_iter()
            .map(|r| {
                let strategy = Strategy::Random {
                    counts: counts.clone(),
                    seed: scenario.config.seed.wrapping_mul(1_000_003).wrapping_add(r),
                };
                run_scenario(scenario, &strategy)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(random_baseline(&runs));
    }
    Ok((rows, ila))
}

/// Row of the random baseline: at each epoch the smallest error over the
/// runs, then the largest of those over the scenario. Availability is the
/// mean over runs.
pub fn random_baseline(runs: &[RunOutput]) -> ComparisonRow {
    let epochs = runs.iter().map(|o| o.records.len()).min().unwrap_or(0);
    let per_epoch_min = |f: fn(&EpochRecord) -> f64| -> f64 {
        (0..epochs)
            .map(|k| runs.iter().map(|o| f(&o.records[k])).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    ComparisonRow {
        strategy: "random".into(),
        max_err_2d_m: per_epoch_min(|r| r.err_2d_m),
        max_err_3d_m: per_epoch_min(|r| r.err_3d_m),
        availability_fraction: mean(runs.iter().map(RunOutput::availability_fraction)),
    }
}
