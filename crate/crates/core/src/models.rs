//! Measurement and motion models with analytic Jacobians.
//!
//! Frames: the world frame is east-north-up. The body frame has x forward,
//! y left, z up. The camera frame has x right, y down, z along the optical
//! axis, and is rigidly mounted on the body with a small downward tilt.
//!
//! The state vector is ordered `[x, y, z, roll, pitch, yaw, cδt]`.

use nalgebra::{Matrix2x3, Matrix3, RowSVector, RowVector3, SMatrix, SVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pzono::PZonotope;

pub const STATE_DIM: usize = 7;
pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type StateRow = RowSVector<f64, STATE_DIM>;

/// Points closer than this to the image plane are treated as behind the camera.
pub const DEPTH_FLOOR: f64 = 0.01;

/// Downward tilt of the camera optical axis relative to the body x axis.
pub const CAMERA_TILT_RAD: f64 = 10.0 * std::f64::consts::PI / 180.0;

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn drot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn drot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn drot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Body-to-world rotation `Rz(yaw) · Ry(pitch) · Rx(roll)`.
pub fn rotation_zyx(rpy: &Vector3<f64>) -> Matrix3<f64> {
    rot_z(rpy[2]) * rot_y(rpy[1]) * rot_x(rpy[0])
}

/// Partial derivatives of [`rotation_zyx`] with respect to roll, pitch, yaw.
pub fn rotation_zyx_partials(rpy: &Vector3<f64>) -> [Matrix3<f64>; 3] {
    let (rx, ry, rz) = (rot_x(rpy[0]), rot_y(rpy[1]), rot_z(rpy[2]));
    [
        rz * ry * drot_x(rpy[0]),
        rz * drot_y(rpy[1]) * rx,
        drot_z(rpy[2]) * ry * rx,
    ]
}

/// Camera-to-body rotation; columns are the camera axes in body coordinates.
pub fn camera_mount() -> Matrix3<f64> {
    let (s, c) = CAMERA_TILT_RAD.sin_cos();
    let z_c = Vector3::new(c, 0.0, -s);
    let x_c = Vector3::new(0.0, -1.0, 0.0);
    let y_c = z_c.cross(&x_c);
    Matrix3::from_columns(&[x_c, y_c, z_c])
}

/// Navigation state: position (m), roll/pitch/yaw (rad), receiver clock bias (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavState {
    pub position: Vector3<f64>,
    pub orientation: Vector3<f64>,
    pub clock_bias: f64,
}

impl NavState {
    pub fn new(position: Vector3<f64>, orientation: Vector3<f64>, clock_bias: f64) -> Result<Self> {
        let s = Self {
            position,
            orientation: orientation.map(wrap_angle),
            clock_bias,
        };
        if !s.to_vector().iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("navigation state must be finite"));
        }
        Ok(s)
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self {
            position: Vector3::new(v[0], v[1], v[2]),
            orientation: Vector3::new(wrap_angle(v[3]), wrap_angle(v[4]), wrap_angle(v[5])),
            clock_bias: v[6],
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let (p, o) = (&self.position, &self.orientation);
        StateVector::from_column_slice(&[p[0], p[1], p[2], o[0], o[1], o[2], self.clock_bias])
    }

    /// `self ⊞ delta`, with angles re-wrapped.
    pub fn perturbed(&self, delta: &StateVector) -> Self {
        Self::from_vector(&(self.to_vector() + delta))
    }

    /// `self ⊟ other`, with angle differences wrapped.
    pub fn difference(&self, other: &NavState) -> StateVector {
        let mut d = self.to_vector() - other.to_vector();
        for i in 3..6 {
            d[i] = wrap_angle(d[i]);
        }
        d
    }

    /// Body-to-world rotation.
    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_zyx(&self.orientation)
    }

    /// Camera-to-world rotation.
    pub fn camera_rotation(&self) -> Matrix3<f64> {
        self.rotation() * camera_mount()
    }

    /// Expresses a world point in this state's camera frame.
    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.camera_rotation().transpose() * (p - self.position)
    }

    pub fn camera_to_world(&self, p_cam: &Vector3<f64>) -> Vector3<f64> {
        self.camera_rotation() * p_cam + self.position
    }
}

/// A GPS satellite with known position and clock correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsSatellite {
    pub id: String,
    pub position: Vector3<f64>,
    pub clock_correction: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

impl GpsSatellite {
    pub fn new(
        id: impl Into<String>,
        position: Vector3<f64>,
        clock_correction: f64,
        elevation_deg: f64,
        azimuth_deg: f64,
    ) -> Result<Self> {
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::invalid(format!("elevation {elevation_deg} outside [-90, 90]")));
        }
        if !(0.0..360.0).contains(&azimuth_deg) {
            return Err(Error::invalid(format!("azimuth {azimuth_deg} outside [0, 360)")));
        }
        if !position.iter().all(|v| v.is_finite()) || !clock_correction.is_finite() {
            return Err(Error::invalid("satellite position and clock must be finite"));
        }
        Ok(Self {
            id: id.into(),
            position,
            clock_correction,
            elevation_deg,
            azimuth_deg,
        })
    }

    /// Places a satellite at `range` meters from `receiver` along the given
    /// elevation and azimuth (degrees, azimuth clockwise from north).
    pub fn from_look_angles(
        id: impl Into<String>,
        receiver: &Vector3<f64>,
        elevation_deg: f64,
        azimuth_deg: f64,
        range: f64,
        clock_correction: f64,
    ) -> Result<Self> {
        let position = receiver + line_of_sight(elevation_deg, azimuth_deg) * range;
        Self::new(id, position, clock_correction, elevation_deg, azimuth_deg)
    }
}

/// East-north-up unit vector for an elevation and azimuth in degrees.
pub fn line_of_sight(elevation_deg: f64, azimuth_deg: f64) -> Vector3<f64> {
    let (el, az) = (elevation_deg.to_radians(), azimuth_deg.to_radians());
    Vector3::new(az.sin() * el.cos(), az.cos() * el.cos(), el.sin())
}

/// Pseudorange `‖y - x‖ + (cδt - cδt^i)`.
pub fn gps_predict(state: &NavState, sat: &GpsSatellite) -> Result<f64> {
    let range = (sat.position - state.position).norm();
    if range == 0.0 {
        return Err(Error::invalid(format!("receiver coincides with satellite `{}`", sat.id)));
    }
    Ok(range + state.clock_bias - sat.clock_correction)
}

/// `[-u, 0, 0, 0, 1]` with `u` the receiver-to-satellite unit vector.
pub fn gps_jacobian(state: &NavState, sat: &GpsSatellite) -> Result<StateRow> {
    let los = sat.position - state.position;
    let range = los.norm();
    if range == 0.0 {
        return Err(Error::invalid(format!("receiver coincides with satellite `{}`", sat.id)));
    }
    let u = los / range;
    Ok(StateRow::from_row_slice(&[-u[0], -u[1], -u[2], 0.0, 0.0, 0.0, 1.0]))
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::invalid("focal lengths must be positive and centers finite"));
        }
        Ok(Self { fx, fy, cx, cy })
    }
}

/// Projects a camera-frame point to pixels.
pub fn project(k: &CameraIntrinsics, p_cam: &Vector3<f64>) -> Result<Vector2<f64>> {
    if !(p_cam[2] > DEPTH_FLOOR) {
        return Err(Error::BehindCamera { depth: p_cam[2] });
    }
    Ok(Vector2::new(
        k.fx * p_cam[0] / p_cam[2] + k.cx,
        k.fy * p_cam[1] / p_cam[2] + k.cy,
    ))
}

/// Derivative of [`project`] with respect to the camera-frame point.
pub fn project_jacobian(k: &CameraIntrinsics, p_cam: &Vector3<f64>) -> Result<Matrix2x3<f64>> {
    let z = p_cam[2];
    if !(z > DEPTH_FLOOR) {
        return Err(Error::BehindCamera { depth: z });
    }
    Ok(Matrix2x3::new(
        k.fx / z,
        0.0,
        -k.fx * p_cam[0] / (z * z),
        0.0,
        k.fy / z,
        -k.fy * p_cam[1] / (z * z),
    ))
}

/// Camera-frame point at depth `1 / inv_depth` that projects to `u`.
pub fn unproject(k: &CameraIntrinsics, u: &Vector2<f64>, inv_depth: f64) -> Result<Vector3<f64>> {
    if !(inv_depth > 0.0 && inv_depth.is_finite()) {
        return Err(Error::invalid(format!("inverse depth must be positive, got {inv_depth}")));
    }
    let z = 1.0 / inv_depth;
    Ok(Vector3::new((u[0] - k.cx) / k.fx * z, (u[1] - k.cy) / k.fy * z, z))
}

/// Reference frame for direct alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub state: NavState,
    pub key_pixels: Vec<Vector2<f64>>,
    pub inverse_depths: Vec<f64>,
    pub intensities: Vec<f64>,
}

impl Keyframe {
    pub fn new(
        state: NavState,
        key_pixels: Vec<Vector2<f64>>,
        inverse_depths: Vec<f64>,
        intensities: Vec<f64>,
    ) -> Result<Self> {
        if key_pixels.len() != inverse_depths.len() || key_pixels.len() != intensities.len() {
            return Err(Error::invalid("keyframe lists must have equal length"));
        }
        if inverse_depths.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("keyframe inverse depths must be positive"));
        }
        Ok(Self {
            state,
            key_pixels,
            inverse_depths,
            intensities,
        })
    }

    /// Index of a key pixel, matched to within 1e-9 px.
    pub fn pixel_index(&self, u: &Vector2<f64>) -> Option<usize> {
        self.key_pixels.iter().position(|k| (k - u).amax() <= 1e-9)
    }
}

/// A 3D visual landmark with its position uncertainty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionLandmark {
    pub id: String,
    pub position: Vector3<f64>,
    pub position_set: PZonotope,
    pub source_pixel: Vector2<f64>,
    pub keyframe: usize,
}

impl VisionLandmark {
    pub fn new(
        id: impl Into<String>,
        position: Vector3<f64>,
        position_set: PZonotope,
        source_pixel: Vector2<f64>,
        keyframe: usize,
    ) -> Result<Self> {
        if position_set.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: position_set.dim(),
            });
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("landmark position must be finite"));
        }
        Ok(Self {
            id: id.into(),
            position,
            position_set,
            source_pixel,
            keyframe,
        })
    }
}

/// Linear transition `z_mm = F x_{k-1}` with a noise set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub transition: StateMatrix,
    pub noise_set: PZonotope,
}

impl MotionModel {
    pub fn new(transition: StateMatrix, noise_set: PZonotope) -> Result<Self> {
        if noise_set.dim() != STATE_DIM {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                found: noise_set.dim(),
            });
        }
        if !transition.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("transition matrix must be finite"));
        }
        Ok(Self {
            transition,
            noise_set,
        })
    }
}

pub fn motion_predict(model: &MotionModel, prev: &NavState) -> NavState {
    NavState::from_vector(&(model.transition * prev.to_vector()))
}

/// A current-frame image sampled in pixel coordinates.
pub trait ImageField {
    fn intensity(&self, u: &Vector2<f64>) -> Result<f64>;
    fn gradient(&self, u: &Vector2<f64>) -> Result<Vector2<f64>>;
}

/// An image of uniform brightness.
#[derive(Debug, Clone, Copy)]
pub struct ConstantImage(pub f64);

impl ImageField for ConstantImage {
    fn intensity(&self, _u: &Vector2<f64>) -> Result<f64> {
        Ok(self.0)
    }
    fn gradient(&self, _u: &Vector2<f64>) -> Result<Vector2<f64>> {
        Ok(Vector2::zeros())
    }
}

/// Rigid transform of a keyframe pixel into the current camera frame.
pub fn warp_point(
    state: &NavState,
    kf_state: &NavState,
    u: &Vector2<f64>,
    inv_depth: f64,
    k: &CameraIntrinsics,
) -> Result<Vector3<f64>> {
    let p_kf = unproject(k, u, inv_depth)?;
    let r_cur = state.camera_rotation().transpose();
    let rot = r_cur * kf_state.camera_rotation();
    let t = r_cur * (kf_state.position - state.position);
    Ok(rot * p_kf + t)
}

/// Warps a key pixel of `kf` into the camera frame of `state`.
pub fn warp(state: &NavState, kf: &Keyframe, u: &Vector2<f64>, k: &CameraIntrinsics) -> Result<Vector3<f64>> {
    let idx = kf
        .pixel_index(u)
        .ok_or_else(|| Error::invalid(format!("pixel ({}, {}) is not a key pixel", u[0], u[1])))?;
    warp_point(state, &kf.state, u, kf.inverse_depths[idx], k)
}

/// Predicted intensity `I_k(π(ω(x_k, π(p))))`.
///
/// The landmark is projected into the keyframe, warped into the current
/// camera and sampled from the current image.
pub fn vision_predict<I: ImageField + ?Sized>(
    state: &NavState,
    landmark_position: &Vector3<f64>,
    kf: &Keyframe,
    k: &CameraIntrinsics,
    image: &I,
) -> Result<f64> {
    let p_kf = kf.state.world_to_camera(landmark_position);
    let u_kf = project(k, &p_kf)?;
    let p_cur = warp_point(state, &kf.state, &u_kf, 1.0 / p_kf[2], k)?;
    image.intensity(&project(k, &p_cur)?)
}

/// Jacobians `(∂b/∂x, ∂b/∂p)` of [`vision_predict`].
pub fn vision_jacobians<I: ImageField + ?Sized>(
    state: &NavState,
    landmark_position: &Vector3<f64>,
    k: &CameraIntrinsics,
    image: &I,
) -> Result<(StateRow, RowVector3<f64>)> {
    let r_cw = state.camera_rotation().transpose();
    let rel = landmark_position - state.position;
    let p_cam = r_cw * rel;
    let u = project(k, &p_cam)?;
    let grad = image.gradient(&u)?;
    let s: RowVector3<f64> = grad.transpose() * project_jacobian(k, &p_cam)?;

    let b_p = s * r_cw;
    let mut b_x = StateRow::zeros();
    let pos_block = -b_p;
    for i in 0..3 {
        b_x[i] = pos_block[i];
    }
    let mount_t = camera_mount().transpose();
    for (i, d_r) in rotation_zyx_partials(&state.orientation).iter().enumerate() {
        b_x[3 + i] = (s * mount_t * d_r.transpose() * rel)[0];
    }
    Ok((b_x, b_p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap()
    }

    /// Image whose intensity is a smooth analytic function of the pixel.
    struct WavyImage;

    impl ImageField for WavyImage {
        fn intensity(&self, u: &Vector2<f64>) -> Result<f64> {
            Ok((0.05 * u[0]).sin() * 40.0 + (0.03 * u[1]).cos() * 25.0 + 0.2 * u[0])
        }
        fn gradient(&self, u: &Vector2<f64>) -> Result<Vector2<f64>> {
            Ok(Vector2::new(
                2.0 * (0.05 * u[0]).cos() + 0.2,
                -0.75 * (0.03 * u[1]).sin(),
            ))
        }
    }

    fn state(p: [f64; 3], o: [f64; 3], c: f64) -> NavState {
        NavState::new(Vector3::from(p), Vector3::from(o), c).unwrap()
    }

    #[test]
    fn gps_predict_examples() {
        let sat = GpsSatellite::new("G1", Vector3::new(2.02e7, 0.0, 0.0), 0.0, 0.0, 90.0).unwrap();
        let rx = state([0.0; 3], [0.0; 3], 10.0);
        assert_eq!(gps_predict(&rx, &sat).unwrap(), 20_200_010.0);

        let closer = state([100.0, 0.0, 0.0], [0.0; 3], 10.0);
        assert_relative_eq!(gps_predict(&rx, &sat).unwrap() - gps_predict(&closer, &sat).unwrap(), 100.0);

        let mut same = sat.clone();
        same.clock_correction = 10.0;
        assert_eq!(gps_predict(&rx, &same).unwrap(), 2.02e7);

        let onsat = state([2.02e7, 0.0, 0.0], [0.0; 3], 0.0);
        assert!(gps_predict(&onsat, &sat).is_err());
    }

    #[test]
    fn gps_jacobian_axis_cases() {
        let rx = state([0.0; 3], [0.0; 3], 0.0);
        let east = GpsSatellite::new("E", Vector3::new(2e7, 0.0, 0.0), 0.0, 0.0, 90.0).unwrap();
        assert_eq!(gps_jacobian(&rx, &east).unwrap(), StateRow::from_row_slice(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
        let up = GpsSatellite::new("U", Vector3::new(0.0, 0.0, 2e7), 0.0, 90.0, 0.0).unwrap();
        assert_eq!(gps_jacobian(&rx, &up).unwrap(), StateRow::from_row_slice(&[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn projection_examples() {
        let k = intr();
        assert_eq!(project(&k, &Vector3::new(1.0, 1.0, 2.0)).unwrap(), Vector2::new(100.0, 100.0));
        assert_eq!(project(&k, &Vector3::new(0.0, 0.0, 7.0)).unwrap(), Vector2::new(50.0, 50.0));
        assert!(matches!(project(&k, &Vector3::new(0.0, 0.0, 0.005)), Err(Error::BehindCamera { .. })));
        assert_eq!(unproject(&k, &Vector2::new(50.0, 50.0), 0.5).unwrap(), Vector3::new(0.0, 0.0, 2.0));
        assert_eq!(unproject(&k, &Vector2::new(100.0, 100.0), 0.5).unwrap(), Vector3::new(1.0, 1.0, 2.0));
        assert!(unproject(&k, &Vector2::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn camera_mount_is_a_rotation_looking_forward_and_down() {
        let m = camera_mount();
        assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(m * m.transpose(), Matrix3::identity(), epsilon = 1e-12);
        let optical = m.column(2);
        assert!(optical[0] > 0.9 && optical[2] < 0.0);
        // image "down" points mostly towards the ground
        assert!(m.column(1)[2] < -0.9);
    }

    #[test]
    fn warp_identity_and_forward_motion() {
        let k = intr();
        let s = state([1.0, 2.0, 1.5], [0.01, -0.02, 0.7], 0.0);
        let u = Vector2::new(60.0, 45.0);
        let kf = Keyframe::new(s, vec![u], vec![0.1], vec![3.0]).unwrap();
        assert_relative_eq!(warp(&s, &kf, &u, &k).unwrap(), unproject(&k, &u, 0.1).unwrap(), epsilon = 1e-12);

        let axis = s.camera_rotation().column(2).into_owned();
        let moved = NavState { position: s.position + axis, ..s };
        let centre = Vector2::new(k.cx, k.cy);
        let p = warp_point(&moved, &s, &centre, 0.1, &k).unwrap();
        assert_relative_eq!(p, Vector3::new(0.0, 0.0, 9.0), epsilon = 1e-12);

        assert!(warp(&s, &kf, &Vector2::new(0.0, 0.0), &k).is_err());
    }

    #[test]
    fn vision_predict_identity_and_constant() {
        let k = intr();
        let kf_state = state([0.0, 0.0, 1.5], [0.0, 0.0, 0.3], 0.0);
        let p = kf_state.camera_to_world(&Vector3::new(0.4, 0.2, 8.0));
        let u = project(&k, &kf_state.world_to_camera(&p)).unwrap();
        let ref_intensity = WavyImage.intensity(&u).unwrap();
        let kf = Keyframe::new(kf_state, vec![u], vec![1.0 / 8.0], vec![ref_intensity]).unwrap();
        assert_relative_eq!(vision_predict(&kf_state, &p, &kf, &k, &WavyImage).unwrap(), ref_intensity, epsilon = 1e-9);

        let other = state([0.3, -0.1, 1.4], [0.02, 0.01, 0.25], 5.0);
        assert_eq!(vision_predict(&other, &p, &kf, &k, &ConstantImage(7.0)).unwrap(), 7.0);
        let (bx, bp) = vision_jacobians(&other, &p, &k, &ConstantImage(7.0)).unwrap();
        assert_eq!(bx, StateRow::zeros());
        assert_eq!(bp, RowVector3::zeros());
    }

    #[test]
    fn motion_predict_examples() {
        let s = state([1.0, 2.0, 3.0], [0.1, 0.2, 0.3], 4.0);
        let model = MotionModel::new(StateMatrix::identity(), PZonotope::point(nalgebra::DVector::zeros(7))).unwrap();
        assert_eq!(motion_predict(&model, &s), s);
        let mut f = StateMatrix::identity();
        f[(0, 6)] = 0.5;
        let m2 = MotionModel { transition: f, ..model };
        let twice = motion_predict(&m2, &motion_predict(&m2, &s));
        let once = NavState::from_vector(&(f * f * s.to_vector()));
        assert_relative_eq!(twice.to_vector(), once.to_vector(), epsilon = 1e-12);
    }

    fn central_fd<F: Fn(&StateVector) -> f64>(f: F, x: &StateVector, i: usize, h: f64) -> f64 {
        let mut up = *x;
        let mut dn = *x;
        up[i] += h;
        dn[i] -= h;
        (f(&up) - f(&dn)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn wrap_angle_range(a in -50.0f64..50.0) {
            let w = wrap_angle(a);
            prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
            prop_assert!(((a - w) / (2.0 * std::f64::consts::PI)).fract().abs() < 1e-9
                || (1.0 - ((a - w) / (2.0 * std::f64::consts::PI)).fract().abs()) < 1e-9);
        }

        #[test]
        fn projection_round_trip(u in -500.0f64..500.0, v in -500.0f64..500.0, d in 0.01f64..5.0) {
            let k = intr();
            let px = Vector2::new(u, v);
            let back = project(&k, &unproject(&k, &px, d).unwrap()).unwrap();
            prop_assert!((back - px).amax() < 1e-9);
        }

        #[test]
        fn gps_clock_shift_invariance(shift in -1e4f64..1e4, cb in -100.0f64..100.0) {
            let rx = state([10.0, -20.0, 5.0], [0.0; 3], cb);
            let sat = GpsSatellite::from_look_angles("S", &Vector3::zeros(), 40.0, 120.0, 2.2e7, 3.0).unwrap();
            let mut rx2 = rx;
            rx2.clock_bias += shift;
            let mut sat2 = sat.clone();
            sat2.clock_correction += shift;
            prop_assert!((gps_predict(&rx, &sat).unwrap() - gps_predict(&rx2, &sat2).unwrap()).abs() < 1e-6);
        }

        #[test]
        fn gps_jacobian_matches_finite_differences(
            px in -100.0f64..100.0, py in -100.0f64..100.0, el in 5.0f64..89.0, az in 0.0f64..359.0
        ) {
            let sat = GpsSatellite::from_look_angles("S", &Vector3::zeros(), el, az, 2.0e7, 0.0).unwrap();
            let x0 = state([px, py, 1.0], [0.0; 3], 3.0);
            let h = gps_jacobian(&x0, &sat).unwrap();
            // ranges of ~2e7 m cancel catastrophically in a plain difference,
            // so the central difference is evaluated as (|a|^2 - |b|^2) / (|a| + |b|)
            // with a - b formed from the small perturbations only
            let x = x0.to_vector();
            for i in 0..7 {
                let step = 1e-6;
                let mut up = x;
                let mut dn = x;
                up[i] += step;
                dn[i] -= step;
                let (su, sd) = (NavState::from_vector(&up), NavState::from_vector(&dn));
                let rel = sat.position - x0.position;
                let (du, dd) = (su.position - x0.position, sd.position - x0.position);
                let (a, b) = (rel - du, rel - dd);
                let num: f64 = (0..3).map(|j| (dd[j] - du[j]) * (2.0 * rel[j] - du[j] - dd[j])).sum();
                let range_diff = num / (a.norm() + b.norm());
                let fd = (range_diff + su.clock_bias - sd.clock_bias) / (2.0 * step);
                prop_assert!((fd - h[i]).abs() <= 1e-5 * h.norm(), "axis {i}: {fd} vs {}", h[i]);
            }
        }

        #[test]
        fn vision_jacobians_match_finite_differences(
            yaw in -3.0f64..3.0, roll in -0.2f64..0.2, pitch in -0.2f64..0.2,
            lx in -1.0f64..1.0, ly in -0.5f64..0.5, depth in 4.0f64..30.0
        ) {
            let k = intr();
            let x0 = state([2.0, -1.0, 1.5], [roll, pitch, yaw], 0.0);
            let p = x0.camera_to_world(&Vector3::new(lx * depth * 0.3, ly * depth * 0.3, depth));
            let (bx, bp) = vision_jacobians(&x0, &p, &k, &WavyImage).unwrap();
            let direct = |x: &NavState, p: &Vector3<f64>| {
                WavyImage.intensity(&project(&k, &x.world_to_camera(p)).unwrap()).unwrap()
            };
            for i in 0..7 {
                let h = if (3..6).contains(&i) { 1e-7 } else { 1e-6 };
                let fd = central_fd(|v| direct(&NavState::from_vector(v), &p), &x0.to_vector(), i, h);
                let tol = 1e-5 * bx.amax().max(1e-6);
                prop_assert!((fd - bx[i]).abs() <= tol.max(1e-4 * bx[i].abs()), "state axis {i}: {fd} vs {}", bx[i]);
            }
            for i in 0..3 {
                let mut up = p;
                let mut dn = p;
                up[i] += 1e-6;
                dn[i] -= 1e-6;
                let fd = (direct(&x0, &up) - direct(&x0, &dn)) / 2e-6;
                prop_assert!((fd - bp[i]).abs() <= 1e-5 * bp.amax().max(1e-6), "landmark axis {i}");
            }
        }
    }
}
