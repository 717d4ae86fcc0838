//! Camera and subject geometry shared by every stage of the pipeline, plus
//! the composite pose discrepancy used by the trajectory losses.
//!
//! Conventions: the world is right-handed with `+z` up. A camera orientation
//! is stored as `[yaw, pitch, roll]` in radians, each wrapped to `(-pi, pi]`.
//! Yaw is a heading measured clockwise when seen from above (a positive pan
//! turns the camera to its right), pitch is positive when the camera tilts
//! down and roll turns about the viewing axis. With all three at zero the
//! camera looks along `+x` with `+z` as its up vector.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Orthonormality tolerance for frames and box axes.
pub const FRAME_TOLERANCE: f64 = 1e-6;

/// Upper bound on the tangent argument of the angular term.
pub const TAN_ARG_MAX: f64 = std::f64::consts::FRAC_PI_2 - 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("field of view {0} rad outside (0, pi)")]
    FieldOfView(f64),
    #[error("{0} must be strictly positive")]
    NonPositive(&'static str),
    #[error("{0} is not orthonormal")]
    NotOrthonormal(&'static str),
    #[error("trajectory is empty")]
    Empty,
    #[error("frame rate must be positive, got {0}")]
    FrameRate(f64),
    #[error("invalid {0}")]
    Invalid(&'static str),
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * ((a - PI) / TAU).ceil();
    // ceil can land exactly on -pi through rounding
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Signed shortest angular step from `from` to `to`.
pub fn angle_delta(from: f64, to: f64) -> f64 {
    wrap_angle(to - from)
}

fn is_finite3(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn orthonormal(a: &[Vec3; 3]) -> bool {
    (0..3).all(|i| {
        (0..3).all(|j| {
            let want = if i == j { 1.0 } else { 0.0 };
            (a[i].dot(&a[j]) - want).abs() <= FRAME_TOLERANCE
        })
    })
}

/// One 6-DoF camera sample with a vertical field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vec3,
    /// `[yaw, pitch, roll]`, radians.
    pub rotation: [f64; 3],
    /// Vertical field of view, radians.
    pub fov: f64,
}

impl CameraPose {
    /// Builds a pose, wrapping every angle to `(-pi, pi]`.
    pub fn new(position: Vec3, rotation: [f64; 3], fov: f64) -> Result<Self, GeometryError> {
        let pose = CameraPose {
            position,
            rotation: rotation.map(wrap_angle),
            fov,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !is_finite3(&self.position) {
            return Err(GeometryError::NonFinite("camera position"));
        }
        if self.rotation.iter().any(|a| !a.is_finite()) {
            return Err(GeometryError::NonFinite("camera rotation"));
        }
        if !(self.fov > 0.0 && self.fov < PI) {
            return Err(GeometryError::FieldOfView(self.fov));
        }
        Ok(())
    }

    pub fn yaw(&self) -> f64 {
        self.rotation[0]
    }

    pub fn pitch(&self) -> f64 {
        self.rotation[1]
    }

    pub fn roll(&self) -> f64 {
        self.rotation[2]
    }

    /// World-from-camera rotation. Camera axes are forward `+x`, left `+y`, up `+z`.
    pub fn rotation_matrix(&self) -> Rotation3<f64> {
        orientation_matrix(self.yaw(), self.pitch(), self.roll())
    }

    pub fn forward(&self) -> Vec3 {
        self.rotation_matrix() * Vec3::x()
    }

    pub fn up(&self) -> Vec3 {
        self.rotation_matrix() * Vec3::z()
    }

    /// Camera-frame coordinates of a world point (forward, left, up).
    pub fn to_camera(&self, world: &Vec3) -> Vec3 {
        self.rotation_matrix().inverse() * (world - self.position)
    }

    /// Componentwise difference `self - other` on position and Euler angles.
    pub fn delta(&self, other: &CameraPose) -> PoseDelta {
        PoseDelta {
            position: self.position - other.position,
            angles: [
                self.rotation[0] - other.rotation[0],
                self.rotation[1] - other.rotation[1],
                self.rotation[2] - other.rotation[2],
            ],
        }
    }

    pub fn as_delta(&self) -> PoseDelta {
        PoseDelta {
            position: self.position,
            angles: self.rotation,
        }
    }
}

pub fn orientation_matrix(yaw: f64, pitch: f64, roll: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vec3::z_axis(), -yaw)
        * Rotation3::from_axis_angle(&Vec3::y_axis(), pitch)
        * Rotation3::from_axis_angle(&Vec3::x_axis(), roll)
}

/// Raw translation and Euler components, used for the difference poses of the
/// relative and speed losses. No wrapping or range invariants apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseDelta {
    pub position: Vec3,
    pub angles: [f64; 3],
}

impl PoseDelta {
    pub fn minus(&self, other: &PoseDelta) -> PoseDelta {
        PoseDelta {
            position: self.position - other.position,
            angles: [
                self.angles[0] - other.angles[0],
                self.angles[1] - other.angles[1],
                self.angles[2] - other.angles[2],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrajectory {
    pub frames: Vec<CameraPose>,
    pub frame_rate: f64,
}

impl CameraTrajectory {
    pub const DEFAULT_FRAME_RATE: f64 = 30.0;

    pub fn new(frames: Vec<CameraPose>, frame_rate: f64) -> Result<Self, GeometryError> {
        let t = CameraTrajectory { frames, frame_rate };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.frames.is_empty() {
            return Err(GeometryError::Empty);
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(GeometryError::FrameRate(self.frame_rate));
        }
        self.frames.iter().try_for_each(CameraPose::validate)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Volumetric subject sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectState {
    pub center: Vec3,
    /// `(width, length, height)` in meters.
    pub dims: Vec3,
    /// `[forward, right, up]`, with `right = forward x up`.
    pub facing: [Vec3; 3],
}

impl SubjectState {
    /// Upright subject facing along `heading` (radians, counter-clockwise from `+x`).
    pub fn upright(center: Vec3, dims: Vec3, heading: f64) -> Self {
        let forward = Vec3::new(heading.cos(), heading.sin(), 0.0);
        let up = Vec3::z();
        SubjectState {
            center,
            dims,
            facing: [forward, forward.cross(&up), up],
        }
    }

    pub fn forward(&self) -> Vec3 {
        self.facing[0]
    }

    pub fn right(&self) -> Vec3 {
        self.facing[1]
    }

    pub fn up(&self) -> Vec3 {
        self.facing[2]
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !is_finite3(&self.center) || !is_finite3(&self.dims) {
            return Err(GeometryError::NonFinite("subject state"));
        }
        if self.dims.iter().any(|d| *d <= 0.0) {
            return Err(GeometryError::NonPositive("subject dimensions"));
        }
        if !orthonormal(&self.facing) {
            return Err(GeometryError::NotOrthonormal("subject facing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTrajectory {
    pub frames: Vec<SubjectState>,
}

impl SubjectTrajectory {
    pub fn new(frames: Vec<SubjectState>) -> Result<Self, GeometryError> {
        if frames.is_empty() {
            return Err(GeometryError::Empty);
        }
        frames.iter().try_for_each(SubjectState::validate)?;
        Ok(SubjectTrajectory { frames })
    }

    pub fn stationary(state: SubjectState, frames: usize) -> Self {
        SubjectTrajectory {
            frames: vec![state; frames],
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// True when every frame equals the first.
    pub fn is_static(&self) -> bool {
        self.frames.windows(2).all(|w| w[0] == w[1])
    }

    pub fn first(&self) -> &SubjectState {
        &self.frames[0]
    }

    pub fn last(&self) -> &SubjectState {
        &self.frames[self.frames.len() - 1]
    }
}

/// Oriented box. Serves both the attention box and the volume box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub axes: [Vec3; 3],
}

impl BoundingBox {
    pub fn new(center: Vec3, half_extents: Vec3, axes: [Vec3; 3]) -> Result<Self, GeometryError> {
        let b = BoundingBox {
            center,
            half_extents,
            axes,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !is_finite3(&self.center) || !is_finite3(&self.half_extents) {
            return Err(GeometryError::NonFinite("bounding box"));
        }
        if self.half_extents.iter().any(|h| *h <= 0.0) {
            return Err(GeometryError::NonPositive("box half extents"));
        }
        if !orthonormal(&self.axes) {
            return Err(GeometryError::NotOrthonormal("box axes"));
        }
        Ok(())
    }

    /// Interprets `self` in the subject's local frame (forward, right, up) and
    /// returns the world-space box for that subject sample.
    pub fn placed(&self, subject: &SubjectState) -> BoundingBox {
        let to_world = |v: &Vec3| subject.facing[0] * v.x + subject.facing[1] * v.y + subject.facing[2] * v.z;
        BoundingBox {
            center: subject.center + to_world(&self.center),
            half_extents: self.half_extents,
            axes: self.axes.map(|a| to_world(&a)),
        }
    }

    /// Full extent along the box's third (up) axis.
    pub fn vertical_extent(&self) -> f64 {
        2.0 * self.half_extents.z
    }
}

/// Local-frame volume and attention boxes derived from subject dimensions:
/// the volume box wraps the whole subject and the attention box covers the
/// top of it (a head for a standing person).
pub fn default_boxes(dims: &Vec3) -> (BoundingBox, BoundingBox) {
    let (width, length, height) = (dims.x, dims.y, dims.z);
    let axes = [Vec3::x(), Vec3::y(), Vec3::z()];
    let vbox = BoundingBox {
        center: Vec3::zeros(),
        half_extents: Vec3::new(length / 2.0, width / 2.0, height / 2.0),
        axes,
    };
    let head = 0.075 * height;
    let abox = BoundingBox {
        center: Vec3::new(0.0, 0.0, height / 2.0 - head),
        half_extents: Vec3::new(0.5 * length / 2.0, 0.4 * width / 2.0, head),
        axes,
    };
    (abox, vbox)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyParams {
    pub epsilon: f64,
    /// Subtract the zero-error baseline so identical poses score 0.
    pub normalized: bool,
}

impl Default for DiscrepancyParams {
    fn default() -> Self {
        DiscrepancyParams {
            epsilon: 1.0,
            normalized: true,
        }
    }
}

impl DiscrepancyParams {
    pub fn verbatim(epsilon: f64) -> Self {
        DiscrepancyParams {
            epsilon,
            normalized: false,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.epsilon > 0.0 && self.epsilon.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::NonPositive("epsilon"))
        }
    }

    /// Value of the angular sum at zero error, `3 tan(pi / (4 + epsilon))`.
    pub fn baseline(&self) -> f64 {
        3.0 * (PI / (4.0 + self.epsilon)).tan()
    }
}

/// Unit vector obtained by rotating the reference vector of Euler component
/// `axis` (1, 2 or 3) by `theta` about that component's axis. Two such vectors
/// for the same axis have inner product `cos(a - b)`.
pub fn angle_direction(theta: f64, axis: usize) -> Vec3 {
    let (s, c) = theta.sin_cos();
    match axis {
        1 => Vec3::new(0.0, c, s),
        2 => Vec3::new(s, 0.0, c),
        3 => Vec3::new(c, s, 0.0),
        _ => panic!("Euler axis index must be 1, 2 or 3, got {axis}"),
    }
}

/// Argument of the angular tangent, clamped to `[0, TAN_ARG_MAX]`. The gap
/// `1 - <n(theta_hat), n(theta)>` is evaluated as `2 sin^2(d / 2)`, which is
/// exactly zero for equal angles.
pub fn angular_argument(theta_hat: f64, theta: f64, epsilon: f64, axis: usize) -> f64 {
    assert!((1..=3).contains(&axis), "Euler axis index must be 1, 2 or 3, got {axis}");
    let half = ((theta_hat - theta) / 2.0).sin();
    (PI / (4.0 + epsilon) + 2.0 * half * half).clamp(0.0, TAN_ARG_MAX)
}

/// Angular error of one Euler component mapped through the tangent.
pub fn angular_term(theta_hat: f64, theta: f64, epsilon: f64) -> f64 {
    angular_term_axis(theta_hat, theta, epsilon, 3)
}

fn angular_term_axis(theta_hat: f64, theta: f64, epsilon: f64, axis: usize) -> f64 {
    angular_argument(theta_hat, theta, epsilon, axis).tan()
}

/// Discrepancy between two raw 6-DoF samples: Euclidean distance between the
/// translations plus the three tangent-mapped angular terms.
pub fn delta_discrepancy(a: &PoseDelta, b: &PoseDelta, params: &DiscrepancyParams) -> f64 {
    let translation = (a.position - b.position).norm();
    let angular: f64 = (0..3)
        .map(|j| angular_term_axis(b.angles[j], a.angles[j], params.epsilon, j + 1))
        .sum();
    if params.normalized {
        translation + angular - params.baseline()
    } else {
        translation + angular
    }
}

/// Composite discrepancy between a reference pose `c` and an estimate `c_hat`.
pub fn pose_discrepancy(c: &CameraPose, c_hat: &CameraPose, params: &DiscrepancyParams) -> f64 {
    delta_discrepancy(&c.as_delta(), &c_hat.as_delta(), params)
}
