//! Lowers a description plus a subject trajectory into a [`SimInstruction`].
//!
//! Each endpoint goes through two stages. Macro alignment places the camera
//! on a sphere around the region of interest: elevation picks the polar
//! angle, side picks the azimuth relative to the subject's facing, and the
//! radius is the pinhole distance at which the ROI's vertical extent fills
//! the frame. Micro alignment then moves the ROI center onto a
//! rule-of-thirds cell, preferring a rotation and falling back to a small
//! translation, and refits the field of view so the ROI keeps its span.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::Config;
use crate::pose::{BoundingBox, CameraPose, GeometryError, SubjectState, SubjectTrajectory, Vec3, FRAME_TOLERANCE};
use crate::scl::{CameraAngleSpec, EasingKind, EndpointSpec, FramingCell, MovementKind, ScdRecord, ShotType, Side, Violation};
use crate::view::{aim_along, forward_angle, look_at, project, ray_for_ndc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("attention and volume boxes do not share axes")]
    AxesMismatch,
    #[error("region of interest has no vertical extent")]
    DegenerateRoi,
    #[error("region of interest is behind the camera")]
    RoiBehindCamera,
    #[error("framing unreachable, residual {residual:.4} NDC")]
    Unreachable { residual: f64 },
    #[error("invalid description: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidScd(Vec<Violation>),
    #[error("subject trajectory is empty")]
    EmptySubject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotParams {
    /// Blend from attention box (0) to volume box (1).
    pub interp_factor: f64,
    pub scale: f64,
}

pub fn shot_params(shot: ShotType) -> ShotParams {
    let (interp_factor, scale) = match shot {
        ShotType::Ecu => (0.0, 0.5),
        ShotType::Cu => (0.0, 1.0),
        ShotType::Mcu => (0.25, 1.0),
        ShotType::Ms => (0.50, 1.0),
        ShotType::Fs => (1.0, 1.0),
        ShotType::Ls => (1.0, 1.5),
        ShotType::Vls => (1.0, 2.0),
        ShotType::Els => (1.0, 3.0),
    };
    ShotParams { interp_factor, scale }
}

pub type RoiBox = BoundingBox;

/// Blends the attention and volume boxes by the shot's factor, then scales
/// the half extents.
pub fn roi_from_boxes(abox: &BoundingBox, vbox: &BoundingBox, params: ShotParams) -> Result<RoiBox, CompileError> {
    let shared = abox
        .axes
        .iter()
        .zip(&vbox.axes)
        .all(|(a, b)| (a - b).norm() <= FRAME_TOLERANCE);
    if !shared {
        return Err(CompileError::AxesMismatch);
    }
    let f = params.interp_factor;
    let roi = BoundingBox {
        center: abox.center * (1.0 - f) + vbox.center * f,
        half_extents: (abox.half_extents * (1.0 - f) + vbox.half_extents * f) * params.scale,
        axes: abox.axes,
    };
    roi.validate()?;
    Ok(roi)
}

/// Unit direction from the ROI center to the camera for a given angle spec.
pub fn placement_direction(angle: &CameraAngleSpec, subject: &SubjectState, cfg: &Config) -> Vec3 {
    let polar = cfg.elevation_polar_deg.polar_degrees(angle.elevation).to_radians();
    let azimuth = (angle.side.index() as f64 * cfg.side_step_deg).to_radians();
    let left = -subject.right();
    let horizontal = subject.forward() * azimuth.cos() + left * azimuth.sin();
    horizontal * polar.sin() + subject.up() * polar.cos()
}

/// Pinhole distance at which the ROI's vertical extent spans the image height.
pub fn fit_distance(roi: &RoiBox, fov: f64) -> Result<f64, CompileError> {
    let half = roi.vertical_extent() / 2.0;
    if !(half > 0.0 && half.is_finite()) {
        return Err(CompileError::DegenerateRoi);
    }
    if !(fov > 0.0 && fov < std::f64::consts::PI) {
        return Err(GeometryError::FieldOfView(fov).into());
    }
    Ok(half / (fov / 2.0).tan())
}

pub fn macro_align(
    angle: &CameraAngleSpec,
    roi: &RoiBox,
    subject: &SubjectState,
    fov: f64,
    cfg: &Config,
) -> Result<CameraPose, CompileError> {
    let r = fit_distance(roi, fov)?;
    let position = roi.center + placement_direction(angle, subject, cfg) * r;
    let rotation = look_at(&position, &roi.center).ok_or(CompileError::DegenerateRoi)?;
    Ok(CameraPose::new(position, rotation, fov)?)
}

/// Vertical NDC span between the top and bottom of the ROI's up axis.
pub fn projected_span(pose: &CameraPose, roi: &RoiBox, aspect: f64) -> Result<f64, CompileError> {
    let h = roi.axes[2] * roi.half_extents.z;
    let top = project(pose, &(roi.center + h), aspect).ok_or(CompileError::RoiBehindCamera)?;
    let bottom = project(pose, &(roi.center - h), aspect).ok_or(CompileError::RoiBehindCamera)?;
    Ok((top.1 - bottom.1).abs())
}

fn framing_residual(pose: &CameraPose, roi: &RoiBox, cell: FramingCell, aspect: f64) -> f64 {
    let (u, v) = cell.ndc();
    match project(pose, &roi.center, aspect) {
        Some((pu, pv)) => (pu - u).hypot(pv - v),
        None => f64::INFINITY,
    }
}

/// Moves the projected ROI center onto `cell`. Rotates first; if that needs
/// more than the orientation budget, translates the camera along the shortest
/// path that puts the ROI center on the cell's ray instead. Finally refits
/// the fov so the ROI's projected span matches that of the input pose.
pub fn micro_align(pose: &CameraPose, roi: &RoiBox, cell: FramingCell, cfg: &Config) -> Result<CameraPose, CompileError> {
    let aspect = cfg.aspect;
    if pose.to_camera(&roi.center).x <= 0.0 {
        return Err(CompileError::RoiBehindCamera);
    }
    let span_target = projected_span(pose, roi, aspect)?;
    if span_target <= 1e-12 {
        return Err(CompileError::DegenerateRoi);
    }
    let (u, v) = cell.ndc();
    let budget = cfg.orientation_budget_deg.to_radians();

    let rotated = |fov: f64| -> Option<CameraPose> {
        let mut p = aim_along(pose, &roi.center, &ray_for_ndc(u, v, fov, aspect))?;
        p.fov = fov;
        Some(p)
    };
    let translated = |fov: f64| -> Option<CameraPose> {
        let ray = pose.rotation_matrix() * ray_for_ndc(u, v, fov, aspect);
        let depth = (roi.center - pose.position).dot(&ray);
        (depth > 0.0).then(|| CameraPose {
            position: roi.center - ray * depth,
            fov,
            ..*pose
        })
    };
    let use_rotation = rotated(pose.fov).is_some_and(|p| forward_angle(&p, pose) <= budget);
    let solve = |fov: f64| if use_rotation { rotated(fov) } else { translated(fov) };

    let mut fov = pose.fov;
    let mut current = solve(fov).ok_or(CompileError::Unreachable {
        residual: framing_residual(pose, roi, cell, aspect),
    })?;
    for _ in 0..64 {
        let span = projected_span(&current, roi, aspect)?;
        let next = 2.0 * ((fov / 2.0).tan() * span / span_target).atan();
        if !(next > 0.0 && next < std::f64::consts::PI) {
            return Err(GeometryError::FieldOfView(next).into());
        }
        let converged = (next - fov).abs() <= 1e-15 * fov.max(1.0);
        fov = next;
        current = solve(fov).ok_or(CompileError::Unreachable {
            residual: framing_residual(&current, roi, cell, aspect),
        })?;
        if converged {
            break;
        }
    }
    current.validate()?;
    let residual = framing_residual(&current, roi, cell, aspect);
    let span = projected_span(&current, roi, aspect)?;
    if residual > cfg.ndc_tolerance || (span / span_target - 1.0).abs() > cfg.span_tolerance {
        return Err(CompileError::Unreachable { residual });
    }
    Ok(current)
}

/// Full macro + micro alignment of one endpoint against one subject sample.
/// `abox` and `vbox` are given in the subject's local frame.
pub fn align_endpoint(
    endpoint: &EndpointSpec,
    subject: &SubjectState,
    abox: &BoundingBox,
    vbox: &BoundingBox,
    cfg: &Config,
) -> Result<CameraPose, CompileError> {
    let roi = roi_from_boxes(&abox.placed(subject), &vbox.placed(subject), shot_params(endpoint.shot))?;
    let coarse = macro_align(&endpoint.angle, &roi, subject, cfg.default_fov(), cfg)?;
    micro_align(&coarse, &roi, endpoint.framing, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub static_location: bool,
    pub static_distance: bool,
    /// Orbit radius about the subject center, meters.
    pub target_radius: Option<f64>,
    pub visibility_throughout: bool,
    /// Meters per frame squared.
    pub max_acceleration: Option<f64>,
    /// Point the camera tracks, in the subject's local (forward, right, up)
    /// frame; zero is the subject center.
    pub focus_offset: Vec3,
}

impl ConstraintSet {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.static_location && self.static_distance {
            return Err(GeometryError::Invalid("constraint set: static location and static distance are exclusive"));
        }
        if let Some(a) = self.max_acceleration {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(GeometryError::Invalid("max acceleration"));
            }
        }
        if self.focus_offset.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NonFinite("focus offset"));
        }
        Ok(())
    }
}

pub fn constraints_for_movement(kind: MovementKind, a_max: f64) -> ConstraintSet {
    let mut set = ConstraintSet {
        static_location: false,
        static_distance: false,
        target_radius: None,
        visibility_throughout: false,
        max_acceleration: Some(a_max),
        focus_offset: Vec3::zeros(),
    };
    match kind {
        MovementKind::Static => {}
        MovementKind::Pan | MovementKind::Tilt => set.static_location = true,
        MovementKind::Orbit => {
            set.static_distance = true;
            set.visibility_throughout = true;
        }
        MovementKind::Track | MovementKind::PushIn | MovementKind::PullOut | MovementKind::Crane => {
            set.visibility_throughout = true;
        }
    }
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interpolation {
    Linear,
    SubjectAware,
}

impl Interpolation {
    pub fn token(self) -> &'static str {
        match self {
            Interpolation::Linear => "linear",
            Interpolation::SubjectAware => "subject_aware",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(Interpolation::Linear),
            "subject_aware" => Some(Interpolation::SubjectAware),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimInstruction {
    pub start_pose: CameraPose,
    pub end_pose: CameraPose,
    pub interpolation: Interpolation,
    pub alpha: f64,
    pub easing: EasingKind,
    pub constraints: ConstraintSet,
    pub frames: u32,
}

impl SimInstruction {
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.start_pose.validate()?;
        self.end_pose.validate()?;
        self.constraints.validate()?;
        if self.frames == 0 || (self.frames < 2 && self.start_pose != self.end_pose) {
            return Err(GeometryError::Invalid("instruction frame count"));
        }
        if !self.alpha.is_finite() {
            return Err(GeometryError::NonFinite("alpha"));
        }
        Ok(())
    }
}

/// Everything [`compile`] needs besides the description and subject.
#[derive(Debug, Clone, Copy)]
pub struct CompileInputs<'a> {
    pub abox: &'a BoundingBox,
    pub vbox: &'a BoundingBox,
    pub config: &'a Config,
    pub seed: u64,
}

/// Picks an end endpoint for a description that leaves it open: shot within
/// one table row and side within two sectors of the start, drawn uniformly
/// among the choices that match the movement.
pub fn random_end(init: &EndpointSpec, kind: MovementKind, rng: &mut ChaCha8Rng) -> EndpointSpec {
    let shot_row = init.shot.index() as i32;
    let shots: Vec<ShotType> = match kind {
        MovementKind::Static | MovementKind::Orbit | MovementKind::Pan | MovementKind::Tilt => vec![init.shot],
        MovementKind::PushIn => vec![ShotType::from_index(shot_row.saturating_sub(1) as usize).unwrap_or(init.shot)],
        MovementKind::PullOut => vec![ShotType::from_index(shot_row as usize + 1).unwrap_or(init.shot)],
        MovementKind::Track | MovementKind::Crane => (-1..=1)
            .filter_map(|d| usize::try_from(shot_row + d).ok().and_then(ShotType::from_index))
            .collect(),
    };
    let sides: Vec<Side> = match kind {
        MovementKind::Static | MovementKind::PushIn | MovementKind::PullOut => vec![init.angle.side],
        MovementKind::Orbit => [-2, -1, 1, 2].iter().map(|d| init.angle.side.rotated(*d)).collect(),
        _ => (-2..=2).map(|d| init.angle.side.rotated(d)).collect(),
    };
    let elevations = match kind {
        MovementKind::Crane | MovementKind::Tilt => {
            let e = init.angle.elevation.index() as i32;
            (-1..=1)
                .filter_map(|d| usize::try_from(e + d).ok())
                .filter_map(|i| crate::scl::Elevation::ALL.get(i).copied())
                .collect()
        }
        _ => vec![init.angle.elevation],
    };
    let framings: Vec<FramingCell> = match kind {
        MovementKind::Pan | MovementKind::Tilt | MovementKind::Track => FramingCell::ALL.to_vec(),
        _ => vec![init.framing],
    };
    let mut candidates = Vec::new();
    for &shot in &shots {
        for &side in &sides {
            for &elevation in &elevations {
                for &framing in &framings {
                    let e = EndpointSpec {
                        shot,
                        angle: CameraAngleSpec { elevation, side },
                        framing,
                    };
                    if e != *init || kind == MovementKind::Static {
                        candidates.push(e);
                    }
                }
            }
        }
    }
    candidates.choose(rng).copied().unwrap_or(*init)
}

pub fn compile(scd: &ScdRecord, subject: &SubjectTrajectory, inputs: CompileInputs<'_>) -> Result<SimInstruction, CompileError> {
    let violations = crate::scl::validate_scd(scd);
    if !violations.is_empty() {
        return Err(CompileError::InvalidScd(violations));
    }
    if subject.is_empty() {
        return Err(CompileError::EmptySubject);
    }
    let cfg = inputs.config;
    inputs.abox.validate()?;
    inputs.vbox.validate()?;
    let kind = scd.movement.kind;

    let start_pose = align_endpoint(&scd.init, subject.first(), inputs.abox, inputs.vbox, cfg)?;
    let end_pose = if kind == MovementKind::Static {
        start_pose
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(inputs.seed);
        let end = scd.end.unwrap_or_else(|| random_end(&scd.init, kind, &mut rng));
        align_endpoint(&end, subject.last(), inputs.abox, inputs.vbox, cfg)?
    };

    let first = subject.first();
    let roi = roi_from_boxes(&inputs.abox.placed(first), &inputs.vbox.placed(first), shot_params(scd.init.shot))?;
    let offset = roi.center - first.center;
    let mut constraints = constraints_for_movement(kind, cfg.a_max);
    constraints.focus_offset = Vec3::new(offset.dot(&first.forward()), offset.dot(&first.right()), offset.dot(&first.up()));
    if constraints.static_distance {
        constraints.target_radius = Some((start_pose.position - roi.center).norm());
    }
    let interpolation = match kind {
        MovementKind::Orbit | MovementKind::Track => Interpolation::SubjectAware,
        _ => Interpolation::Linear,
    };
    let instr = SimInstruction {
        start_pose,
        end_pose,
        interpolation,
        alpha: cfg.alpha,
        easing: scd.movement.easing,
        constraints,
        frames: scd.movement.duration_frames,
    };
    instr.validate()?;
    Ok(instr)
}
