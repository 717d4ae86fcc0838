//! Turns a [`SimInstruction`] into a camera trajectory: eased interpolation
//! between the endpoint poses, then constraint projection passes. Also hosts
//! the parametric subject-motion generators used for the dynamic subset.

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::compiler::{ConstraintSet, Interpolation, SimInstruction};
use crate::config::Config;
use crate::pose::{angle_delta, wrap_angle, CameraPose, CameraTrajectory, GeometryError, SubjectState, SubjectTrajectory, Vec3};
use crate::scl::EasingKind;
use crate::view::{aim_along, project, ray_for_ndc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("easing parameter {0} outside [0, 1]")]
    EaseDomain(f64),
    #[error("subject has {got} frames, instruction needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("constraint pass {pass} infeasible, residual {residual:.3e}")]
    Infeasible { pass: &'static str, residual: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid motion model: {0}")]
    InvalidModel(&'static str),
}

/// Cubic easing curves; all map 0 to 0 and 1 to 1 and are monotone.
pub fn ease(t: f64, kind: EasingKind) -> Result<f64, SimError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SimError::EaseDomain(t));
    }
    Ok(match kind {
        EasingKind::Linear => t,
        EasingKind::EaseIn => t * t * t,
        EasingKind::EaseOut => 1.0 - (1.0 - t).powi(3),
        EasingKind::EaseInOut => {
            if t < 0.5 {
                4.0 * t * t * t
            } else {
                1.0 - (2.0 - 2.0 * t).powi(3) / 2.0
            }
        }
    })
}

fn blend_angles(a: &[f64; 3], b: &[f64; 3], t: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = wrap_angle(a[i] + t * angle_delta(a[i], b[i]));
    }
    out
}

/// Affine blend of position and fov; each Euler component follows its
/// shortest angular path. Endpoints are returned exactly.
pub fn linear_interp(p0: &CameraPose, p1: &CameraPose, t: f64) -> CameraPose {
    if t == 0.0 {
        return *p0;
    }
    if t == 1.0 {
        return *p1;
    }
    CameraPose {
        position: p0.position + (p1.position - p0.position) * t,
        rotation: blend_angles(&p0.rotation, &p1.rotation, t),
        fov: p0.fov + (p1.fov - p0.fov) * t,
    }
}

/// Position of the subject-aware path:
/// `P0 + t (P1 - P0) + alpha (1 - t) t (d0 - d1)` with `d0 = C0 - P0` and
/// `d1 = C1 - P1`.
pub fn subject_aware_position(p0: &Vec3, p1: &Vec3, subject_start: &Vec3, subject_end: &Vec3, alpha: f64, t: f64) -> Vec3 {
    let d0 = subject_start - p0;
    let d1 = subject_end - p1;
    p0 + (p1 - p0) * t + (d0 - d1) * (alpha * (1.0 - t) * t)
}

fn subject_aware_at(
    p0: &CameraPose,
    p1: &CameraPose,
    subject_start: &Vec3,
    subject_end: &Vec3,
    alpha: f64,
    t: f64,
    aim: &Vec3,
) -> CameraPose {
    if t == 0.0 {
        return *p0;
    }
    if t == 1.0 {
        return *p1;
    }
    let blended = linear_interp(p0, p1, t);
    let pose = CameraPose {
        position: subject_aware_position(&p0.position, &p1.position, subject_start, subject_end, alpha, t),
        ..blended
    };
    // keep the subject where the endpoints frame it, blending between them
    let r0 = p0.to_camera(subject_start).try_normalize(0.0);
    let r1 = p1.to_camera(subject_end).try_normalize(0.0);
    let ray = match (r0, r1) {
        (Some(a), Some(b)) => (a * (1.0 - t) + b * t).try_normalize(1e-12),
        _ => None,
    };
    ray.and_then(|r| aim_along(&pose, aim, &r)).unwrap_or(pose)
}

/// Subject-aware interpolation with the camera re-aimed at the subject's
/// interpolated position.
pub fn subject_aware_interp(
    p0: &CameraPose,
    p1: &CameraPose,
    subject_start: &Vec3,
    subject_end: &Vec3,
    alpha: f64,
    t: f64,
) -> CameraPose {
    let aim = subject_start + (subject_end - subject_start) * t;
    subject_aware_at(p0, p1, subject_start, subject_end, alpha, t, &aim)
}

/// One constraint flag, as applied by [`enforce_constraint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    StaticLocation,
    StaticDistance,
    Visibility,
    MaxAcceleration(f64),
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::StaticLocation => "static_location",
            Constraint::StaticDistance => "static_distance",
            Constraint::Visibility => "visibility",
            Constraint::MaxAcceleration(_) => "max_acceleration",
        }
    }
}

/// World position of a subject-local offset (forward, right, up) on one
/// subject sample.
pub fn focus_point(s: &SubjectState, offset: &Vec3) -> Vec3 {
    s.center + s.facing[0] * offset.x + s.facing[1] * offset.y + s.facing[2] * offset.z
}

/// Per-frame focus points of a subject trajectory.
pub fn focus_track(subject: &SubjectTrajectory, offset: &Vec3) -> Vec<Vec3> {
    subject.frames.iter().map(|s| focus_point(s, offset)).collect()
}

fn check_lengths(traj: &CameraTrajectory, focus: &[Vec3]) -> Result<(), SimError> {
    if traj.len() != focus.len() {
        return Err(SimError::LengthMismatch {
            expected: traj.len(),
            got: focus.len(),
        });
    }
    Ok(())
}

/// Moves a pose to `position` and turns it so `target` keeps the camera-frame
/// direction it had before the move.
fn reaim(pose: &CameraPose, position: Vec3, target: &Vec3) -> CameraPose {
    let moved = CameraPose { position, ..*pose };
    if moved.position == pose.position {
        return moved;
    }
    match pose.to_camera(target).try_normalize(1e-12) {
        Some(ray) => aim_along(&moved, target, &ray).unwrap_or(moved),
        None => moved,
    }
}

fn second_differences(positions: &[Vec3]) -> impl Iterator<Item = f64> + '_ {
    positions.windows(3).map(|w| (w[0] - w[1] * 2.0 + w[2]).norm())
}

/// Largest second difference of the positions, meters per frame squared.
pub fn max_acceleration(traj: &CameraTrajectory) -> f64 {
    let positions: Vec<Vec3> = traj.frames.iter().map(|p| p.position).collect();
    second_differences(&positions).fold(0.0, f64::max)
}

/// Fraction of the limit the acceleration projection aims for, leaving
/// slack for the sphere projection that may follow it.
const ACCEL_SHRINK: f64 = 0.98;
const ACCEL_SLACK: f64 = 1e-12;
/// Over-relaxation of each ball projection.
const RELAX: f64 = 1.8;

/// Sphere of a fixed radius around each frame's focus point.
struct Shell<'a> {
    centers: &'a [Vec3],
    radius: f64,
}

impl Shell<'_> {
    fn project(&self, positions: &mut [Vec3]) {
        for (p, c) in positions.iter_mut().zip(self.centers).skip(1) {
            if let Some(dir) = (*p - c).try_normalize(1e-12) {
                *p = c + dir * self.radius;
            }
        }
    }
}

/// Cyclic projection onto the per-frame second-difference balls, and onto
/// the shell when given. Frame 0 is pinned. `None` when the sweep budget
/// runs out.
fn project_acceleration(positions: &mut [Vec3], a_max: f64, max_sweeps: usize, shell: Option<&Shell<'_>>) -> Option<usize> {
    let n = positions.len();
    if n < 3 {
        return Some(0);
    }
    let bound = a_max * ACCEL_SHRINK;
    let ok = |p: &[Vec3]| second_differences(p).all(|a| a <= a_max + ACCEL_SLACK);
    for sweep in 0..max_sweeps {
        if ok(positions) {
            return Some(sweep);
        }
        let order: Box<dyn Iterator<Item = usize>> = if sweep % 2 == 0 {
            Box::new(1..n - 1)
        } else {
            Box::new((1..n - 1).rev())
        };
        for i in order {
            let acc = positions[i - 1] - positions[i] * 2.0 + positions[i + 1];
            let norm = acc.norm();
            if norm <= bound {
                continue;
            }
            let excess = acc * (RELAX * (1.0 - bound / norm));
            let w_prev = if i - 1 == 0 { 0.0 } else { 1.0 };
            let w_sq = w_prev + 4.0 + 1.0;
            positions[i - 1] -= excess * (w_prev / w_sq);
            positions[i] += excess * (2.0 / w_sq);
            positions[i + 1] -= excess * (1.0 / w_sq);
        }
        if let Some(shell) = shell {
            shell.project(positions);
        }
    }
    ok(positions).then_some(max_sweeps)
}

fn smooth(traj: &CameraTrajectory, focus: &[Vec3], a_max: f64, shell: Option<&Shell<'_>>, cfg: &Config) -> Result<CameraTrajectory, SimError> {
    let mut positions: Vec<Vec3> = traj.frames.iter().map(|p| p.position).collect();
    if project_acceleration(&mut positions, a_max, cfg.accel_iterations, shell).is_none() {
        return Err(SimError::Infeasible {
            pass: "max_acceleration",
            residual: second_differences(&positions).fold(0.0, f64::max) - a_max,
        });
    }
    let mut out = traj.clone();
    for ((pose, p), c) in out.frames.iter_mut().zip(positions).zip(focus) {
        *pose = reaim(pose, p, c);
    }
    Ok(out)
}

/// Turns `pose` so that `target` projects to `(u, v)`, falling back to more
/// central image positions when the orientation solver has no solution
/// there.
fn turn_toward(pose: &CameraPose, target: &Vec3, u: f64, v: f64, aspect: f64) -> Option<CameraPose> {
    [(u, v), (0.0, v), (u, 0.0), (0.0, 0.0)]
        .into_iter()
        .find_map(|(u, v)| aim_along(pose, target, &ray_for_ndc(u, v, pose.fov, aspect)))
}

/// Applies one constraint to a trajectory. `focus` holds the per-frame point
/// the camera tracks (see [`focus_track`]).
///
/// * static location: every position becomes frame 0's; orientations are
///   re-aimed so the focus point keeps its place in frame.
/// * static distance: positions are pushed radially onto the sphere of the
///   frame-0 radius around each frame's focus point.
/// * visibility: frames whose focus point falls outside the frustum are
///   turned just enough to bring it inside the configured NDC margin.
/// * max acceleration: second differences are clamped by cyclic projection,
///   frame 0 pinned; errors when the sweep budget runs out.
pub fn enforce_constraint(
    traj: &CameraTrajectory,
    focus: &[Vec3],
    constraint: Constraint,
    cfg: &Config,
) -> Result<CameraTrajectory, SimError> {
    check_lengths(traj, focus)?;
    let mut out = traj.clone();
    match constraint {
        Constraint::StaticLocation => {
            let anchor = traj.frames[0].position;
            for (pose, c) in out.frames.iter_mut().zip(focus) {
                *pose = reaim(pose, anchor, c);
            }
        }
        Constraint::StaticDistance => {
            let fallback = traj.frames[0].position - focus[0];
            let radius = fallback.norm();
            let fallback = fallback.try_normalize(0.0).unwrap_or_else(Vec3::x);
            for (pose, c) in out.frames.iter_mut().zip(focus).skip(1) {
                let dir = (pose.position - c).try_normalize(1e-12).unwrap_or(fallback);
                let target = c + dir * radius;
                if (target - pose.position).norm() > 0.0 {
                    *pose = reaim(pose, target, c);
                }
            }
        }
        Constraint::Visibility => {
            let m = cfg.visibility_margin;
            for (pose, c) in out.frames.iter_mut().zip(focus) {
                if in_frustum(pose, c, cfg.aspect) {
                    continue;
                }
                let q = pose.to_camera(c);
                let t = (pose.fov / 2.0).tan();
                let (u, v) = if q.x > 0.0 {
                    let (u, v) = (-q.y / (q.x * t * cfg.aspect), q.z / (q.x * t));
                    (u.clamp(-m, m), v.clamp(-m, m))
                } else {
                    let (du, dv) = (-q.y / cfg.aspect, q.z);
                    let scale = du.abs().max(dv.abs());
                    if scale > 0.0 {
                        (m * du / scale, m * dv / scale)
                    } else {
                        (0.0, 0.0)
                    }
                };
                if let Some(turned) = turn_toward(pose, c, u, v, cfg.aspect) {
                    *pose = turned;
                }
            }
        }
        Constraint::MaxAcceleration(a_max) => return smooth(traj, focus, a_max, None, cfg),
    }
    Ok(out)
}

/// True when the point lies in front of the camera within the image bounds.
pub fn in_frustum(pose: &CameraPose, point: &Vec3, aspect: f64) -> bool {
    project(pose, point, aspect).is_some_and(|(u, v)| u.abs() <= 1.0 && v.abs() <= 1.0)
}

fn geometric_passes(
    mut traj: CameraTrajectory,
    focus: &[Vec3],
    set: &ConstraintSet,
    cfg: &Config,
) -> Result<CameraTrajectory, SimError> {
    if set.static_location {
        traj = enforce_constraint(&traj, focus, Constraint::StaticLocation, cfg)?;
    }
    if set.static_distance {
        traj = enforce_constraint(&traj, focus, Constraint::StaticDistance, cfg)?;
    }
    Ok(traj)
}

/// Unconstrained interpolated path, frame `i` at `t = ease(i / (frames - 1))`.
/// The subject-aware path uses the instruction's focus point as the subject
/// position.
pub fn interpolate(instr: &SimInstruction, subject: &SubjectTrajectory, frame_rate: f64) -> Result<CameraTrajectory, SimError> {
    interpolate_partial(instr, subject, frame_rate, 1.0)
}

/// Like [`interpolate`], but covering only the fraction `progress` of the
/// motion: frame `i` sits at `t = progress * ease(i / (frames - 1))`.
pub fn interpolate_partial(
    instr: &SimInstruction,
    subject: &SubjectTrajectory,
    frame_rate: f64,
    progress: f64,
) -> Result<CameraTrajectory, SimError> {
    let n = instr.frames as usize;
    if subject.len() != n {
        return Err(SimError::LengthMismatch {
            expected: n,
            got: subject.len(),
        });
    }
    let focus = focus_track(subject, &instr.constraints.focus_offset);
    let (s0, s1) = (focus[0], focus[n - 1]);
    let mut frames = Vec::with_capacity(n);
    for (i, aim) in focus.iter().enumerate() {
        let u = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let t = progress * ease(u, instr.easing)?;
        let pose = match instr.interpolation {
            Interpolation::Linear => linear_interp(&instr.start_pose, &instr.end_pose, t),
            Interpolation::SubjectAware => {
                subject_aware_at(&instr.start_pose, &instr.end_pose, &s0, &s1, instr.alpha, t, aim)
            }
        };
        frames.push(pose);
    }
    Ok(CameraTrajectory::new(frames, frame_rate)?)
}

/// Bisection steps spent on the progress fraction when the full motion
/// cannot meet the acceleration limit.
const RETIME_STEPS: usize = 16;

/// Runs an instruction. Passes run in the order static location, static
/// distance, visibility, max acceleration. Acceleration smoothing projects
/// onto the orbit sphere as well when static distance is active, and
/// alternates with the geometric passes until both hold (bounded by
/// `accel_outer_rounds`). Visibility is re-applied at the end.
///
/// When the limit cannot be met, the camera covers only part of the motion:
/// the largest fraction found by bisection for which the passes succeed.
/// Errors only when even a motionless camera path is infeasible.
pub fn simulate(instr: &SimInstruction, subject: &SubjectTrajectory, cfg: &Config) -> Result<CameraTrajectory, SimError> {
    instr.validate()?;
    let focus = focus_track(subject, &instr.constraints.focus_offset);
    let attempt = |progress: f64| -> Result<CameraTrajectory, SimError> {
        let raw = interpolate_partial(instr, subject, cfg.frame_rate, progress)?;
        constrain(raw, &focus, &instr.constraints, cfg)
    };
    match attempt(1.0) {
        Err(SimError::Infeasible { .. }) => {}
        other => return other,
    }
    let mut best = attempt(0.0)?;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..RETIME_STEPS {
        let mid = 0.5 * (lo + hi);
        match attempt(mid) {
            Ok(traj) => {
                best = traj;
                lo = mid;
            }
            Err(SimError::Infeasible { .. }) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    log::debug!("motion retimed to {lo:.4} of its extent");
    Ok(best)
}

fn constrain(raw: CameraTrajectory, focus: &[Vec3], set: &ConstraintSet, cfg: &Config) -> Result<CameraTrajectory, SimError> {
    let mut traj = geometric_passes(raw, focus, set, cfg)?;
    if set.visibility_throughout {
        traj = enforce_constraint(&traj, focus, Constraint::Visibility, cfg)?;
    }
    if let Some(a_max) = set.max_acceleration {
        let shell = set.static_distance.then(|| Shell {
            centers: focus,
            radius: (traj.frames[0].position - focus[0]).norm(),
        });
        let mut rounds = 0;
        while max_acceleration(&traj) > a_max + ACCEL_SLACK {
            if rounds == cfg.accel_outer_rounds {
                return Err(SimError::Infeasible {
                    pass: "max_acceleration",
                    residual: max_acceleration(&traj) - a_max,
                });
            }
            traj = smooth(&traj, focus, a_max, shell.as_ref(), cfg)?;
            traj = geometric_passes(traj, focus, set, cfg)?;
            rounds += 1;
        }
        if set.visibility_throughout {
            traj = enforce_constraint(&traj, focus, Constraint::Visibility, cfg)?;
        }
    }
    Ok(traj)
}

/// Residuals of every active constraint on a finished trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// Largest positional spread from frame 0 (static location).
    pub location_drift: Option<f64>,
    /// Largest |radius - start radius| (static distance).
    pub radius_deviation: Option<f64>,
    /// Fraction of frames with the focus point inside the frustum.
    pub visible_fraction: Option<f64>,
    /// Largest second difference and the limit it is held to.
    pub max_acceleration: Option<(f64, f64)>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.location_drift.is_none_or(|d| d <= 1e-9)
            && self.radius_deviation.is_none_or(|d| d <= 1e-3)
            && self.visible_fraction.is_none_or(|f| f == 1.0)
            && self.max_acceleration.is_none_or(|(a, lim)| a <= lim + 1e-9)
    }
}

pub fn check_constraints(
    traj: &CameraTrajectory,
    subject: &SubjectTrajectory,
    set: &ConstraintSet,
    cfg: &Config,
) -> Result<ConstraintReport, SimError> {
    let focus = focus_track(subject, &set.focus_offset);
    check_lengths(traj, &focus)?;
    let p0 = traj.frames[0].position;
    let r0 = (p0 - focus[0]).norm();
    let pairs = || traj.frames.iter().zip(&focus);
    Ok(ConstraintReport {
        location_drift: set
            .static_location
            .then(|| traj.frames.iter().map(|p| (p.position - p0).norm()).fold(0.0, f64::max)),
        radius_deviation: set
            .static_distance
            .then(|| pairs().map(|(p, c)| ((p.position - c).norm() - r0).abs()).fold(0.0, f64::max)),
        visible_fraction: set
            .visibility_throughout
            .then(|| pairs().filter(|(p, c)| in_frustum(p, c, cfg.aspect)).count() as f64 / traj.len() as f64),
        max_acceleration: set.max_acceleration.map(|a| (max_acceleration(traj), a)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionKind {
    Stationary,
    LineWalk,
    TurnInPlace,
    ArcWalk,
}

impl MotionKind {
    pub const ALL: [MotionKind; 4] = [
        MotionKind::Stationary,
        MotionKind::LineWalk,
        MotionKind::TurnInPlace,
        MotionKind::ArcWalk,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectMotionModel {
    pub kind: MotionKind,
    pub start: SubjectState,
    /// Maximum walking speed, meters per frame.
    pub speed: f64,
    /// Heading change per frame, radians (counter-clockwise about up).
    pub turn_rate: f64,
    /// Fraction in `[0, 1]` by which each step may fall short of the nominal
    /// speed and turn rate.
    pub jitter: f64,
    pub seed: u64,
}

impl SubjectMotionModel {
    pub fn stationary(start: SubjectState) -> Self {
        SubjectMotionModel {
            kind: MotionKind::Stationary,
            start,
            speed: 0.0,
            turn_rate: 0.0,
            jitter: 0.0,
            seed: 0,
        }
    }
}

pub fn generate_subject_motion(model: &SubjectMotionModel, frames: usize) -> Result<SubjectTrajectory, SimError> {
    if frames == 0 {
        return Err(SimError::InvalidModel("frame count must be at least 1"));
    }
    if !(model.speed >= 0.0 && model.speed.is_finite()) {
        return Err(SimError::InvalidModel("speed must be finite and non-negative"));
    }
    if !model.turn_rate.is_finite() {
        return Err(SimError::InvalidModel("turn rate must be finite"));
    }
    if !(0.0..=1.0).contains(&model.jitter) {
        return Err(SimError::InvalidModel("jitter must lie in [0, 1]"));
    }
    model.start.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut state = model.start;
    let mut out = Vec::with_capacity(frames);
    out.push(state);
    let up = Unit::new_normalize(model.start.up());
    for _ in 1..frames {
        let scale = 1.0 - model.jitter * rng.gen::<f64>();
        let (walk, turn) = match model.kind {
            MotionKind::Stationary => (false, false),
            MotionKind::LineWalk => (true, false),
            MotionKind::TurnInPlace => (false, true),
            MotionKind::ArcWalk => (true, true),
        };
        if turn {
            let rot = Rotation3::from_axis_angle(&up, model.turn_rate * scale);
            state.facing = state.facing.map(|v| rot * v);
        }
        if walk {
            state.center += state.forward() * (model.speed * scale);
        }
        out.push(state);
    }
    Ok(SubjectTrajectory { frames: out })
}
