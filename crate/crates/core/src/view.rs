//! Pinhole projection and the closed-form orientation solver used for
//! look-at, rule-of-thirds framing and re-aiming.

use crate::pose::{orientation_matrix, wrap_angle, CameraPose, Vec3};

/// Normalized device coordinates of a world point, `x` right and `y` up,
/// with `|x|, |y| <= 1` inside the frame. `None` when the point is not in
/// front of the camera.
pub fn project(pose: &CameraPose, world: &Vec3, aspect: f64) -> Option<(f64, f64)> {
    let q = pose.to_camera(world);
    if q.x <= 0.0 {
        return None;
    }
    let t = (pose.fov / 2.0).tan();
    Some((-q.y / (q.x * t * aspect), q.z / (q.x * t)))
}

/// Unit camera-frame ray (forward, left, up) through an NDC location.
pub fn ray_for_ndc(u: f64, v: f64, fov: f64, aspect: f64) -> Vec3 {
    let t = (fov / 2.0).tan();
    Vec3::new(1.0, -u * t * aspect, v * t).normalize()
}

/// Yaw and pitch that make the camera-frame ray `ray` point along the world
/// direction `dir`, keeping the given roll. Both inputs need not be unit.
/// Pitch lands in `[-pi/2, pi/2]`. Returns `None` when no such orientation
/// exists (the ray's elevation range cannot reach `dir`).
pub fn orient_ray(dir: &Vec3, ray: &Vec3, roll: f64) -> Option<(f64, f64)> {
    let d = dir.try_normalize(0.0)?;
    let c = orientation_matrix(0.0, 0.0, roll) * ray.try_normalize(0.0)?;
    let rho = c.x.hypot(c.z);
    if rho == 0.0 {
        return None;
    }
    let s = d.z / rho;
    if s.abs() > 1.0 + 1e-12 {
        return None;
    }
    let gamma = c.z.atan2(c.x);
    let pitch = gamma - s.clamp(-1.0, 1.0).asin();
    let x_after = pitch.cos() * c.x + pitch.sin() * c.z;
    let heading = d.y.atan2(d.x) - c.y.atan2(x_after);
    Some((wrap_angle(-heading), wrap_angle(pitch)))
}

/// Orientation looking from `from` toward `target`, roll zero.
pub fn look_at(from: &Vec3, target: &Vec3) -> Option<[f64; 3]> {
    let (yaw, pitch) = orient_ray(&(target - from), &Vec3::x(), 0.0)?;
    Some([yaw, pitch, 0.0])
}

/// Re-aims `pose` so that `target` appears along the camera-frame ray `ray`.
/// Keeps position, roll and fov.
pub fn aim_along(pose: &CameraPose, target: &Vec3, ray: &Vec3) -> Option<CameraPose> {
    let (yaw, pitch) = orient_ray(&(target - pose.position), ray, pose.roll())?;
    Some(CameraPose {
        rotation: [yaw, pitch, pose.roll()],
        ..*pose
    })
}

/// Angle between two poses' viewing directions.
pub fn forward_angle(a: &CameraPose, b: &CameraPose) -> f64 {
    let c = a.forward().dot(&b.forward()).clamp(-1.0, 1.0);
    c.acos()
}
