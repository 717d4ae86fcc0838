//! Trajectory and embedding losses, the progressive training schedules and
//! the masking/noise corruption applied to training inputs.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{delta_discrepancy, wrap_angle, CameraPose, CameraTrajectory, DiscrepancyParams, PoseDelta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("trajectory is empty")]
    Empty,
    #[error("trajectory lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("speed loss needs at least two frames")]
    TooShort,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero-norm embedding")]
    ZeroNorm,
    #[error("step {step} outside schedule of {total} steps")]
    StepOutOfRange { step: usize, total: usize },
    #[error("invalid parameter: {0}")]
    Invalid(&'static str),
}

/// Dense embedding vector (512-d for CLIP-base).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(v: Vec<f64>) -> Self {
        EmbeddingVector(v)
    }
}

/// Cosine similarity; errors on a dimension mismatch or a zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, ObjectiveError> {
    if a.len() != b.len() {
        return Err(ObjectiveError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(ObjectiveError::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn paired<'a>(c: &'a CameraTrajectory, c_hat: &'a CameraTrajectory) -> Result<(&'a [CameraPose], &'a [CameraPose]), ObjectiveError> {
    if c.is_empty() || c_hat.is_empty() {
        return Err(ObjectiveError::Empty);
    }
    if c.len() != c_hat.len() {
        return Err(ObjectiveError::LengthMismatch(c.len(), c_hat.len()));
    }
    Ok((&c.frames, &c_hat.frames))
}

/// Discrepancy of the first frames.
pub fn init_loss(c: &CameraTrajectory, c_hat: &CameraTrajectory, params: &DiscrepancyParams) -> Result<f64, ObjectiveError> {
    if c.is_empty() || c_hat.is_empty() {
        return Err(ObjectiveError::Empty);
    }
    Ok(delta_discrepancy(&c.frames[0].as_delta(), &c_hat.frames[0].as_delta(), params))
}

/// Sum over frames of the discrepancy between the offsets from frame 0.
pub fn rel_loss(c: &CameraTrajectory, c_hat: &CameraTrajectory, params: &DiscrepancyParams) -> Result<f64, ObjectiveError> {
    let (a, b) = paired(c, c_hat)?;
    let (a0, b0) = (a[0].as_delta(), b[0].as_delta());
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| delta_discrepancy(&x.as_delta().minus(&a0), &y.as_delta().minus(&b0), params))
        .sum())
}

/// Sum over consecutive-frame deltas of their discrepancy.
pub fn speed_loss(c: &CameraTrajectory, c_hat: &CameraTrajectory, params: &DiscrepancyParams) -> Result<f64, ObjectiveError> {
    let (a, b) = paired(c, c_hat)?;
    if a.len() < 2 {
        return Err(ObjectiveError::TooShort);
    }
    let step = |w: &[CameraPose]| -> PoseDelta { w[1].delta(&w[0]) };
    Ok(a.windows(2)
        .zip(b.windows(2))
        .map(|(x, y)| delta_discrepancy(&step(x), &step(y), params))
        .sum())
}

/// High- and low-level embedding pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelEmbeddings {
    pub high: EmbeddingVector,
    pub low: EmbeddingVector,
}

/// `sum over {high, low} of (1 - cos(enc_k, target_k))`, in `[0, 4]`.
pub fn clip_loss(enc: &LevelEmbeddings, target: &LevelEmbeddings) -> Result<f64, ObjectiveError> {
    Ok((1.0 - cosine(&enc.high.0, &target.high.0)?) + (1.0 - cosine(&enc.low.0, &target.low.0)?))
}

/// `1 - cos` between the high-level features and their re-encoding.
pub fn cycle_loss(enc_high: &EmbeddingVector, reenc_high: &EmbeddingVector) -> Result<f64, ObjectiveError> {
    Ok(1.0 - cosine(&enc_high.0, &reenc_high.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 8.0,
            beta: 20.0,
            gamma: 50.0,
            lambda: 5.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if [self.alpha, self.beta, self.gamma, self.lambda]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
        {
            Ok(())
        } else {
            Err(ObjectiveError::Invalid("loss weights must be finite and non-negative"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub init: f64,
    pub rel: f64,
    pub speed: f64,
    pub clip: f64,
    pub cycle: f64,
}

pub fn total_loss(c: &LossComponents, w: &LossWeights) -> f64 {
    c.init + w.alpha * c.rel + w.beta * c.speed + w.gamma * c.clip + w.lambda * c.cycle
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleShape {
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    pub start_value: f64,
    pub end_value: f64,
    pub total_steps: usize,
    pub shape: ScheduleShape,
}

impl ScheduleSpec {
    pub fn linear(start_value: f64, end_value: f64, total_steps: usize) -> Self {
        ScheduleSpec {
            start_value,
            end_value,
            total_steps,
            shape: ScheduleShape::Linear,
        }
    }

    /// Fraction of masked frames, rising over training.
    pub fn masking(total_steps: usize) -> Self {
        Self::linear(0.1, 0.8, total_steps)
    }

    /// Noise ratio, decaying to clean inputs.
    pub fn noise(total_steps: usize) -> Self {
        Self::linear(1.0, 0.0, total_steps)
    }

    /// Teacher-forcing weight on the target embedding.
    pub fn teacher_forcing(total_steps: usize) -> Self {
        Self::linear(0.7, 1.0, total_steps)
    }
}

/// Schedule value at `step`: the start value at step 0 and the end value at
/// the last step.
pub fn schedule_value(spec: &ScheduleSpec, step: usize) -> Result<f64, ObjectiveError> {
    if spec.total_steps == 0 {
        return Err(ObjectiveError::Invalid("schedule needs at least one step"));
    }
    if step >= spec.total_steps {
        return Err(ObjectiveError::StepOutOfRange {
            step,
            total: spec.total_steps,
        });
    }
    if spec.total_steps == 1 || step == 0 {
        return Ok(spec.start_value);
    }
    if step == spec.total_steps - 1 {
        return Ok(spec.end_value);
    }
    let f = step as f64 / (spec.total_steps - 1) as f64;
    match spec.shape {
        ScheduleShape::Linear => Ok(spec.start_value + (spec.end_value - spec.start_value) * f),
    }
}

/// `(1 - ratio) enc + ratio target`, componentwise.
pub fn fuse_teacher(enc: &EmbeddingVector, target: &EmbeddingVector, ratio: f64) -> Result<EmbeddingVector, ObjectiveError> {
    if enc.dim() != target.dim() {
        return Err(ObjectiveError::DimensionMismatch(enc.dim(), target.dim()));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(ObjectiveError::Invalid("teacher forcing ratio must lie in [0, 1]"));
    }
    Ok(EmbeddingVector(
        enc.0.iter().zip(&target.0).map(|(e, t)| (1.0 - ratio) * e + ratio * t).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    /// Masked frames keep their clean values; consumers substitute their
    /// mask token using `masked`.
    pub trajectory: CameraTrajectory,
    /// Sorted indices of masked frames.
    pub masked: Vec<usize>,
}

/// Masks `round(mask_ratio * N)` seeded-random frames and adds uniform
/// zero-mean noise of half-width `noise_ratio * noise_scale` to every
/// position and angle component of the unmasked frames.
pub fn corrupt_trajectory(
    traj: &CameraTrajectory,
    mask_ratio: f64,
    noise_ratio: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<Corruption, ObjectiveError> {
    if !(0.0..=1.0).contains(&mask_ratio) || !(0.0..=1.0).contains(&noise_ratio) {
        return Err(ObjectiveError::Invalid("ratios must lie in [0, 1]"));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(ObjectiveError::Invalid("noise scale must be finite and non-negative"));
    }
    let n = traj.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = ((mask_ratio * n as f64).round() as usize).min(n);
    let mut masked = sample(&mut rng, n, count).into_vec();
    masked.sort_unstable();

    let amplitude = noise_ratio * noise_scale;
    let mut out = traj.clone();
    if amplitude > 0.0 {
        let mut is_masked = vec![false; n];
        masked.iter().for_each(|&i| is_masked[i] = true);
        for (pose, skip) in out.frames.iter_mut().zip(is_masked) {
            if skip {
                continue;
            }
            for x in pose.position.iter_mut() {
                *x += rng.gen_range(-amplitude..=amplitude);
            }
            for a in pose.rotation.iter_mut() {
                *a = wrap_angle(*a + rng.gen_range(-amplitude..=amplitude));
            }
        }
    }
    Ok(Corruption {
        trajectory: out,
        masked,
    })
}
