//! JSON-Lines dataset records, 30-frame windowing and balance reporting.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::compiler::{ConstraintSet, Interpolation, SimInstruction};
use crate::pose::{CameraPose, CameraTrajectory, GeometryError, SubjectState, SubjectTrajectory, Vec3};
use crate::scl::{format_scd, parse_scd, validate_scd, EasingKind, ScdRecord};

pub const SCHEMA_VERSION: u32 = 1;
pub const WINDOW: usize = 30;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {id:?}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("line {line}: record {id:?}: {reason}")]
    InvalidAt { line: usize, id: String, reason: String },
    #[error("trajectory of {len} frames is shorter than the {target}-frame window")]
    TooShort { len: usize, target: usize },
    #[error("camera has {camera} frames but subject has {subject}")]
    LengthMismatch { camera: usize, subject: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Static,
    Dynamic,
}

impl Subset {
    pub fn of(subject: &SubjectTrajectory) -> Subset {
        if subject.is_static() {
            Subset::Static
        } else {
            Subset::Dynamic
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Subset::Static => "static",
            Subset::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub prompt: Option<String>,
    pub scd: ScdRecord,
    pub instruction: SimInstruction,
    pub subject: SubjectTrajectory,
    pub camera: CameraTrajectory,
    pub subset: Subset,
}

impl DatasetRecord {
    pub fn validate(&self) -> Result<(), String> {
        let geo = |e: GeometryError| e.to_string();
        if let Some(v) = validate_scd(&self.scd).first() {
            return Err(format!("scd: {v}"));
        }
        self.instruction.validate().map_err(geo)?;
        self.camera.validate().map_err(geo)?;
        if self.subject.is_empty() {
            return Err("empty subject trajectory".into());
        }
        self.subject.frames.iter().try_for_each(SubjectState::validate).map_err(geo)?;
        if self.subject.len() != self.camera.len() {
            return Err(format!(
                "subject has {} frames but camera has {}",
                self.subject.len(),
                self.camera.len()
            ));
        }
        if self.instruction.frames as usize != self.camera.len() {
            return Err(format!(
                "instruction asks for {} frames but camera has {}",
                self.instruction.frames,
                self.camera.len()
            ));
        }
        if Subset::of(&self.subject) != self.subset {
            return Err(format!("subset label {:?} disagrees with the subject trajectory", self.subset.token()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseWire {
    pub pos: [f64; 3],
    pub rot: [f64; 3],
    pub fov: f64,
}

impl From<&CameraPose> for PoseWire {
    fn from(p: &CameraPose) -> Self {
        PoseWire {
            pos: p.position.into(),
            rot: p.rotation,
            fov: p.fov,
        }
    }
}

impl From<&PoseWire> for CameraPose {
    fn from(p: &PoseWire) -> Self {
        CameraPose {
            position: Vec3::from(p.pos),
            rotation: p.rot,
            fov: p.fov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectWire {
    pub center: [f64; 3],
    pub dims: [f64; 3],
    pub facing: [[f64; 3]; 3],
}

impl From<&SubjectState> for SubjectWire {
    fn from(s: &SubjectState) -> Self {
        SubjectWire {
            center: s.center.into(),
            dims: s.dims.into(),
            facing: s.facing.map(Into::into),
        }
    }
}

impl From<&SubjectWire> for SubjectState {
    fn from(s: &SubjectWire) -> Self {
        SubjectState {
            center: Vec3::from(s.center),
            dims: Vec3::from(s.dims),
            facing: s.facing.map(Vec3::from),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintsWire {
    pub static_location: bool,
    pub static_distance: bool,
    pub target_radius: Option<f64>,
    pub visibility_throughout: bool,
    pub max_acceleration: Option<f64>,
    #[serde(default)]
    pub focus_offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionWire {
    pub start_pose: PoseWire,
    pub end_pose: PoseWire,
    pub interpolation: String,
    pub alpha: f64,
    pub easing: String,
    pub constraints: ConstraintsWire,
    pub frames: u32,
}

impl From<&SimInstruction> for InstructionWire {
    fn from(i: &SimInstruction) -> Self {
        let c = i.constraints;
        InstructionWire {
            start_pose: (&i.start_pose).into(),
            end_pose: (&i.end_pose).into(),
            interpolation: i.interpolation.token().to_string(),
            alpha: i.alpha,
            easing: i.easing.token().to_string(),
            constraints: ConstraintsWire {
                static_location: c.static_location,
                static_distance: c.static_distance,
                target_radius: c.target_radius,
                visibility_throughout: c.visibility_throughout,
                max_acceleration: c.max_acceleration,
                focus_offset: c.focus_offset.into(),
            },
            frames: i.frames,
        }
    }
}

impl TryFrom<&InstructionWire> for SimInstruction {
    type Error = String;

    fn try_from(w: &InstructionWire) -> Result<Self, String> {
        let c = w.constraints;
        Ok(SimInstruction {
            start_pose: (&w.start_pose).into(),
            end_pose: (&w.end_pose).into(),
            interpolation: Interpolation::from_token(&w.interpolation)
                .ok_or_else(|| format!("unknown interpolation {:?}", w.interpolation))?,
            alpha: w.alpha,
            easing: w.easing.parse::<EasingKind>().map_err(|e| e.to_string())?,
            constraints: ConstraintSet {
                static_location: c.static_location,
                static_distance: c.static_distance,
                target_radius: c.target_radius,
                visibility_throughout: c.visibility_throughout,
                max_acceleration: c.max_acceleration,
                focus_offset: Vec3::from(c.focus_offset),
            },
            frames: w.frames,
        })
    }
}

fn default_frame_rate() -> f64 {
    CameraTrajectory::DEFAULT_FRAME_RATE
}

fn is_default_frame_rate(r: &f64) -> bool {
    *r == CameraTrajectory::DEFAULT_FRAME_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordWire {
    pub v: u32,
    pub id: String,
    pub prompt: Option<String>,
    pub scd: String,
    pub instruction: InstructionWire,
    pub subject: Vec<SubjectWire>,
    pub camera: Vec<PoseWire>,
    pub subset: Subset,
    #[serde(default = "default_frame_rate", skip_serializing_if = "is_default_frame_rate")]
    pub frame_rate: f64,
}

const RECORD_FIELDS: &[&str] = &[
    "v", "id", "prompt", "scd", "instruction", "subject", "camera", "subset", "frame_rate",
];
const INSTRUCTION_FIELDS: &[&str] = &[
    "start_pose", "end_pose", "interpolation", "alpha", "easing", "constraints", "frames",
];

impl From<&DatasetRecord> for RecordWire {
    fn from(r: &DatasetRecord) -> Self {
        RecordWire {
            v: SCHEMA_VERSION,
            id: r.id.clone(),
            prompt: r.prompt.clone(),
            scd: format_scd(&r.scd),
            instruction: (&r.instruction).into(),
            subject: r.subject.frames.iter().map(Into::into).collect(),
            camera: r.camera.frames.iter().map(Into::into).collect(),
            subset: r.subset,
            frame_rate: r.camera.frame_rate,
        }
    }
}

impl TryFrom<&RecordWire> for DatasetRecord {
    type Error = String;

    fn try_from(w: &RecordWire) -> Result<Self, String> {
        if w.v != SCHEMA_VERSION {
            return Err(format!("unsupported schema version {}", w.v));
        }
        Ok(DatasetRecord {
            id: w.id.clone(),
            prompt: w.prompt.clone(),
            scd: parse_scd(&w.scd).map_err(|e| format!("scd: {e}"))?,
            instruction: (&w.instruction).try_into()?,
            subject: SubjectTrajectory {
                frames: w.subject.iter().map(Into::into).collect(),
            },
            camera: CameraTrajectory {
                frames: w.camera.iter().map(Into::into).collect(),
                frame_rate: w.frame_rate,
            },
            subset: w.subset,
        })
    }
}

/// Serializes one record as a single JSON line (no trailing newline).
pub fn to_json_line(record: &DatasetRecord) -> String {
    serde_json::to_string(&RecordWire::from(record)).expect("record serialization is infallible")
}

/// Validates and writes records, one per line. Stops at the first invalid
/// record and names it.
pub fn write_records<'a>(records: impl IntoIterator<Item = &'a DatasetRecord>, w: &mut impl Write) -> Result<usize, DatasetError> {
    let mut n = 0;
    for r in records {
        r.validate().map_err(|reason| DatasetError::Invalid {
            id: r.id.clone(),
            reason,
        })?;
        writeln!(w, "{}", to_json_line(r))?;
        n += 1;
    }
    Ok(n)
}

pub fn write_records_path<'a>(records: impl IntoIterator<Item = &'a DatasetRecord>, path: &Path) -> Result<usize, DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = write_records(records, &mut w)?;
    w.flush()?;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReadOutcome {
    pub records: Vec<DatasetRecord>,
    /// Unknown-field notices, already logged.
    pub warnings: Vec<String>,
}

fn unknown_keys(v: &Value, known: &[&str]) -> Vec<String> {
    v.as_object()
        .map(|o| o.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect())
        .unwrap_or_default()
}

/// Parses and validates one line. Unknown fields are reported through
/// `warnings` and otherwise ignored.
pub fn parse_record_line(text: &str, line: usize, warnings: &mut Vec<String>) -> Result<DatasetRecord, DatasetError> {
    let parse_err = |message: String| DatasetError::Parse { line, message };
    let value: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    for key in unknown_keys(&value, RECORD_FIELDS) {
        warnings.push(format!("line {line}: ignoring unknown field {key:?}"));
    }
    if let Some(instr) = value.get("instruction") {
        for key in unknown_keys(instr, INSTRUCTION_FIELDS) {
            warnings.push(format!("line {line}: ignoring unknown field instruction.{key}"));
        }
    }
    let wire: RecordWire = serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
    let invalid = |reason: String| DatasetError::InvalidAt {
        line,
        id: wire.id.clone(),
        reason,
    };
    let record = DatasetRecord::try_from(&wire).map_err(invalid)?;
    record.validate().map_err(invalid)?;
    Ok(record)
}

pub fn read_records(r: impl BufRead) -> Result<ReadOutcome, DatasetError> {
    let mut out = ReadOutcome::default();
    for (i, text) in r.lines().enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let before = out.warnings.len();
        out.records.push(parse_record_line(&text, i + 1, &mut out.warnings)?);
        for w in &out.warnings[before..] {
            log::warn!("{w}");
        }
    }
    Ok(out)
}

pub fn read_records_path(path: &Path) -> Result<ReadOutcome, DatasetError> {
    read_records(BufReader::new(File::open(path)?))
}

/// `target` indices spread uniformly over `0..len`, first and last
/// included, rounding half up.
pub fn window_indices(len: usize, target: usize) -> Result<Vec<usize>, DatasetError> {
    if len < target || target == 0 {
        return Err(DatasetError::TooShort { len, target });
    }
    if target == 1 {
        return Ok(vec![0]);
    }
    let (span, steps) = (len - 1, target - 1);
    Ok((0..target).map(|i| (2 * i * span + steps) / (2 * steps)).collect())
}

fn check_pair(camera: &CameraTrajectory, subject: &SubjectTrajectory) -> Result<(), DatasetError> {
    if camera.len() != subject.len() {
        return Err(DatasetError::LengthMismatch {
            camera: camera.len(),
            subject: subject.len(),
        });
    }
    Ok(())
}

fn gather(camera: &CameraTrajectory, subject: &SubjectTrajectory, idx: impl Iterator<Item = usize>) -> (CameraTrajectory, SubjectTrajectory) {
    let (mut c, mut s) = (Vec::new(), Vec::new());
    for i in idx {
        c.push(camera.frames[i]);
        s.push(subject.frames[i]);
    }
    (
        CameraTrajectory {
            frames: c,
            frame_rate: camera.frame_rate,
        },
        SubjectTrajectory { frames: s },
    )
}

/// Uniform-index resampling of a camera/subject pair to `target` frames.
pub fn window_sample(
    camera: &CameraTrajectory,
    subject: &SubjectTrajectory,
    target: usize,
) -> Result<(CameraTrajectory, SubjectTrajectory), DatasetError> {
    check_pair(camera, subject)?;
    let idx = window_indices(camera.len(), target)?;
    Ok(gather(camera, subject, idx.into_iter()))
}

/// A contiguous `target`-frame crop at a seeded uniform offset.
pub fn random_window(
    camera: &CameraTrajectory,
    subject: &SubjectTrajectory,
    target: usize,
    seed: u64,
) -> Result<(CameraTrajectory, SubjectTrajectory), DatasetError> {
    check_pair(camera, subject)?;
    if camera.len() < target || target == 0 {
        return Err(DatasetError::TooShort {
            len: camera.len(),
            target,
        });
    }
    let start = ChaCha8Rng::seed_from_u64(seed).gen_range(0..=camera.len() - target);
    Ok(gather(camera, subject, start..start + target))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct BalanceReport {
    pub records: usize,
    pub static_count: usize,
    pub dynamic_count: usize,
    pub by_shot: BTreeMap<String, usize>,
    pub by_movement: BTreeMap<String, usize>,
    pub total_frames: usize,
    /// Static share more than two percentage points away from one half.
    pub imbalanced: bool,
}

pub fn balance_report<'a>(records: impl IntoIterator<Item = &'a DatasetRecord>) -> BalanceReport {
    let mut rep = BalanceReport::default();
    for r in records {
        rep.records += 1;
        match r.subset {
            Subset::Static => rep.static_count += 1,
            Subset::Dynamic => rep.dynamic_count += 1,
        }
        *rep.by_shot.entry(r.scd.init.shot.token().to_string()).or_default() += 1;
        *rep.by_movement.entry(r.scd.movement.kind.token().to_string()).or_default() += 1;
        rep.total_frames += r.camera.len();
    }
    rep.imbalanced = rep.records > 0 && 25 * (2 * rep.static_count).abs_diff(rep.records) > rep.records;
    rep
}
