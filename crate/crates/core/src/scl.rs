//! Standardized cinematographic descriptions (SCD) and their line grammar.
//!
//! ```text
//! scd      := endpoint ";" movement ["->" endpoint]
//! endpoint := "shot=" SHOT SP "angle=" ELEV SP "side=" SIDE SP "frame=" CELL
//! movement := "move=" KIND [SP "ease=" EASE] [SP "dur=" INT]
//! ```
//!
//! The canonical form puts one space after `;` and around `->`, and omits
//! `ease=linear` and `dur=30`. A single optional space is accepted on either
//! side of the separators.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident, $field:literal { $($variant:ident => $tok:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const FIELD: &'static str = $field;

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $tok),+
                }
            }

            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = ScdError;

            fn from_str(s: &str) -> Result<Self, ScdError> {
                match s {
                    $($tok => Ok($name::$variant),)+
                    _ => Err(ScdError::UnknownToken {
                        field: $field,
                        token: s.to_string(),
                        offset: 0,
                    }),
                }
            }
        }
    };
}

token_enum!(
    /// Shot size, tightest first.
    ShotType, "shot" {
        Ecu => "ECU",
        Cu => "CU",
        Mcu => "MCU",
        Ms => "MS",
        Fs => "FS",
        Ls => "LS",
        Vls => "VLS",
        Els => "ELS",
    }
);

token_enum!(
    Elevation, "angle" {
        WormsEye => "worms_eye",
        Low => "low",
        EyeLevel => "eye_level",
        High => "high",
        BirdsEye => "birds_eye",
    }
);

token_enum!(
    /// Azimuth sector around the subject, counter-clockwise from its front.
    Side, "side" {
        Front => "front",
        FrontLeft => "front_left",
        Left => "left",
        BackLeft => "back_left",
        Back => "back",
        BackRight => "back_right",
        Right => "right",
        FrontRight => "front_right",
    }
);

token_enum!(
    /// Rule-of-thirds grid cell.
    FramingCell, "frame" {
        TopLeft => "top_left",
        TopCenter => "top_center",
        TopRight => "top_right",
        MiddleLeft => "middle_left",
        Center => "center",
        MiddleRight => "middle_right",
        BottomLeft => "bottom_left",
        BottomCenter => "bottom_center",
        BottomRight => "bottom_right",
    }
);

token_enum!(
    MovementKind, "move" {
        Static => "static",
        PushIn => "push_in",
        PullOut => "pull_out",
        Pan => "pan",
        Tilt => "tilt",
        Orbit => "orbit",
        Track => "track",
        Crane => "crane",
    }
);

token_enum!(
    EasingKind, "ease" {
        Linear => "linear",
        EaseIn => "ease_in",
        EaseOut => "ease_out",
        EaseInOut => "ease_in_out",
    }
);

impl ShotType {
    pub fn from_index(i: usize) -> Option<ShotType> {
        Self::ALL.get(i).copied()
    }
}

impl Side {
    pub fn from_index(i: usize) -> Option<Side> {
        Self::ALL.get(i).copied()
    }

    /// Sector offset by `steps` (positive = counter-clockwise), wrapping around.
    pub fn rotated(self, steps: i32) -> Side {
        let n = Self::ALL.len() as i32;
        Self::ALL[(self.index() as i32 + steps).rem_euclid(n) as usize]
    }
}

impl FramingCell {
    /// Target of the cell center in normalized device coordinates (x right, y up).
    pub fn ndc(self) -> (f64, f64) {
        let i = self.index();
        let col = (i % 3) as f64 - 1.0;
        let row = 1.0 - (i / 3) as f64;
        (col / 3.0, row / 3.0)
    }
}

pub const DEFAULT_DURATION: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CameraAngleSpec {
    pub elevation: Elevation,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointSpec {
    pub shot: ShotType,
    pub angle: CameraAngleSpec,
    pub framing: FramingCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MovementSpec {
    pub kind: MovementKind,
    pub easing: EasingKind,
    pub duration_frames: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScdRecord {
    pub init: EndpointSpec,
    pub end: Option<EndpointSpec>,
    pub movement: MovementSpec,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScdError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown {field} token {token:?} at byte {offset}")]
    UnknownToken {
        field: &'static str,
        token: String,
        offset: usize,
    },
    #[error("duplicate key {key:?} at byte {offset}")]
    DuplicateKey { key: String, offset: usize },
    #[error("movement kind list is empty")]
    NoMovementKinds,
}

/// One broken invariant found by [`validate_scd`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

pub fn validate_scd(scd: &ScdRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if scd.movement.kind == MovementKind::Static {
        if let Some(end) = scd.end {
            if end != scd.init {
                out.push(Violation {
                    field: "end",
                    rule: "static movement requires the end endpoint to be absent or equal to the start",
                });
            }
        }
        if scd.movement.duration_frames < 1 {
            out.push(Violation {
                field: "dur",
                rule: "duration must be at least one frame",
            });
        }
    } else if scd.movement.duration_frames < 2 {
        out.push(Violation {
            field: "dur",
            rule: "moving shots need at least two frames",
        });
    }
    out
}

fn format_endpoint(e: &EndpointSpec, out: &mut String) {
    use fmt::Write;
    let _ = write!(
        out,
        "shot={} angle={} side={} frame={}",
        e.shot, e.angle.elevation, e.angle.side, e.framing
    );
}

/// Canonical single-line form.
pub fn format_scd(scd: &ScdRecord) -> String {
    use fmt::Write;
    let mut out = String::with_capacity(128);
    format_endpoint(&scd.init, &mut out);
    let _ = write!(out, "; move={}", scd.movement.kind);
    if scd.movement.easing != EasingKind::Linear {
        let _ = write!(out, " ease={}", scd.movement.easing);
    }
    if scd.movement.duration_frames != DEFAULT_DURATION {
        let _ = write!(out, " dur={}", scd.movement.duration_frames);
    }
    if let Some(end) = &scd.end {
        out.push_str(" -> ");
        format_endpoint(end, &mut out);
    }
    out
}

impl fmt::Display for ScdRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_scd(self))
    }
}

impl FromStr for ScdRecord {
    type Err = ScdError;

    fn from_str(s: &str) -> Result<Self, ScdError> {
        parse_scd(s)
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

struct Pair<'a> {
    key: &'a str,
    value: &'a str,
    key_at: usize,
    value_at: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos == self.src.len()
    }

    fn syntax(&self, message: impl Into<String>) -> ScdError {
        ScdError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ScdError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected {lit:?}")))
        }
    }

    /// Reads `key=value`; the value runs to the next space, `;` or `-`.
    fn pair(&mut self) -> Result<Pair<'a>, ScdError> {
        let key_at = self.pos;
        let rest = self.rest();
        let key_len = rest
            .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
            .unwrap_or(rest.len());
        if key_len == 0 {
            return Err(self.syntax("expected a key"));
        }
        let key = &rest[..key_len];
        self.pos += key_len;
        self.expect("=")?;
        let value_at = self.pos;
        let rest = self.rest();
        let value_len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if value_len == 0 {
            return Err(self.syntax(format!("empty value for {key:?}")));
        }
        self.pos += value_len;
        Ok(Pair {
            key,
            value: &rest[..value_len],
            key_at,
            value_at,
        })
    }

    /// Reads space-separated pairs until a separator or end of input.
    fn pairs(&mut self) -> Result<Vec<Pair<'a>>, ScdError> {
        let mut out = vec![self.pair()?];
        loop {
            let save = self.pos;
            if !self.eat(" ") {
                break;
            }
            let rest = self.rest();
            if rest.starts_with("->") || rest.starts_with(';') {
                self.pos = save;
                break;
            }
            out.push(self.pair()?);
        }
        Ok(out)
    }

    fn separator(&mut self, sep: &str) -> Result<(), ScdError> {
        self.eat(" ");
        self.expect(sep)?;
        self.eat(" ");
        Ok(())
    }
}

fn check_keys(pairs: &[Pair<'_>], required: &[&str], optional: &[&str]) -> Result<(), ScdError> {
    for (i, p) in pairs.iter().enumerate() {
        if pairs[..i].iter().any(|q| q.key == p.key) {
            return Err(ScdError::DuplicateKey {
                key: p.key.to_string(),
                offset: p.key_at,
            });
        }
    }
    let order: Vec<&str> = required.iter().chain(optional).copied().collect();
    let mut want = 0;
    for p in pairs {
        match order.iter().position(|k| *k == p.key) {
            Some(i) if i >= want => {
                if want < required.len() && i != want {
                    return Err(ScdError::Syntax {
                        offset: p.key_at,
                        message: format!("expected key {:?}", order[want]),
                    });
                }
                want = i + 1;
            }
            Some(_) => {
                return Err(ScdError::Syntax {
                    offset: p.key_at,
                    message: format!("key {:?} out of order", p.key),
                })
            }
            None => {
                return Err(ScdError::Syntax {
                    offset: p.key_at,
                    message: format!("unknown key {:?}", p.key),
                })
            }
        }
    }
    if want < required.len() {
        let offset = pairs.last().map(|p| p.value_at + p.value.len()).unwrap_or(0);
        return Err(ScdError::Syntax {
            offset,
            message: format!("missing key {:?}", required[want]),
        });
    }
    Ok(())
}

fn value<T: FromStr<Err = ScdError>>(p: &Pair<'_>) -> Result<T, ScdError> {
    p.value.parse::<T>().map_err(|e| match e {
        ScdError::UnknownToken { field, token, .. } => ScdError::UnknownToken {
            field,
            token,
            offset: p.value_at,
        },
        other => other,
    })
}

fn endpoint(cur: &mut Cursor<'_>) -> Result<EndpointSpec, ScdError> {
    let pairs = cur.pairs()?;
    check_keys(&pairs, &["shot", "angle", "side", "frame"], &[])?;
    Ok(EndpointSpec {
        shot: value(&pairs[0])?,
        angle: CameraAngleSpec {
            elevation: value(&pairs[1])?,
            side: value(&pairs[2])?,
        },
        framing: value(&pairs[3])?,
    })
}

fn movement(cur: &mut Cursor<'_>) -> Result<MovementSpec, ScdError> {
    let pairs = cur.pairs()?;
    check_keys(&pairs, &["move"], &["ease", "dur"])?;
    let mut spec = MovementSpec {
        kind: value(&pairs[0])?,
        easing: EasingKind::Linear,
        duration_frames: DEFAULT_DURATION,
    };
    for p in &pairs[1..] {
        match p.key {
            "ease" => spec.easing = value(p)?,
            "dur" => {
                let canonical = !p.value.starts_with('0') || p.value == "0";
                spec.duration_frames = p
                    .value
                    .parse()
                    .ok()
                    .filter(|_| canonical && p.value.bytes().all(|b| b.is_ascii_digit()))
                    .ok_or_else(|| ScdError::Syntax {
                        offset: p.value_at,
                        message: format!("invalid duration {:?}", p.value),
                    })?;
            }
            _ => unreachable!("keys checked above"),
        }
    }
    Ok(spec)
}

/// Parses one line of the description grammar.
pub fn parse_scd(text: &str) -> Result<ScdRecord, ScdError> {
    let mut cur = Cursor { src: text, pos: 0 };
    let init = endpoint(&mut cur)?;
    cur.separator(";")?;
    let movement = movement(&mut cur)?;
    let end = if cur.at_end() {
        None
    } else {
        cur.separator("->")?;
        Some(endpoint(&mut cur)?)
    };
    if !cur.at_end() {
        return Err(cur.syntax("trailing input"));
    }
    Ok(ScdRecord {
        init,
        end,
        movement,
    })
}

/// Every endpoint in enum order.
pub fn all_endpoints() -> impl Iterator<Item = EndpointSpec> + Clone {
    ShotType::ALL.iter().flat_map(|&shot| {
        Elevation::ALL.iter().flat_map(move |&elevation| {
            Side::ALL.iter().flat_map(move |&side| {
                FramingCell::ALL.iter().map(move |&framing| EndpointSpec {
                    shot,
                    angle: CameraAngleSpec { elevation, side },
                    framing,
                })
            })
        })
    })
}

pub fn endpoint_count() -> usize {
    ShotType::ALL.len() * Elevation::ALL.len() * Side::ALL.len() * FramingCell::ALL.len()
}

/// Enumeration knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationSpec {
    pub include_end: bool,
    pub kinds: Vec<MovementKind>,
    pub easings: Vec<EasingKind>,
    pub frame_count: u32,
}

impl Default for EnumerationSpec {
    fn default() -> Self {
        EnumerationSpec {
            include_end: false,
            kinds: MovementKind::ALL.to_vec(),
            easings: EasingKind::ALL.to_vec(),
            frame_count: DEFAULT_DURATION,
        }
    }
}

impl EnumerationSpec {
    /// Number of records [`enumerate_scds`] yields. Static shots never carry
    /// an end endpoint, so they contribute one record per start and easing.
    pub fn count(&self) -> usize {
        let ends = if self.include_end { endpoint_count() } else { 1 };
        let mut kinds = self.kinds.clone();
        kinds.sort();
        kinds.dedup();
        let mut easings = self.easings.clone();
        easings.sort();
        easings.dedup();
        let per_start: usize = kinds
            .iter()
            .map(|k| if *k == MovementKind::Static { 1 } else { ends })
            .sum();
        endpoint_count() * easings.len() * per_start
    }
}

/// Lazily yields every description in lexicographic enum order: start
/// endpoint, movement kind, easing, then end endpoint.
pub fn enumerate_scds(spec: &EnumerationSpec) -> Result<impl Iterator<Item = ScdRecord>, ScdError> {
    if spec.kinds.is_empty() || spec.easings.is_empty() {
        return Err(ScdError::NoMovementKinds);
    }
    let mut kinds = spec.kinds.clone();
    kinds.sort();
    kinds.dedup();
    let mut easings = spec.easings.clone();
    easings.sort();
    easings.dedup();
    let include_end = spec.include_end;
    let frames = spec.frame_count;
    Ok(all_endpoints().flat_map(move |init| {
        let kinds = kinds.clone();
        let easings = easings.clone();
        kinds.into_iter().flat_map(move |kind| {
            let easings = easings.clone();
            easings.into_iter().flat_map(move |easing| {
                let movement = MovementSpec {
                    kind,
                    easing,
                    duration_frames: frames,
                };
                let ends: Box<dyn Iterator<Item = Option<EndpointSpec>>> =
                    if include_end && kind != MovementKind::Static {
                        Box::new(all_endpoints().map(Some))
                    } else {
                        Box::new(std::iter::once(None))
                    };
                ends.map(move |end| ScdRecord {
                    init,
                    end,
                    movement,
                })
            })
        })
    }))
}

/// Plain-language rendering used as the prompt field of generated records.
pub fn describe(scd: &ScdRecord) -> String {
    fn shot_name(s: ShotType) -> &'static str {
        match s {
            ShotType::Ecu => "extreme close-up",
            ShotType::Cu => "close-up",
            ShotType::Mcu => "medium close-up",
            ShotType::Ms => "medium shot",
            ShotType::Fs => "full shot",
            ShotType::Ls => "long shot",
            ShotType::Vls => "very long shot",
            ShotType::Els => "extreme long shot",
        }
    }
    fn endpoint_text(e: &EndpointSpec) -> String {
        format!(
            "{} from the {} at {} angle, subject at {}",
            shot_name(e.shot),
            e.angle.side.token().replace('_', " "),
            e.angle.elevation.token().replace('_', " "),
            e.framing.token().replace('_', " ")
        )
    }
    let mut text = format!("{}; {}", endpoint_text(&scd.init), scd.movement.kind.token().replace('_', " "));
    if scd.movement.easing != EasingKind::Linear {
        text.push_str(&format!(" with {}", scd.movement.easing.token().replace('_', " ")));
    }
    if let Some(end) = &scd.end {
        text.push_str(&format!(" ending on a {}", endpoint_text(end)));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const BOTH: &str = "shot=CU angle=eye_level side=front frame=center; move=orbit ease=ease_in_out dur=30 -> shot=LS angle=high side=left frame=middle_left";

    #[test]
    fn parses_both_endpoints() {
        let scd = parse_scd(BOTH).unwrap();
        assert_eq!(scd.init.shot, ShotType::Cu);
        assert_eq!(scd.movement.kind, MovementKind::Orbit);
        assert_eq!(scd.movement.easing, EasingKind::EaseInOut);
        let end = scd.end.unwrap();
        assert_eq!(end.shot, ShotType::Ls);
        assert_eq!(end.angle.elevation, Elevation::High);
        assert_eq!(end.angle.side, Side::Left);
        assert_eq!(end.framing, FramingCell::MiddleLeft);
        assert_eq!(parse_scd(&format_scd(&scd)).unwrap(), scd);
    }

    #[test]
    fn end_is_optional() {
        let scd = parse_scd("shot=ECU angle=low side=back frame=top_right; move=static").unwrap();
        assert_eq!(scd.end, None);
        assert_eq!(scd.movement.duration_frames, 30);
        assert_eq!(format_scd(&scd), "shot=ECU angle=low side=back frame=top_right; move=static");
        assert!(!format_scd(&scd).contains("->"));
    }

    #[test]
    fn unknown_tokens_name_their_field() {
        let err = parse_scd("shot=XXL angle=low side=back frame=top_right; move=static").unwrap_err();
        assert_eq!(
            err,
            ScdError::UnknownToken {
                field: "shot",
                token: "XXL".into(),
                offset: 5
            }
        );
        let err = parse_scd("shot=CU angle=low side=back frame=top_right; move=zoom").unwrap_err();
        assert!(matches!(err, ScdError::UnknownToken { field: "move", .. }));
    }

    #[test]
    fn duplicate_and_structural_errors() {
        let err = parse_scd("shot=CU shot=LS angle=low side=back frame=center; move=static").unwrap_err();
        assert_eq!(
            err,
            ScdError::DuplicateKey {
                key: "shot".into(),
                offset: 8
            }
        );
        assert!(matches!(
            parse_scd("shot=CU angle=low side=back frame=center move=static"),
            Err(ScdError::Syntax { .. })
        ));
        assert!(matches!(
            parse_scd("angle=low shot=CU side=back frame=center; move=static"),
            Err(ScdError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse_scd("shot=CU angle=low side=back frame=center; move=pan dur=030"),
            Err(ScdError::Syntax { .. })
        ));
        assert!(matches!(
            parse_scd("shot=CU angle=low side=back frame=center; move=pan  ease=linear"),
            Err(ScdError::Syntax { .. })
        ));
        assert!(matches!(
            parse_scd("shot=CU angle=low side=back frame=center; move=pan extra"),
            Err(ScdError::Syntax { .. })
        ));
        assert!(matches!(parse_scd(""), Err(ScdError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn separators_allow_optional_single_spaces() {
        let tight = "shot=CU angle=low side=back frame=center;move=pan->shot=LS angle=low side=back frame=center";
        let scd = parse_scd(tight).unwrap();
        assert_eq!(scd.movement.kind, MovementKind::Pan);
        assert!(scd.end.is_some());
    }

    #[test]
    fn formatting_is_deterministic() {
        let scd = parse_scd(BOTH).unwrap();
        assert_eq!(format_scd(&scd).as_bytes(), format_scd(&scd).as_bytes());
        assert_eq!(format_scd(&scd), BOTH.replace(" dur=30", ""));
    }

    #[test]
    fn validation_rules() {
        let mut scd = parse_scd(BOTH).unwrap();
        assert!(validate_scd(&scd).is_empty());
        scd.movement.kind = MovementKind::Static;
        assert_eq!(validate_scd(&scd).len(), 1);
        scd.end = Some(scd.init);
        assert!(validate_scd(&scd).is_empty());
        scd.movement.kind = MovementKind::Orbit;
        scd.movement.duration_frames = 1;
        let v = validate_scd(&scd);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "dur");
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(EnumerationSpec::default().count(), 92_160);
        let single = EnumerationSpec {
            kinds: vec![MovementKind::Pan],
            easings: vec![EasingKind::Linear],
            ..Default::default()
        };
        assert_eq!(single.count(), 2_880);
        let records: Vec<_> = enumerate_scds(&single).unwrap().collect();
        assert_eq!(records.len(), 2_880);
        let unique: HashSet<_> = records.iter().collect();
        assert_eq!(unique.len(), records.len());
        let mut sorted = records.clone();
        sorted.sort();
        assert_eq!(sorted, records);
        let empty = EnumerationSpec {
            kinds: vec![],
            ..Default::default()
        };
        assert_eq!(enumerate_scds(&empty).err(), Some(ScdError::NoMovementKinds));
    }

    #[test]
    fn enumeration_with_end_skips_static_ends() {
        let spec = EnumerationSpec {
            include_end: true,
            kinds: vec![MovementKind::Static, MovementKind::Orbit],
            easings: vec![EasingKind::Linear],
            frame_count: 30,
        };
        assert_eq!(spec.count(), 2_880 * (1 + 2_880));
        let first: Vec<_> = enumerate_scds(&spec).unwrap().take(3).collect();
        assert_eq!(first[0].movement.kind, MovementKind::Static);
        assert!(first[0].end.is_none());
        assert!(first[1].end.is_some());
        assert!(first.iter().all(|r| validate_scd(r).is_empty()));
    }

    #[test]
    fn cell_centers() {
        assert_eq!(FramingCell::Center.ndc(), (0.0, 0.0));
        assert_eq!(FramingCell::MiddleLeft.ndc(), (-1.0 / 3.0, 0.0));
        assert_eq!(FramingCell::TopRight.ndc(), (1.0 / 3.0, 1.0 / 3.0));
        assert_eq!(FramingCell::BottomLeft.ndc(), (-1.0 / 3.0, -1.0 / 3.0));
    }

    #[test]
    fn side_rotation_wraps() {
        assert_eq!(Side::Front.rotated(-1), Side::FrontRight);
        assert_eq!(Side::FrontRight.rotated(2), Side::FrontLeft);
    }
}
