//! Payload grammar: an [`AnimationSpec`] serialized as a single-space separated
//! token stream over the QR alphanumeric alphabet.
//!
//! Field order:
//!
//! ```text
//! lx1 ly1 lx2 ly2 lx3 ly3 lx4 ly4          landmarks
//! avg compactness min_merge iterations     segmentation parameters
//! m                                        keyframe count
//! n cx1 cy1 a1 .. cxn cyn an tau <body>    per keyframe
//! ```
//!
//! | tau  | body                                        |
//! |------|---------------------------------------------|
//! | 0, 4 | `tx ty theta T`                             |
//! | 1, 5 | `x1 y1 .. x4 y4 x1' y1' .. x4' y4' T`       |
//! | 2, 6 | `dh T`                                      |
//! | 3    | `len:TEXT T`                                |
//!
//! The high tau of each pair selects quadratic timing. Integers are decimal
//! with an optional `-`; durations are seconds with at most one decimal
//! (`2`, `2.5`). Annotation text is length-prefixed since it may contain
//! spaces.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::imagecore::{CANVAS_AREA, CANVAS_HEIGHT, CANVAS_WIDTH};
use crate::segmentation::{SegParams, SegmentFeature};

/// Alphanumeric capacity of a version 13 code at error-correction level M.
pub const PAYLOAD_CAPACITY: usize = 483;

/// The 45 characters of the QR alphanumeric mode.
pub const QR_ALPHANUMERIC: &str = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ $%*+-./:";

/// Longest keyframe duration accepted, in tenths of a second.
pub const MAX_DURATION_TENTHS: u32 = 6000;

pub fn is_qr_alphanumeric(c: char) -> bool {
    QR_ALPHANUMERIC.contains(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// True when three integer points lie on one line (coincident points included).
pub fn collinear(a: Point, b: Point, c: Point) -> bool {
    let cross = (b.x as i64 - a.x as i64) * (c.y as i64 - a.y as i64)
        - (b.y as i64 - a.y as i64) * (c.x as i64 - a.x as i64);
    cross == 0
}

/// True when any three of the four points are collinear.
pub fn quad_degenerate(p: &[Point; 4]) -> bool {
    [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
        .iter()
        .any(|&(i, j, k)| collinear(p[i], p[j], p[k]))
}

/// The four corner landmarks of the reference code, in canonical canvas space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LandmarkSet(pub [Point; 4]);

/// Keyframe duration in tenths of a second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seconds(u32);

impl Seconds {
    pub const fn from_tenths(tenths: u32) -> Self {
        Self(tenths)
    }

    /// Rounds to the nearest tenth.
    pub fn from_secs_f64(s: f64) -> Self {
        Self((s * 10.0).round().max(0.0) as u32)
    }

    pub fn tenths(self) -> u32 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 10.0
    }

    /// Frames at 30 fps, `ceil(30 T)`; exact since `30 T = 3 * tenths`.
    pub fn frame_count(self) -> u32 {
        3 * self.0
    }
}

impl fmt::Display for Seconds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 10 == 0 {
            write!(f, "{}", self.0 / 10)
        } else {
            write!(f, "{}.{}", self.0 / 10, self.0 % 10)
        }
    }
}

impl Serialize for Seconds {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_secs_f64())
    }
}

impl<'de> Deserialize<'de> for Seconds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() || v < 0.0 {
            return Err(serde::de::Error::custom("duration must be a non-negative number"));
        }
        Ok(Seconds::from_secs_f64(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    #[default]
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move2D {
    pub tx: i32,
    pub ty: i32,
    /// Rotation about the ROI centroid, whole degrees.
    #[serde(default)]
    pub theta: i32,
    pub duration: Seconds,
    #[serde(default)]
    pub interp: Interp,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Warp3D {
    pub src: [Point; 4],
    pub dst: [Point; 4],
    pub duration: Seconds,
    #[serde(default)]
    pub interp: Interp,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColorShift {
    /// Hue change in whole degrees.
    pub dh: i32,
    pub duration: Seconds,
    #[serde(default)]
    pub interp: Interp,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annotation {
    pub text: String,
    pub duration: Seconds,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Animation {
    Move2D(Move2D),
    Warp3D(Warp3D),
    ColorShift(ColorShift),
    Annotation(Annotation),
}

impl Animation {
    /// Type tag on the wire.
    pub fn tau(&self) -> u8 {
        let quad = |i: Interp| if i == Interp::Quadratic { 4 } else { 0 };
        match self {
            Animation::Move2D(m) => quad(m.interp),
            Animation::Warp3D(w) => 1 + quad(w.interp),
            Animation::ColorShift(c) => 2 + quad(c.interp),
            Animation::Annotation(_) => 3,
        }
    }

    pub fn duration(&self) -> Seconds {
        match self {
            Animation::Move2D(m) => m.duration,
            Animation::Warp3D(w) => w.duration,
            Animation::ColorShift(c) => c.duration,
            Animation::Annotation(a) => a.duration,
        }
    }

    pub fn interp(&self) -> Interp {
        match self {
            Animation::Move2D(m) => m.interp,
            Animation::Warp3D(w) => w.interp,
            Animation::ColorShift(c) => c.interp,
            Animation::Annotation(_) => Interp::Linear,
        }
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self, Animation::Move2D(_) | Animation::Warp3D(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Animation::Move2D(_) => "move2d",
            Animation::Warp3D(_) => "warp3d",
            Animation::ColorShift(_) => "colorshift",
            Animation::Annotation(_) => "annotation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Keyframe {
    pub roi: Vec<SegmentFeature>,
    #[serde(flatten)]
    pub animation: Animation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnimationSpec {
    pub landmarks: LandmarkSet,
    pub seg: SegParams,
    pub keyframes: Vec<Keyframe>,
}

/// A broken [`AnimationSpec`] invariant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecViolation {
    #[error("animation has no keyframes")]
    NoKeyframes,
    #[error("landmark {index} at ({x}, {y}) lies outside the 640x480 canvas")]
    LandmarkOutside { index: usize, x: i32, y: i32 },
    #[error("landmarks are collinear")]
    CollinearLandmarks,
    #[error("segmentation parameter {0} must be positive")]
    SegParam(&'static str),
    #[error("average superpixel size {0} exceeds the canvas area")]
    SegSizeTooLarge(u32),
    #[error("keyframe {keyframe}: empty ROI")]
    EmptyRoi { keyframe: usize },
    #[error("keyframe {keyframe}: segment feature ({cx}, {cy}, {area}) is out of range")]
    FeatureOutside {
        keyframe: usize,
        cx: u32,
        cy: u32,
        area: u32,
    },
    #[error("keyframe {keyframe}: duration must be between 0.1 and 600 seconds")]
    Duration { keyframe: usize },
    #[error("keyframe {keyframe}: warp source points are degenerate")]
    DegenerateWarp { keyframe: usize },
    #[error("keyframe {keyframe}: annotation text is empty")]
    EmptyText { keyframe: usize },
    #[error("keyframe {keyframe}: character {ch:?} is not QR alphanumeric")]
    Charset { keyframe: usize, ch: char },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Invalid(#[from] SpecViolation),
    #[error("payload needs {used} characters, limit is {limit}; keyframe {keyframe} overflows")]
    CapacityExceeded {
        used: usize,
        limit: usize,
        /// Zero-based index of the first keyframe that does not fit.
        keyframe: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("payload ended while reading {0}")]
    Truncated(&'static str),
    #[error("expected a number for {field}, found {found:?}")]
    NotNumeric { field: &'static str, found: String },
    #[error("unknown animation type {0}")]
    UnknownTau(i64),
    #[error("keyframe has an empty ROI")]
    EmptyRoi,
    #[error("malformed annotation text")]
    BadText,
    #[error("unexpected trailing data")]
    TrailingGarbage,
    #[error(transparent)]
    Invalid(SpecViolation),
}

/// Decode failure, located by zero-based token index.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at token {token}: {kind}")]
pub struct ParseError {
    pub token: usize,
    pub kind: ParseErrorKind,
}

/// Characters used versus the payload limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Capacity {
    pub chars_used: usize,
    pub limit: usize,
}

impl LandmarkSet {
    /// Corners must lie on the canvas with no three collinear.
    pub fn validate(&self) -> Result<(), SpecViolation> {
        for (index, p) in self.0.iter().enumerate() {
            if p.x < 0 || p.y < 0 || p.x >= CANVAS_WIDTH as i32 || p.y >= CANVAS_HEIGHT as i32 {
                return Err(SpecViolation::LandmarkOutside {
                    index,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        if quad_degenerate(&self.0) {
            return Err(SpecViolation::CollinearLandmarks);
        }
        Ok(())
    }
}

impl AnimationSpec {
    pub fn validate(&self) -> Result<(), SpecViolation> {
        self.landmarks.validate()?;
        let s = &self.seg;
        for (name, v) in [
            ("avg_superpixel_size", s.avg_superpixel_size),
            ("compactness", s.compactness),
            ("min_merge_size", s.min_merge_size),
            ("iterations", s.iterations),
        ] {
            if v == 0 {
                return Err(SpecViolation::SegParam(name));
            }
        }
        if s.avg_superpixel_size > CANVAS_AREA {
            return Err(SpecViolation::SegSizeTooLarge(s.avg_superpixel_size));
        }
        if self.keyframes.is_empty() {
            return Err(SpecViolation::NoKeyframes);
        }
        for (k, kf) in self.keyframes.iter().enumerate() {
            kf.validate(k)?;
        }
        Ok(())
    }
}

impl Keyframe {
    /// Checks this keyframe; `keyframe` is its index, used in errors.
    pub fn validate(&self, keyframe: usize) -> Result<(), SpecViolation> {
        if self.roi.is_empty() {
            return Err(SpecViolation::EmptyRoi { keyframe });
        }
        for f in &self.roi {
            if f.cx >= CANVAS_WIDTH || f.cy >= CANVAS_HEIGHT || f.area == 0 || f.area > CANVAS_AREA
            {
                return Err(SpecViolation::FeatureOutside {
                    keyframe,
                    cx: f.cx,
                    cy: f.cy,
                    area: f.area,
                });
            }
        }
        let d = self.animation.duration().tenths();
        if d == 0 || d > MAX_DURATION_TENTHS {
            return Err(SpecViolation::Duration { keyframe });
        }
        match &self.animation {
            Animation::Warp3D(w) if quad_degenerate(&w.src) => {
                Err(SpecViolation::DegenerateWarp { keyframe })
            }
            Animation::Annotation(a) => {
                if a.text.is_empty() {
                    return Err(SpecViolation::EmptyText { keyframe });
                }
                match a.text.chars().find(|&c| !is_qr_alphanumeric(c)) {
                    Some(ch) => Err(SpecViolation::Charset { keyframe, ch }),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

fn push_tokens(out: &mut String, tokens: impl IntoIterator<Item = impl fmt::Display>) {
    for t in tokens {
        if !out.is_empty() {
            out.push(' ');
        }
        write!(out, "{t}").unwrap();
    }
}

fn render_header(spec: &AnimationSpec, out: &mut String) {
    push_tokens(out, spec.landmarks.0.iter().flat_map(|p| [p.x, p.y]));
    let s = &spec.seg;
    push_tokens(
        out,
        [s.avg_superpixel_size, s.compactness, s.min_merge_size, s.iterations],
    );
    push_tokens(out, [spec.keyframes.len()]);
}

fn render_keyframe(kf: &Keyframe, out: &mut String) {
    push_tokens(out, [kf.roi.len()]);
    push_tokens(out, kf.roi.iter().flat_map(|f| [f.cx, f.cy, f.area]));
    push_tokens(out, [kf.animation.tau()]);
    match &kf.animation {
        Animation::Move2D(m) => {
            push_tokens(out, [m.tx, m.ty, m.theta]);
            push_tokens(out, [m.duration]);
        }
        Animation::Warp3D(w) => {
            push_tokens(out, w.src.iter().chain(&w.dst).flat_map(|p| [p.x, p.y]));
            push_tokens(out, [w.duration]);
        }
        Animation::ColorShift(c) => {
            push_tokens(out, [c.dh]);
            push_tokens(out, [c.duration]);
        }
        Animation::Annotation(a) => {
            push_tokens(out, [format!("{}:{}", a.text.chars().count(), a.text)]);
            push_tokens(out, [a.duration]);
        }
    }
}

/// Serializes without the capacity check; `end_of_keyframe[k]` is the
/// string length once keyframe `k` has been written.
fn render_unbounded(spec: &AnimationSpec) -> (String, Vec<usize>) {
    let mut out = String::new();
    render_header(spec, &mut out);
    let ends = spec
        .keyframes
        .iter()
        .map(|kf| {
            render_keyframe(kf, &mut out);
            out.len()
        })
        .collect();
    (out, ends)
}

/// Encodes `spec`, alerting with the first overflowing keyframe when the
/// payload would exceed [`PAYLOAD_CAPACITY`].
pub fn encode(spec: &AnimationSpec) -> Result<String, EncodeError> {
    spec.validate()?;
    let (out, ends) = render_unbounded(spec);
    if out.len() > PAYLOAD_CAPACITY {
        let keyframe = ends.iter().position(|&e| e > PAYLOAD_CAPACITY).unwrap_or(0);
        return Err(EncodeError::CapacityExceeded {
            used: out.len(),
            limit: PAYLOAD_CAPACITY,
            keyframe,
        });
    }
    debug_assert!(out.chars().all(is_qr_alphanumeric));
    Ok(out)
}

/// Length of the encoded payload whether or not it fits.
pub fn capacity(spec: &AnimationSpec) -> Result<Capacity, SpecViolation> {
    spec.validate()?;
    Ok(Capacity {
        chars_used: render_unbounded(spec).0.len(),
        limit: PAYLOAD_CAPACITY,
    })
}

struct Tokens<'a> {
    rest: &'a str,
    index: usize,
    started: bool,
}

impl<'a> Tokens<'a> {
    fn new(s: &'a str) -> Self {
        Self {
            rest: s,
            index: 0,
            started: false,
        }
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            token: self.index,
            kind,
        }
    }

    /// Consumes the separator preceding the next token.
    fn begin(&mut self, what: &'static str) -> Result<(), ParseError> {
        if self.started {
            self.index += 1;
            match self.rest.strip_prefix(' ') {
                Some(r) => self.rest = r,
                None if self.rest.is_empty() => return Err(self.err(ParseErrorKind::Truncated(what))),
                None => unreachable!("tokens always stop at a space or the end"),
            }
        }
        self.started = true;
        if self.rest.is_empty() {
            return Err(self.err(ParseErrorKind::Truncated(what)));
        }
        Ok(())
    }

    fn raw(&mut self, what: &'static str) -> Result<&'a str, ParseError> {
        self.begin(what)?;
        let end = self.rest.find(' ').unwrap_or(self.rest.len());
        let (tok, rest) = self.rest.split_at(end);
        self.rest = rest;
        Ok(tok)
    }

    fn int(&mut self, what: &'static str) -> Result<i64, ParseError> {
        let tok = self.raw(what)?;
        let digits = tok.strip_prefix('-').unwrap_or(tok);
        if digits.is_empty() || digits.len() > 12 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.err(ParseErrorKind::NotNumeric {
                field: what,
                found: tok.to_string(),
            }));
        }
        Ok(tok.parse().expect("validated digits"))
    }

    fn range<T: TryFrom<i64>>(&mut self, what: &'static str) -> Result<T, ParseError> {
        let v = self.int(what)?;
        T::try_from(v).map_err(|_| {
            self.err(ParseErrorKind::NotNumeric {
                field: what,
                found: v.to_string(),
            })
        })
    }

    fn seconds(&mut self) -> Result<Seconds, ParseError> {
        let tok = self.raw("duration")?;
        let bad = || ParseErrorKind::NotNumeric {
            field: "duration",
            found: tok.to_string(),
        };
        let (whole, frac) = match tok.split_once('.') {
            Some((w, f)) if f.len() == 1 => (w, f),
            Some(_) => return Err(self.err(bad())),
            None => (tok, "0"),
        };
        let ok = |s: &str| !s.is_empty() && s.len() <= 6 && s.bytes().all(|b| b.is_ascii_digit());
        if !ok(whole) || !ok(frac) {
            return Err(self.err(bad()));
        }
        let tenths = whole.parse::<u32>().unwrap() * 10 + frac.parse::<u32>().unwrap();
        Ok(Seconds::from_tenths(tenths))
    }

    fn text(&mut self) -> Result<String, ParseError> {
        self.begin("annotation text")?;
        let colon = self
            .rest
            .find(':')
            .ok_or_else(|| self.err(ParseErrorKind::BadText))?;
        let len_str = &self.rest[..colon];
        if len_str.is_empty() || len_str.len() > 3 || !len_str.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.err(ParseErrorKind::BadText));
        }
        let len: usize = len_str.parse().unwrap();
        let body = &self.rest[colon + 1..];
        // Byte length equals char length for ASCII; bail on anything else.
        let text = body
            .get(..len)
            .filter(|t| t.len() == len && t.is_ascii())
            .ok_or_else(|| self.err(ParseErrorKind::BadText))?;
        let after = &body[len..];
        if !(after.is_empty() || after.starts_with(' ')) {
            return Err(self.err(ParseErrorKind::BadText));
        }
        self.rest = after;
        Ok(text.to_string())
    }

    fn point(&mut self, what: &'static str) -> Result<Point, ParseError> {
        Ok(Point::new(self.range(what)?, self.range(what)?))
    }
}

/// Parses a payload back into an [`AnimationSpec`]; total over all strings.
pub fn decode(s: &str) -> Result<AnimationSpec, ParseError> {
    let mut t = Tokens::new(s);
    let mut landmarks = [Point::new(0, 0); 4];
    for p in &mut landmarks {
        *p = t.point("landmark")?;
    }
    let seg = SegParams {
        avg_superpixel_size: t.range("average superpixel size")?,
        compactness: t.range("compactness")?,
        min_merge_size: t.range("merge size")?,
        iterations: t.range("iterations")?,
    };
    let m: u32 = t.range("keyframe count")?;
    let m_token = t.index;
    if m == 0 {
        return Err(ParseError {
            token: m_token,
            kind: ParseErrorKind::Invalid(SpecViolation::NoKeyframes),
        });
    }
    // A keyframe takes at least 6 tokens, so m is bounded by the input length.
    let mut keyframes = Vec::with_capacity((m as usize).min(s.len() / 12 + 1));
    for _ in 0..m {
        let n: u32 = t.range("ROI size")?;
        if n == 0 {
            return Err(t.err(ParseErrorKind::EmptyRoi));
        }
        let mut roi = Vec::with_capacity((n as usize).min(s.len() / 6 + 1));
        for _ in 0..n {
            roi.push(SegmentFeature {
                cx: t.range("segment cx")?,
                cy: t.range("segment cy")?,
                area: t.range("segment area")?,
            });
        }
        let tau = t.int("animation type")?;
        let interp = if tau >= 4 {
            Interp::Quadratic
        } else {
            Interp::Linear
        };
        let animation = match tau {
            0 | 4 => Animation::Move2D(Move2D {
                tx: t.range("tx")?,
                ty: t.range("ty")?,
                theta: t.range("theta")?,
                duration: t.seconds()?,
                interp,
            }),
            1 | 5 => {
                let mut src = [Point::new(0, 0); 4];
                let mut dst = [Point::new(0, 0); 4];
                for p in src.iter_mut().chain(dst.iter_mut()) {
                    *p = t.point("warp point")?;
                }
                Animation::Warp3D(Warp3D {
                    src,
                    dst,
                    duration: t.seconds()?,
                    interp,
                })
            }
            2 | 6 => Animation::ColorShift(ColorShift {
                dh: t.range("hue shift")?,
                duration: t.seconds()?,
                interp,
            }),
            3 => Animation::Annotation(Annotation {
                text: t.text()?,
                duration: t.seconds()?,
            }),
            other => return Err(t.err(ParseErrorKind::UnknownTau(other))),
        };
        let kf = Keyframe { roi, animation };
        kf.validate(keyframes.len()).map_err(|v| t.err(ParseErrorKind::Invalid(v)))?;
        keyframes.push(kf);
    }
    if !t.rest.is_empty() {
        t.index += 1;
        return Err(t.err(ParseErrorKind::TrailingGarbage));
    }
    let spec = AnimationSpec {
        landmarks: LandmarkSet(landmarks),
        seg,
        keyframes,
    };
    spec.validate().map_err(|v| ParseError {
        token: 0,
        kind: ParseErrorKind::Invalid(v),
    })?;
    Ok(spec)
}
