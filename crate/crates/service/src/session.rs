//! One authoring session: the uploaded canvas, its segmentation and the
//! keyframes committed so far.

use std::collections::HashSet;

use anicode_core::animator::{render_end_states, FrameSequence};
use anicode_core::codec::{capacity, encode, AnimationSpec, Capacity, EncodeError, Keyframe, LandmarkSet, SpecViolation};
use anicode_core::draft::{DraftKeyframe, UnknownSegment};
use anicode_core::imagecore::{normalize, resize_area, Image};
use anicode_core::io::encode_png;
use anicode_core::matching::build_rois;
use anicode_core::pipeline::author;
use anicode_core::segmentation::{extract_features, segment, LabelMap, SegParams, SegmentError, SegmentFeature};
use serde::Serialize;
use thiserror::Error;

pub const THUMBNAIL_SIZE: (u32, u32) = (160, 120);

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("bad image: {0}")]
    BadImage(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    UnknownSegment(#[from] UnknownSegment),
    #[error("payload needs {used} characters, limit is {limit}; keyframe {keyframe} overflows")]
    Capacity { used: usize, limit: usize, keyframe: usize },
    #[error("no keyframe to undo")]
    NothingToUndo,
    #[error("session has no keyframes")]
    NoKeyframes,
    #[error("landmarks are not set")]
    NoLandmarks,
    #[error("re-segmenting clears {keyframes} keyframes; resend with confirm_clear")]
    NeedsConfirmation { keyframes: usize, invalidated: Vec<usize> },
    #[error("{0}")]
    Internal(String),
}

impl From<SpecViolation> for SessionError {
    fn from(e: SpecViolation) -> Self {
        SessionError::Invalid(e.to_string())
    }
}

impl From<SegmentError> for SessionError {
    fn from(e: SegmentError) -> Self {
        match e {
            SegmentError::Write(m) => SessionError::Internal(m),
            other => SessionError::Invalid(other.to_string()),
        }
    }
}

impl From<EncodeError> for SessionError {
    fn from(e: EncodeError) -> Self {
        match e {
            EncodeError::Invalid(v) => v.into(),
            EncodeError::CapacityExceeded { used, limit, keyframe } => SessionError::Capacity { used, limit, keyframe },
        }
    }
}

impl From<anicode_core::Error> for SessionError {
    fn from(e: anicode_core::Error) -> Self {
        match e {
            anicode_core::Error::Encode(e) => e.into(),
            anicode_core::Error::Spec(e) => e.into(),
            anicode_core::Error::Segment(e) => e.into(),
            anicode_core::Error::UnknownSegment(e) => e.into(),
            other => SessionError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SegmentReport {
    pub params: SegParams,
    pub segments: usize,
    pub features: Vec<SegmentFeature>,
    /// Keyframes whose segments no longer exist under the new parameters.
    pub invalidated: Vec<usize>,
    pub cleared: usize,
}

#[derive(Debug, Serialize)]
pub struct KeyframeReport {
    pub keyframes: usize,
    pub capacity: Capacity,
}

pub struct Session {
    canvas: Image,
    landmarks: Option<LandmarkSet>,
    seg: SegParams,
    labels: LabelMap,
    features: Vec<SegmentFeature>,
    keyframes: Vec<Keyframe>,
    thumbnail: Option<Vec<u8>>,
    preview: Option<FrameSequence>,
}

impl Session {
    /// Normalizes the upload and segments it with default parameters.
    pub fn new(image: &Image, landmarks: Option<LandmarkSet>) -> Result<Session, SessionError> {
        let canvas = normalize(image).map_err(|e| SessionError::BadImage(e.to_string()))?;
        if let Some(l) = &landmarks {
            l.validate()?;
        }
        let seg = SegParams::default();
        let labels = segment(&canvas, &seg)?;
        let features = extract_features(&labels);
        Ok(Session {
            canvas,
            landmarks,
            seg,
            labels,
            features,
            keyframes: Vec::new(),
            thumbnail: None,
            preview: None,
        })
    }

    pub fn landmarks(&self) -> Option<LandmarkSet> {
        self.landmarks
    }

    pub fn seg(&self) -> SegParams {
        self.seg
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn features(&self) -> &[SegmentFeature] {
        &self.features
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn thumbnail(&self) -> Option<&[u8]> {
        self.thumbnail.as_deref()
    }

    pub fn set_landmarks(&mut self, landmarks: LandmarkSet) -> Result<(), SessionError> {
        landmarks.validate()?;
        self.landmarks = Some(landmarks);
        self.preview = None;
        Ok(())
    }

    /// Re-runs segmentation. With keyframes present this needs `confirm`,
    /// and then clears them since their features belong to the old map.
    pub fn resegment(&mut self, params: SegParams, confirm: bool) -> Result<SegmentReport, SessionError> {
        params.validate()?;
        let labels = segment(&self.canvas, &params)?;
        let features = extract_features(&labels);
        let present: HashSet<SegmentFeature> = features.iter().copied().collect();
        let invalidated: Vec<usize> = self
            .keyframes
            .iter()
            .enumerate()
            .filter(|(_, kf)| kf.roi.iter().any(|f| !present.contains(f)))
            .map(|(k, _)| k)
            .collect();
        if !self.keyframes.is_empty() && !confirm {
            return Err(SessionError::NeedsConfirmation {
                keyframes: self.keyframes.len(),
                invalidated,
            });
        }
        let cleared = self.keyframes.len();
        self.keyframes.clear();
        self.thumbnail = None;
        self.preview = None;
        self.seg = params;
        self.labels = labels;
        self.features = features;
        Ok(SegmentReport {
            params,
            segments: self.features.len(),
            features: self.features.clone(),
            invalidated,
            cleared,
        })
    }

    /// The spec as committed so far.
    pub fn spec(&self) -> Result<AnimationSpec, SessionError> {
        if self.keyframes.is_empty() {
            return Err(SessionError::NoKeyframes);
        }
        self.spec_with(self.keyframes.clone())
    }

    fn spec_with(&self, keyframes: Vec<Keyframe>) -> Result<AnimationSpec, SessionError> {
        Ok(AnimationSpec {
            landmarks: self.landmarks.ok_or(SessionError::NoLandmarks)?,
            seg: self.seg,
            keyframes,
        })
    }

    /// Appends a keyframe if the grown spec still fits the payload.
    pub fn add_keyframe(&mut self, draft: &DraftKeyframe) -> Result<KeyframeReport, SessionError> {
        let kf = draft.resolve(self.keyframes.len(), &self.features)?;
        kf.validate(self.keyframes.len())?;
        let mut keyframes = self.keyframes.clone();
        keyframes.push(kf);
        let spec = self.spec_with(keyframes)?;
        encode(&spec)?;
        let thumbnail = self.render_thumbnail(&spec)?;
        self.keyframes = spec.keyframes;
        self.thumbnail = Some(thumbnail);
        self.preview = None;
        self.report()
    }

    /// Pops the last keyframe.
    pub fn undo(&mut self) -> Result<KeyframeReport, SessionError> {
        self.keyframes.pop().ok_or(SessionError::NothingToUndo)?;
        self.preview = None;
        self.thumbnail = match self.keyframes.is_empty() {
            true => None,
            false => Some(self.render_thumbnail(&self.spec()?)?),
        };
        self.report()
    }

    fn report(&self) -> Result<KeyframeReport, SessionError> {
        let capacity = match self.keyframes.is_empty() {
            true => Capacity {
                chars_used: 0,
                limit: anicode_core::codec::PAYLOAD_CAPACITY,
            },
            false => capacity(&self.spec()?)?,
        };
        Ok(KeyframeReport {
            keyframes: self.keyframes.len(),
            capacity,
        })
    }

    /// End state of the last keyframe, scaled down, as PNG.
    fn render_thumbnail(&self, spec: &AnimationSpec) -> Result<Vec<u8>, SessionError> {
        let rois = build_rois(spec, &self.labels, &self.features).map_err(|e| SessionError::Internal(e.to_string()))?;
        let ends = render_end_states(&self.canvas, spec, &rois).map_err(|e| SessionError::Internal(e.to_string()))?;
        let last = ends.last().expect("spec has keyframes");
        let small = resize_area(last, THUMBNAIL_SIZE.0, THUMBNAIL_SIZE.1).map_err(|e| SessionError::Internal(e.to_string()))?;
        encode_png(&small).map_err(|e| SessionError::Internal(e.to_string()))
    }

    /// Preview frames from the same author pipeline the CLI uses; cached
    /// until the keyframes change.
    pub fn preview(&mut self) -> Result<&FrameSequence, SessionError> {
        if self.preview.is_none() {
            let spec = self.spec()?;
            let seq = author(&self.canvas, &spec)?.preview(&spec)?;
            self.preview = Some(seq);
        }
        Ok(self.preview.as_ref().expect("just rendered"))
    }

    pub fn payload(&self) -> Result<String, SessionError> {
        Ok(encode(&self.spec()?)?)
    }
}
