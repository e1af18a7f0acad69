//! Author and consumer flows on top of the individual stages.
//!
//! Both sides run the same analysis (segment, extract features, match ROIs)
//! on a canonical canvas and then the same renderer, so the consumer's
//! output for the author's own photo reproduces the preview exactly.

use crate::animator::{render_sequence, render_sequence_with, FrameSequence, Manifest};
use crate::codec::{capacity, decode, encode, AnimationSpec, Capacity};
use crate::draft::DraftSpec;
use crate::imagecore::{normalize, Image};
use crate::matching::{build_rois, MatchResult};
use crate::registration::{gate, Corners, GateOutcome};
use crate::segmentation::{extract_features, segment, LabelMap, SegmentFeature};
use crate::Error;

/// Segmentation and ROI matching of one canvas against a spec.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub labels: LabelMap,
    pub features: Vec<SegmentFeature>,
    pub matches: MatchResult,
}

pub fn analyze(canvas: &Image, spec: &AnimationSpec) -> Result<Analysis, Error> {
    let labels = segment(canvas, &spec.seg)?;
    let features = extract_features(&labels);
    let matches = build_rois(spec, &labels, &features)?;
    Ok(Analysis {
        labels,
        features,
        matches,
    })
}

#[derive(Debug, Clone)]
pub struct Authored {
    pub payload: String,
    pub capacity: Capacity,
    pub canvas: Image,
    pub analysis: Analysis,
}

/// Encodes the spec and prepares the author-side preview.
pub fn author(image: &Image, spec: &AnimationSpec) -> Result<Authored, Error> {
    let payload = encode(spec)?;
    let capacity = capacity(spec)?;
    let canvas = normalize(image)?;
    let analysis = analyze(&canvas, spec)?;
    Ok(Authored {
        payload,
        capacity,
        canvas,
        analysis,
    })
}

/// Segments the author's canvas, resolves segment IDs in the draft to
/// features, then encodes. Returns the resolved spec with the result.
pub fn author_draft(image: &Image, draft: &DraftSpec) -> Result<(AnimationSpec, Authored), Error> {
    let canvas = normalize(image)?;
    let labels = segment(&canvas, &draft.seg)?;
    let features = extract_features(&labels);
    let spec = draft.resolve(&features)?;
    let payload = encode(&spec)?;
    let capacity = capacity(&spec)?;
    let matches = build_rois(&spec, &labels, &features)?;
    let authored = Authored {
        payload,
        capacity,
        canvas,
        analysis: Analysis {
            labels,
            features,
            matches,
        },
    };
    Ok((spec, authored))
}

impl Authored {
    pub fn preview(&self, spec: &AnimationSpec) -> Result<FrameSequence, Error> {
        Ok(render_sequence(&self.canvas, spec, &self.analysis.matches)?)
    }
}

#[derive(Debug, Clone)]
pub struct Consumed {
    pub spec: AnimationSpec,
    pub registration_error: f64,
    pub canvas: Image,
    pub analysis: Analysis,
}

/// Decodes the payload, gates the capture and analyzes the consumer canvas.
pub fn consume(image: &Image, payload: &str, observed: &Corners, threshold: f64) -> Result<Consumed, Error> {
    let spec = decode(payload)?;
    let reference = spec.landmarks.to_corners();
    match gate(image, &reference, observed, threshold)? {
        GateOutcome::Rejected { error } => Err(Error::Registration { error, threshold }),
        GateOutcome::Accepted { error, image } => {
            let analysis = analyze(&image, &spec)?;
            Ok(Consumed {
                spec,
                registration_error: error,
                canvas: image,
                analysis,
            })
        }
    }
}

impl Consumed {
    pub fn render(&self) -> Result<FrameSequence, Error> {
        Ok(render_sequence(&self.canvas, &self.spec, &self.analysis.matches)?)
    }

    pub fn render_with<F>(&self, sink: F) -> Result<Manifest, Error>
    where
        F: FnMut(u32, &Image) -> Result<(), String>,
    {
        Ok(render_sequence_with(&self.canvas, &self.spec, &self.analysis.matches, sink)?)
    }
}
