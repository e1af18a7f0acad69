//! Authoring-side spec JSON, where ROIs may name segments by ID.
//!
//! Segment IDs only mean something against one label map, so a draft is
//! resolved to wire features right after segmenting the author's image.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Animation, AnimationSpec, Keyframe, LandmarkSet};
use crate::segmentation::{SegParams, SegmentFeature};

/// One ROI entry: a segment ID of the current label map, or a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RoiRef {
    Segment(u32),
    Feature(SegmentFeature),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftKeyframe {
    pub roi: Vec<RoiRef>,
    #[serde(flatten)]
    pub animation: Animation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftSpec {
    pub landmarks: LandmarkSet,
    #[serde(default)]
    pub seg: SegParams,
    pub keyframes: Vec<DraftKeyframe>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("keyframe {keyframe}: unknown segment ID {id} (label map has {count} segments)")]
pub struct UnknownSegment {
    pub keyframe: usize,
    pub id: u32,
    pub count: usize,
}

impl DraftKeyframe {
    pub fn resolve(&self, keyframe: usize, feats: &[SegmentFeature]) -> Result<Keyframe, UnknownSegment> {
        let roi = self
            .roi
            .iter()
            .map(|r| match *r {
                RoiRef::Feature(f) => Ok(f),
                RoiRef::Segment(id) => id
                    .checked_sub(1)
                    .and_then(|i| feats.get(i as usize))
                    .copied()
                    .ok_or(UnknownSegment {
                        keyframe,
                        id,
                        count: feats.len(),
                    }),
            })
            .collect::<Result<_, _>>()?;
        Ok(Keyframe {
            roi,
            animation: self.animation.clone(),
        })
    }

    /// Segment IDs named directly by this keyframe.
    pub fn segment_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.roi.iter().filter_map(|r| match r {
            RoiRef::Segment(id) => Some(*id),
            RoiRef::Feature(_) => None,
        })
    }
}

impl DraftSpec {
    pub fn resolve(&self, feats: &[SegmentFeature]) -> Result<AnimationSpec, UnknownSegment> {
        Ok(AnimationSpec {
            landmarks: self.landmarks,
            seg: self.seg,
            keyframes: self
                .keyframes
                .iter()
                .enumerate()
                .map(|(k, kf)| kf.resolve(k, feats))
                .collect::<Result<_, _>>()?,
        })
    }
}

impl From<&AnimationSpec> for DraftSpec {
    fn from(spec: &AnimationSpec) -> Self {
        DraftSpec {
            landmarks: spec.landmarks,
            seg: spec.seg,
            keyframes: spec
                .keyframes
                .iter()
                .map(|kf| DraftKeyframe {
                    roi: kf.roi.iter().copied().map(RoiRef::Feature).collect(),
                    animation: kf.animation.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSON: &str = r#"{
        "landmarks": [{"x": 10, "y": 10}, {"x": 60, "y": 10}, {"x": 60, "y": 60}, {"x": 10, "y": 60}],
        "keyframes": [
            {"roi": [2, {"cx": 5, "cy": 6, "area": 7}], "kind": "colorshift", "dh": 90, "duration": 1.5}
        ]
    }"#;

    #[test]
    fn mixed_roi_entries_parse_and_resolve() {
        let d: DraftSpec = serde_json::from_str(JSON).unwrap();
        assert_eq!(d.seg, SegParams::default());
        assert_eq!(d.keyframes[0].roi[0], RoiRef::Segment(2));
        assert_eq!(d.keyframes[0].segment_ids().collect::<Vec<_>>(), [2]);
        let feats = [SegmentFeature::new(1, 1, 1), SegmentFeature::new(20, 30, 40)];
        let spec = d.resolve(&feats).unwrap();
        assert_eq!(spec.keyframes[0].roi, [feats[1], SegmentFeature::new(5, 6, 7)]);
        assert_eq!(DraftSpec::from(&spec).resolve(&[]).unwrap(), spec);
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let d: DraftSpec = serde_json::from_str(JSON).unwrap();
        assert_eq!(
            d.resolve(&[SegmentFeature::new(1, 1, 1)]),
            Err(UnknownSegment { keyframe: 0, id: 2, count: 1 })
        );
        let mut zero = d.clone();
        zero.keyframes[0].roi[0] = RoiRef::Segment(0);
        assert!(zero.resolve(&[SegmentFeature::new(1, 1, 1)]).is_err());
    }
}
