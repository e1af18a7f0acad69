//! Recovers each keyframe's ROI in a consumer image by matching the encoded
//! segment features against the consumer's own segmentation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::codec::{Animation, AnimationSpec};
use crate::geometry::{move2d_matrix, warp3d_matrix, warp_mask, GeometryError, Homography};
use crate::imagecore::Mask;
use crate::segmentation::{LabelMap, SegmentFeature};

/// Divisor applied to the squared area difference in the match cost.
pub const AREA_WEIGHT_DIVISOR: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("no candidate segments to match against")]
    NoCandidates,
    #[error("keyframe {keyframe}: {source}")]
    Geometry {
        keyframe: usize,
        source: GeometryError,
    },
}

/// Match cost scaled by the area divisor so it stays an exact integer.
fn scaled_cost(a: &SegmentFeature, b: &SegmentFeature) -> u128 {
    let dx = a.cx as i128 - b.cx as i128;
    let dy = a.cy as i128 - b.cy as i128;
    let da = a.area as i128 - b.area as i128;
    ((dx * dx + dy * dy) * AREA_WEIGHT_DIVISOR as i128 + da * da) as u128
}

/// `(cx - cx')^2 + (cy - cy')^2 + (A - A')^2 / 1000`.
pub fn match_cost(a: &SegmentFeature, b: &SegmentFeature) -> f64 {
    scaled_cost(a, b) as f64 / AREA_WEIGHT_DIVISOR as f64
}

/// Best candidate for `query` as `(segment ID, cost)`; IDs are 1-based
/// candidate positions and ties go to the lowest ID.
pub fn match_segment(query: &SegmentFeature, candidates: &[SegmentFeature]) -> Result<(u32, f64), MatchError> {
    let (idx, cost) = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (i, scaled_cost(query, c)))
        .min_by_key(|&(i, c)| (c, i))
        .ok_or(MatchError::NoCandidates)?;
    Ok((idx as u32 + 1, cost as f64 / AREA_WEIGHT_DIVISOR as f64))
}

/// Transforms accumulated per consumer segment by earlier geometric keyframes.
#[derive(Debug, Clone, Default)]
pub struct TransformStack {
    stacks: BTreeMap<u32, Vec<Homography>>,
}

impl TransformStack {
    pub fn push(&mut self, id: u32, h: Homography) {
        self.stacks.entry(id).or_default().push(h);
    }

    pub fn transforms(&self, id: u32) -> &[Homography] {
        self.stacks.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Composition in keyframe order (later transforms applied last).
    pub fn composed(&self, id: u32) -> Homography {
        self.transforms(id)
            .iter()
            .fold(Homography::IDENTITY, |acc, h| *h * acc)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KeyframeMatch {
    /// Matched consumer segment per encoded feature, in payload order.
    pub ids: Vec<u32>,
    pub costs: Vec<f64>,
    #[serde(skip)]
    pub roi: Mask,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    pub keyframes: Vec<KeyframeMatch>,
}

impl MatchResult {
    pub fn to_debug_json(&self) -> serde_json::Value {
        serde_json::json!({
            "keyframes": self.keyframes.iter().enumerate().map(|(k, m)| serde_json::json!({
                "keyframe": k,
                "ids": m.ids,
                "costs": m.costs,
                "roi_pixels": m.roi.count(),
            })).collect::<Vec<_>>()
        })
    }
}

/// End-of-keyframe transform that a geometric keyframe leaves on its ROI.
/// `fallback` is the rotation centre used when the ROI has left the canvas.
pub fn end_transform(
    animation: &Animation,
    roi: &Mask,
    fallback: Option<(f64, f64)>,
) -> Result<Option<Homography>, GeometryError> {
    match animation {
        Animation::Move2D(m) => Ok(roi.centroid().or(fallback).map(|c| move2d_matrix(m, c, 1.0))),
        Animation::Warp3D(w) => warp3d_matrix(w, 1.0).map(Some),
        _ => Ok(None),
    }
}

/// Builds every keyframe's ROI mask, replaying segment displacement from
/// earlier 2D/3D keyframes.
pub fn build_rois(
    spec: &AnimationSpec,
    labels: &LabelMap,
    feats: &[SegmentFeature],
) -> Result<MatchResult, MatchError> {
    let mut stack = TransformStack::default();
    let mut seg_masks: BTreeMap<u32, Mask> = BTreeMap::new();
    let mut out = Vec::with_capacity(spec.keyframes.len());

    for (k, kf) in spec.keyframes.iter().enumerate() {
        let mut ids = Vec::with_capacity(kf.roi.len());
        let mut costs = Vec::with_capacity(kf.roi.len());
        for f in &kf.roi {
            let (id, cost) = match_segment(f, feats)?;
            ids.push(id);
            costs.push(cost);
        }
        let unique: BTreeSet<u32> = ids.iter().copied().collect();
        let mut roi = Mask::new(labels.width(), labels.height());
        for &id in &unique {
            let seg = seg_masks.entry(id).or_insert_with(|| labels.mask_of(id));
            if stack.transforms(id).is_empty() {
                roi.union_with(seg);
            } else {
                let moved = warp_mask(seg, &stack.composed(id))
                    .map_err(|source| MatchError::Geometry { keyframe: k, source })?;
                roi.union_with(&moved);
            }
        }
        // Off-canvas ROIs keep moving about where their segments would be.
        let fallback = unique.first().and_then(|&id| {
            let (x, y) = seg_masks[&id].centroid()?;
            Some(stack.composed(id).apply(x, y))
        });
        if let Some(h) = end_transform(&kf.animation, &roi, fallback)
            .map_err(|source| MatchError::Geometry { keyframe: k, source })?
        {
            for &id in &unique {
                stack.push(id, h);
            }
        }
        out.push(KeyframeMatch { ids, costs, roi });
    }
    Ok(MatchResult { keyframes: out })
}
