//! Frame rendering at 30 fps for the four animation schemes.
//!
//! Frame `i` of a keyframe (1-based) uses the interpolation ratio
//! `r = i / (30 T)` or its square, so the last frame always lands on the
//! keyframe's end state. Keyframes are rendered in order and each one starts
//! from the final frame of the previous one.

pub mod bilateral;
pub mod font;
pub mod inpaint;

use std::path::Path;

use image::Rgb;
use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::codec::{Animation, AnimationSpec, Annotation, ColorShift, Interp, Move2D, Seconds, Warp3D};
use crate::geometry::{interp_ratio, move2d_matrix, warp3d_matrix, GeometryError, Homography};
use crate::imagecore::{dilate_elliptical, hsv_to_rgb, rgb_to_hsv, HsvColor, Image, Mask};
use crate::matching::MatchResult;

pub use bilateral::{bilateral_dim, BilateralParams};
pub use inpaint::inpaint_telea;

pub const FPS: u32 = 30;
/// Neighbourhood radius used by the inpainting step.
pub const INPAINT_RADIUS: u32 = 3;
/// Elliptical dilation applied to moving and recoloured ROIs.
pub const MOTION_DILATION: u32 = 2;
/// Elliptical dilation protecting an annotated ROI from the background filter.
pub const ANNOTATION_DILATION: u32 = 10;
/// Frames rendered concurrently before being handed to a sink.
const CHUNK: u32 = 16;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("keyframe {keyframe}: {source}")]
    Geometry {
        keyframe: usize,
        source: GeometryError,
    },
    #[error("frame sink failed: {0}")]
    Sink(String),
}

/// A keyframe reduced to what its frames need.
enum Plan {
    /// Every frame is the same image.
    Still(Image),
    Geometric {
        canvas: Image,
        roi: Mask,
        background: Image,
        motion: Motion,
    },
    Recolor {
        canvas: Image,
        pixels: Vec<(u32, u32, HsvColor)>,
        dh: f64,
        duration: Seconds,
        interp: Interp,
    },
}

enum Motion {
    Move {
        kf: Move2D,
        center: (f64, f64),
    },
    Warp(Warp3D),
}

impl Motion {
    fn duration(&self) -> (Seconds, Interp) {
        match self {
            Motion::Move { kf, .. } => (kf.duration, kf.interp),
            Motion::Warp(w) => (w.duration, w.interp),
        }
    }

    fn matrix(&self, r: f64) -> Result<Homography, GeometryError> {
        match self {
            Motion::Move { kf, center } => Ok(move2d_matrix(kf, *center, r)),
            Motion::Warp(w) => warp3d_matrix(w, r),
        }
    }
}

impl Plan {
    fn new(canvas: &Image, roi: &Mask, animation: &Animation) -> Plan {
        assert_eq!(canvas.dimensions(), roi.dimensions(), "ROI and canvas sizes differ");
        match animation {
            Animation::Annotation(a) => Plan::Still(annotate(canvas, roi, a)),
            _ if roi.is_empty() => {
                warn!("{} keyframe has an empty ROI; holding the canvas", animation.kind_name());
                Plan::Still(canvas.clone())
            }
            Animation::Move2D(kf) => Plan::geometric(
                canvas,
                roi,
                Motion::Move {
                    kf: kf.clone(),
                    center: roi.centroid().expect("non-empty ROI"),
                },
            ),
            Animation::Warp3D(w) => Plan::geometric(canvas, roi, Motion::Warp(w.clone())),
            Animation::ColorShift(c) => {
                let region = dilate_elliptical(roi, MOTION_DILATION);
                let pixels = canvas
                    .enumerate_pixels()
                    .filter(|&(x, y, _)| region.get(x, y))
                    .map(|(x, y, p)| (x, y, rgb_to_hsv(p.0)))
                    .collect();
                Plan::Recolor {
                    canvas: canvas.clone(),
                    pixels,
                    dh: c.dh as f64,
                    duration: c.duration,
                    interp: c.interp,
                }
            }
        }
    }

    fn geometric(canvas: &Image, roi: &Mask, motion: Motion) -> Plan {
        let hole = dilate_elliptical(roi, MOTION_DILATION);
        Plan::Geometric {
            background: inpaint_telea(canvas, &hole, INPAINT_RADIUS),
            canvas: canvas.clone(),
            roi: roi.clone(),
            motion,
        }
    }

    fn frame(&self, i: u32) -> Result<Image, GeometryError> {
        match self {
            Plan::Still(img) => Ok(img.clone()),
            Plan::Geometric {
                canvas,
                roi,
                background,
                motion,
            } => {
                let (duration, interp) = motion.duration();
                let m = motion.matrix(interp_ratio(i, duration, interp))?;
                let inv = m.inverse().ok_or(GeometryError::Singular)?;
                Ok(composite_warped(canvas, roi, background, &inv))
            }
            Plan::Recolor {
                canvas,
                pixels,
                dh,
                duration,
                interp,
            } => {
                let shift = interp_ratio(i, *duration, *interp) * dh;
                let mut out = canvas.clone();
                for &(x, y, hsv) in pixels {
                    let moved = HsvColor {
                        h: hsv.h + shift,
                        ..hsv
                    };
                    out.put_pixel(x, y, Rgb(hsv_to_rgb(moved)));
                }
                Ok(out)
            }
        }
    }
}

/// Background with the ROI content mapped through the transform whose
/// inverse is `inv`. Content is sampled bilinearly, ROI membership by
/// nearest neighbour; anything mapped off the canvas is dropped.
fn composite_warped(canvas: &Image, roi: &Mask, background: &Image, inv: &Homography) -> Image {
    let (w, h) = canvas.dimensions();
    let mut out = background.clone();
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = inv.apply(x as f64, y as f64);
            if sx.is_finite() && sy.is_finite() && roi.get_signed(sx.round() as i64, sy.round() as i64) {
                out.put_pixel(x, y, sample_bilinear(canvas, sx, sy));
            }
        }
    }
    out
}

fn sample_bilinear(img: &Image, x: f64, y: f64) -> Rgb<u8> {
    let (w, h) = img.dimensions();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as u32, y.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let (a, b, c, d) = (
        img.get_pixel(x0, y0).0,
        img.get_pixel(x1, y0).0,
        img.get_pixel(x0, y1).0,
        img.get_pixel(x1, y1).0,
    );
    Rgb(std::array::from_fn(|k| {
        let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
        let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
        crate::imagecore::round_u8(top * (1.0 - fy) + bottom * fy)
    }))
}

/// Annotation frame: background outside the dilated ROI bilateral-filtered
/// and dimmed, text drawn at the top left.
fn annotate(canvas: &Image, roi: &Mask, a: &Annotation) -> Image {
    let keep = dilate_elliptical(roi, ANNOTATION_DILATION);
    let mut out = bilateral_dim(canvas, &keep, &BilateralParams::default());
    font::draw_text(&mut out, &a.text);
    out
}

fn render_plan(plan: &Plan, frames: u32) -> Result<Vec<Image>, GeometryError> {
    (1..=frames).into_par_iter().map(|i| plan.frame(i)).collect()
}

fn keyframe_frames(canvas: &Image, roi: &Mask, animation: &Animation) -> Result<Vec<Image>, GeometryError> {
    let plan = Plan::new(canvas, roi, animation);
    render_plan(&plan, animation.duration().frame_count())
}

/// Rigid move of the ROI about its centroid over an inpainted background.
pub fn render_move2d(canvas: &Image, roi: &Mask, kf: &Move2D) -> Result<Vec<Image>, GeometryError> {
    keyframe_frames(canvas, roi, &Animation::Move2D(kf.clone()))
}

/// Perspective warp of the ROI with corners interpolated towards `dst`.
pub fn render_warp3d(canvas: &Image, roi: &Mask, kf: &Warp3D) -> Result<Vec<Image>, GeometryError> {
    keyframe_frames(canvas, roi, &Animation::Warp3D(kf.clone()))
}

/// Uniform hue rotation of the (dilated) ROI.
pub fn render_colorshift(canvas: &Image, roi: &Mask, kf: &ColorShift) -> Vec<Image> {
    keyframe_frames(canvas, roi, &Animation::ColorShift(kf.clone())).expect("recolouring cannot fail")
}

pub fn render_annotation(canvas: &Image, roi: &Mask, kf: &Annotation) -> Vec<Image> {
    keyframe_frames(canvas, roi, &Animation::Annotation(kf.clone())).expect("annotation cannot fail")
}

/// Frame range of one keyframe inside a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyframeSpan {
    pub keyframe: usize,
    pub kind: &'static str,
    pub start_frame: u32,
    pub frame_count: u32,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub fps: u32,
    pub frame_count: u32,
    pub keyframes: Vec<KeyframeSpan>,
}

impl Manifest {
    pub fn for_spec(spec: &AnimationSpec) -> Manifest {
        let mut start = 0;
        let keyframes = spec
            .keyframes
            .iter()
            .enumerate()
            .map(|(k, kf)| {
                let count = kf.animation.duration().frame_count();
                let span = KeyframeSpan {
                    keyframe: k,
                    kind: kf.animation.kind_name(),
                    start_frame: start,
                    frame_count: count,
                    duration: kf.animation.duration().as_secs_f64(),
                };
                start += count;
                span
            })
            .collect();
        Manifest {
            fps: FPS,
            frame_count: start,
            keyframes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<Image>,
    pub manifest: Manifest,
}

impl FrameSequence {
    pub fn fps(&self) -> u32 {
        self.manifest.fps
    }

    /// Writes `frame_%05d.png` files and `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let encoded: Vec<std::io::Result<Vec<u8>>> = self.frames.par_iter().map(crate::io::encode_png).collect();
        for (i, bytes) in encoded.into_iter().enumerate() {
            std::fs::write(dir.join(crate::io::frame_file_name(i as u32)), bytes?)?;
        }
        crate::io::write_json(&dir.join("manifest.json"), &self.manifest)
    }
}

/// Renders every keyframe in order, handing frames to `sink` with their
/// global index. Frames within a keyframe are rendered in parallel chunks.
pub fn render_sequence_with<F>(
    consumer: &Image,
    spec: &AnimationSpec,
    rois: &MatchResult,
    mut sink: F,
) -> Result<Manifest, RenderError>
where
    F: FnMut(u32, &Image) -> Result<(), String>,
{
    assert_eq!(spec.keyframes.len(), rois.keyframes.len(), "one ROI per keyframe");
    let manifest = Manifest::for_spec(spec);
    let mut canvas = consumer.clone();
    for (k, (kf, m)) in spec.keyframes.iter().zip(&rois.keyframes).enumerate() {
        let plan = Plan::new(&canvas, &m.roi, &kf.animation);
        let total = kf.animation.duration().frame_count();
        let start = manifest.keyframes[k].start_frame;
        let mut first = 1;
        while first <= total {
            let last = (first + CHUNK - 1).min(total);
            let frames: Vec<Image> = (first..=last)
                .into_par_iter()
                .map(|i| plan.frame(i))
                .collect::<Result<_, _>>()
                .map_err(|source| RenderError::Geometry { keyframe: k, source })?;
            for (off, f) in frames.iter().enumerate() {
                sink(start + first - 1 + off as u32, f).map_err(RenderError::Sink)?;
            }
            if last == total {
                canvas = frames.into_iter().last().expect("chunk is non-empty");
            }
            first = last + 1;
        }
    }
    Ok(manifest)
}

/// Final frame of every keyframe, without rendering the frames in between.
pub fn render_end_states(consumer: &Image, spec: &AnimationSpec, rois: &MatchResult) -> Result<Vec<Image>, RenderError> {
    assert_eq!(spec.keyframes.len(), rois.keyframes.len(), "one ROI per keyframe");
    let mut canvas = consumer.clone();
    let mut out = Vec::with_capacity(spec.keyframes.len());
    for (k, (kf, m)) in spec.keyframes.iter().zip(&rois.keyframes).enumerate() {
        let plan = Plan::new(&canvas, &m.roi, &kf.animation);
        canvas = plan
            .frame(kf.animation.duration().frame_count())
            .map_err(|source| RenderError::Geometry { keyframe: k, source })?;
        out.push(canvas.clone());
    }
    Ok(out)
}

/// Renders the whole animation into memory.
pub fn render_sequence(consumer: &Image, spec: &AnimationSpec, rois: &MatchResult) -> Result<FrameSequence, RenderError> {
    let mut frames = Vec::new();
    let manifest = render_sequence_with(consumer, spec, rois, |_, f| {
        frames.push(f.clone());
        Ok(())
    })?;
    Ok(FrameSequence { frames, manifest })
}
