//! Network-free animation codec.
//!
//! An author selects superpixel regions of a photographed scene and animates
//! them with keyframes; the whole animation compresses into a short
//! QR-alphanumeric payload. A consumer holding only their own photo of the
//! scene and the payload regenerates the animation locally:
//!
//! 1. [`registration`] gates the capture on landmark alignment,
//! 2. [`segmentation`] re-segments the canonical 640x480 canvas,
//! 3. [`matching`] recovers each keyframe's ROI from the encoded features,
//! 4. [`animator`] renders the 30 fps frame sequence.
//!
//! [`codec`] defines the payload grammar; [`pipeline`] strings the stages
//! together for both sides.

pub mod animator;
pub mod codec;
pub mod draft;
pub mod fixtures;
pub mod geometry;
pub mod imagecore;
pub mod io;
pub mod matching;
pub mod perturb;
pub mod pipeline;
pub mod registration;
pub mod segmentation;

use thiserror::Error;

pub use codec::{AnimationSpec, Keyframe};
pub use imagecore::{Image, Mask};

/// Any failure of the end-to-end flows.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Image(#[from] imagecore::ImageError),
    #[error(transparent)]
    Segment(#[from] segmentation::SegmentError),
    #[error(transparent)]
    Parse(#[from] codec::ParseError),
    #[error(transparent)]
    Encode(#[from] codec::EncodeError),
    #[error(transparent)]
    Spec(#[from] codec::SpecViolation),
    #[error(transparent)]
    Match(#[from] matching::MatchError),
    #[error(transparent)]
    Render(#[from] animator::RenderError),
    #[error(transparent)]
    UnknownSegment(#[from] draft::UnknownSegment),
    #[error("registration error {error:.2}px exceeds threshold {threshold}px")]
    Registration { error: f64, threshold: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
