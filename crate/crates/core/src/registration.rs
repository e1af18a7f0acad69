//! Capture gate: the consumer's view is accepted once the observed code
//! corners sit close enough to the reference corners stored in the payload.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::LandmarkSet;
use crate::imagecore::{normalize, Image, ImageError};

/// Default acceptance threshold in canonical-canvas pixels.
pub const DEFAULT_THRESHOLD: f64 = 8.0;

/// Four corner positions, index-paired with the reference corners.
pub type Corners = [[f64; 2]; 4];

impl LandmarkSet {
    pub fn to_corners(&self) -> Corners {
        self.0.map(|p| [p.x as f64, p.y as f64])
    }
}

/// Mean Euclidean distance over the four index-paired corners.
pub fn registration_error(reference: &Corners, observed: &Corners) -> f64 {
    reference
        .iter()
        .zip(observed)
        .map(|(r, o)| ((r[0] - o[0]).powi(2) + (r[1] - o[1]).powi(2)).sqrt())
        .sum::<f64>()
        / 4.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOutcome {
    /// Registered; carries the capture normalized to the canonical canvas.
    Accepted { error: f64, image: Image },
    Rejected { error: f64 },
}

impl GateOutcome {
    pub fn error(&self) -> f64 {
        match self {
            GateOutcome::Accepted { error, .. } | GateOutcome::Rejected { error } => *error,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, GateOutcome::Accepted { .. })
    }
}

/// Accepts `img` when the registration error is at most `threshold`.
pub fn gate(img: &Image, reference: &Corners, observed: &Corners, threshold: f64) -> Result<GateOutcome, ImageError> {
    let error = registration_error(reference, observed);
    if error <= threshold {
        Ok(GateOutcome::Accepted {
            error,
            image: normalize(img)?,
        })
    } else {
        Ok(GateOutcome::Rejected { error })
    }
}

/// `landmarks.json`: observed corners and optionally the reference ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarksFile {
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Corners>,
    pub obs: Corners,
}

impl LandmarksFile {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
