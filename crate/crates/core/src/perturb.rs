//! Deterministic photometric and geometric perturbations for robustness runs.

use std::fmt;

use image::Rgb;
use thiserror::Error;

use crate::geometry::homography_from_points;
use crate::imagecore::{round_u8, Image};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerturbError {
    #[error("unknown perturbation kind {0:?} (expected brightness, gamma, translate or homography)")]
    UnknownKind(String),
    #[error("bad magnitude {mag:?} for {kind}")]
    BadMagnitude { kind: &'static str, mag: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Multiply every channel by `1 + f`.
    Brightness(f64),
    /// `255 (v / 255)^gamma`
    Gamma(f64),
    /// Shift content by whole pixels; uncovered pixels repeat the edge.
    Translate(i32, i32),
    /// Move the image corners by up to the given number of pixels.
    Homography(f64),
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::Brightness(v) => write!(f, "brightness {v:+}"),
            Perturbation::Gamma(g) => write!(f, "gamma {g}"),
            Perturbation::Translate(dx, dy) => write!(f, "translate ({dx},{dy})"),
            Perturbation::Homography(m) => write!(f, "homography {m}px"),
        }
    }
}

impl Perturbation {
    /// Parses `kind` with its magnitude; translation takes `dx,dy`.
    pub fn parse(kind: &str, mag: &str) -> Result<Self, PerturbError> {
        let num = |kind: &'static str| {
            mag.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PerturbError::BadMagnitude {
                    kind,
                    mag: mag.to_string(),
                })
        };
        match kind {
            "brightness" => num("brightness").map(Perturbation::Brightness),
            "gamma" => num("gamma")
                .and_then(|g| {
                    if g > 0.0 {
                        Ok(g)
                    } else {
                        Err(PerturbError::BadMagnitude {
                            kind: "gamma",
                            mag: mag.to_string(),
                        })
                    }
                })
                .map(Perturbation::Gamma),
            "translate" => {
                let bad = || PerturbError::BadMagnitude {
                    kind: "translate",
                    mag: mag.to_string(),
                };
                let (dx, dy) = mag.split_once(',').unwrap_or((mag, "0"));
                Ok(Perturbation::Translate(
                    dx.trim().parse().map_err(|_| bad())?,
                    dy.trim().parse().map_err(|_| bad())?,
                ))
            }
            "homography" => num("homography").map(Perturbation::Homography),
            other => Err(PerturbError::UnknownKind(other.to_string())),
        }
    }

    pub fn apply(&self, img: &Image) -> Image {
        match *self {
            Perturbation::Brightness(f) => map_channels(img, |v| round_u8(v as f64 * (1.0 + f))),
            Perturbation::Gamma(g) => map_channels(img, |v| round_u8(255.0 * (v as f64 / 255.0).powf(g))),
            Perturbation::Translate(dx, dy) => {
                let (w, h) = img.dimensions();
                Image::from_fn(w, h, |x, y| {
                    let sx = (x as i64 - dx as i64).clamp(0, w as i64 - 1) as u32;
                    let sy = (y as i64 - dy as i64).clamp(0, h as i64 - 1) as u32;
                    *img.get_pixel(sx, sy)
                })
            }
            Perturbation::Homography(m) => corner_warp(img, m),
        }
    }
}

fn map_channels(img: &Image, f: impl Fn(u8) -> u8) -> Image {
    let lut: Vec<u8> = (0..=255u8).map(f).collect();
    let mut out = img.clone();
    for p in out.pixels_mut() {
        p.0 = p.0.map(|v| lut[v as usize]);
    }
    out
}

/// Keystone-like warp: each corner moves by `m` along a fixed pattern.
fn corner_warp(img: &Image, m: f64) -> Image {
    let (w, h) = img.dimensions();
    let (wf, hf) = ((w - 1) as f64, (h - 1) as f64);
    let src = [(0.0, 0.0), (wf, 0.0), (wf, hf), (0.0, hf)];
    let dst = [
        (m, m / 2.0),
        (wf - m / 2.0, m),
        (wf - m, hf - m / 2.0),
        (m / 2.0, hf - m),
    ];
    let Ok(inv) = homography_from_points(&dst, &src) else {
        return img.clone();
    };
    Image::from_fn(w, h, |x, y| {
        let (sx, sy) = inv.apply(x as f64, y as f64);
        let cx = sx.round().clamp(0.0, wf) as u32;
        let cy = sy.round().clamp(0.0, hf) as u32;
        Rgb(img.get_pixel(cx, cy).0)
    })
}
