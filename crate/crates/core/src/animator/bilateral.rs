//! Bilateral background filter used behind annotations.

use image::Rgb;
use rayon::prelude::*;

use crate::imagecore::{round_u8, Image, Mask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    /// Window diameter in pixels; the window is the disc of that diameter.
    pub diameter: u32,
    pub sigma_range: f64,
    pub sigma_space: f64,
    /// Intensity factor applied to every filtered pixel.
    pub dim: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            diameter: 15,
            sigma_range: 80.0,
            sigma_space: 80.0,
            dim: 0.7,
        }
    }
}

/// Replaces every pixel outside `keep` by `dim` times its bilateral mean.
///
/// The range kernel acts on the Euclidean RGB distance between the centre
/// and each window pixel. Window pixels falling outside the image are skipped.
pub fn bilateral_dim(img: &Image, keep: &Mask, p: &BilateralParams) -> Image {
    let (w, h) = img.dimensions();
    assert_eq!((w, h), keep.dimensions());
    let radius = (p.diameter / 2) as i32;
    let offsets: Vec<(i32, i32, f64)> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx * dx + dy * dy <= radius * radius)
        .map(|(dx, dy)| {
            let d2 = (dx * dx + dy * dy) as f64;
            (dx, dy, (-d2 / (2.0 * p.sigma_space * p.sigma_space)).exp())
        })
        .collect();
    // Squared RGB distance tops out at 3 * 255^2.
    let range_lut: Vec<f64> = (0..=3 * 255 * 255)
        .map(|d2| (-(d2 as f64) / (2.0 * p.sigma_range * p.sigma_range)).exp())
        .collect();

    let raw = img.as_raw();
    let px = |x: i32, y: i32| {
        let i = 3 * (y as usize * w as usize + x as usize);
        [raw[i] as i32, raw[i + 1] as i32, raw[i + 2] as i32]
    };
    let rows: Vec<Vec<u8>> = (0..h as i32)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(3 * w as usize);
            for x in 0..w as i32 {
                let c = px(x, y);
                if keep.get(x as u32, y as u32) {
                    row.extend_from_slice(&c.map(|v| v as u8));
                    continue;
                }
                let mut acc = [0f64; 3];
                let mut wsum = 0f64;
                for &(dx, dy, ws) in &offsets {
                    let (qx, qy) = (x + dx, y + dy);
                    if qx < 0 || qy < 0 || qx >= w as i32 || qy >= h as i32 {
                        continue;
                    }
                    let q = px(qx, qy);
                    let d2 = (q[0] - c[0]).pow(2) + (q[1] - c[1]).pow(2) + (q[2] - c[2]).pow(2);
                    let wt = ws * range_lut[d2 as usize];
                    for ch in 0..3 {
                        acc[ch] += wt * q[ch] as f64;
                    }
                    wsum += wt;
                }
                row.extend_from_slice(&acc.map(|v| round_u8(p.dim * v / wsum)));
            }
            row
        })
        .collect();
    Image::from_raw(w, h, rows.concat()).expect("row sizes match")
}

/// Scales a pixel by `dim`, the filter's fixed point on flat regions.
pub fn dimmed(c: Rgb<u8>, dim: f64) -> Rgb<u8> {
    Rgb(c.0.map(|v| round_u8(dim * v as f64)))
}
