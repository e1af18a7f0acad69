//! Shared image representation: RGB images, binary masks, colour conversions,
//! elliptical dilation and normalization to the canonical 640x480 canvas.

use image::{Rgb, RgbImage};
use thiserror::Error;

/// Canonical working width in pixels.
pub const CANVAS_WIDTH: u32 = 640;
/// Canonical working height in pixels.
pub const CANVAS_HEIGHT: u32 = 480;
/// Pixel count of the canonical canvas.
pub const CANVAS_AREA: u32 = CANVAS_WIDTH * CANVAS_HEIGHT;

/// 8-bit RGB, row-major.
pub type Image = RgbImage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("invalid image: {width}x{height}")]
    InvalidImage { width: u32, height: u32 },
}

/// Per-pixel boolean mask.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("count", &self.count())
            .finish()
    }
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; (width * height) as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![true; (width * height) as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    /// Bounds-checked lookup for signed coordinates; outside reads as unset.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && self.bits[(y as u32 * self.width + x as u32) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width;
        self.bits[(y * w + x) as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn union_with(&mut self, other: &Mask) {
        assert_eq!(self.dimensions(), other.dimensions());
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Mean coordinate of set pixels, `None` for an empty mask.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
        for y in 0..self.height {
            let row = &self.bits[(y * self.width) as usize..((y + 1) * self.width) as usize];
            for (x, &b) in row.iter().enumerate() {
                if b {
                    sx += x as u64;
                    sy += y as u64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (sx as f64 / n as f64, sy as f64 / n as f64))
    }

    /// Intersection over union; two empty masks count as identical.
    pub fn iou(&self, other: &Mask) -> f64 {
        assert_eq!(self.dimensions(), other.dimensions());
        let (mut inter, mut uni) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            uni += (a || b) as usize;
        }
        if uni == 0 {
            1.0
        } else {
            inter as f64 / uni as f64
        }
    }
}

/// Area-average resampling of `img` to the canonical 640x480 canvas.
///
/// The aspect ratio is not preserved: inputs are stretched so that author and
/// consumer coordinates stay comparable.
pub fn normalize(img: &Image) -> Result<Image, ImageError> {
    resize_area(img, CANVAS_WIDTH, CANVAS_HEIGHT)
}

/// Box-filter resize where each output pixel is the coverage-weighted mean of
/// the input pixels its footprint overlaps.
pub fn resize_area(img: &Image, out_w: u32, out_h: u32) -> Result<Image, ImageError> {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(ImageError::InvalidImage {
            width: w,
            height: h,
        });
    }
    if out_w == 0 || out_h == 0 {
        return Err(ImageError::InvalidImage {
            width: out_w,
            height: out_h,
        });
    }
    if (w, h) == (out_w, out_h) {
        return Ok(img.clone());
    }
    let xw = area_weights(w, out_w);
    let yw = area_weights(h, out_h);

    // Horizontal pass into f64 rows, then vertical pass.
    let mut tmp = vec![0f64; (out_w * h * 3) as usize];
    for y in 0..h {
        for (ox, taps) in xw.iter().enumerate() {
            let mut acc = [0f64; 3];
            for &(sx, wgt) in taps {
                let p = img.get_pixel(sx, y).0;
                for c in 0..3 {
                    acc[c] += p[c] as f64 * wgt;
                }
            }
            let base = ((y * out_w + ox as u32) * 3) as usize;
            tmp[base..base + 3].copy_from_slice(&acc);
        }
    }
    let mut out = Image::new(out_w, out_h);
    for (oy, taps) in yw.iter().enumerate() {
        for ox in 0..out_w {
            let mut acc = [0f64; 3];
            for &(sy, wgt) in taps {
                let base = ((sy * out_w + ox) * 3) as usize;
                for c in 0..3 {
                    acc[c] += tmp[base + c] * wgt;
                }
            }
            out.put_pixel(ox, oy as u32, Rgb(acc.map(round_u8)));
        }
    }
    Ok(out)
}

/// Per output index, the contributing input indices with normalized coverage.
fn area_weights(src: u32, dst: u32) -> Vec<Vec<(u32, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = lo + scale;
            let mut taps = Vec::new();
            let mut s = lo.floor() as u32;
            while (s as f64) < hi && s < src {
                let cover = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                if cover > 0.0 {
                    taps.push((s, cover / scale));
                }
                s += 1;
            }
            taps
        })
        .collect()
}

#[inline]
pub(crate) fn round_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// CIELAB with every component linearly mapped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvColor {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const EPS: f64 = 216.0 / 24389.0;
    const KAPPA: f64 = 24389.0 / 27.0;
    if t > EPS {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// sRGB (D65) to CIELAB, then `L/100`, `(a+128)/255`, `(b+128)/255`, clamped.
pub fn rgb_to_lab_norm(c: [u8; 3]) -> LabColor {
    let (r, g, b) = (
        srgb_to_linear(c[0]),
        srgb_to_linear(c[1]),
        srgb_to_linear(c[2]),
    );
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    let (fx, fy, fz) = (lab_f(x / 0.950_47), lab_f(y), lab_f(z / 1.088_83));
    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let bb = 200.0 * (fy - fz);
    LabColor {
        l: (l / 100.0).clamp(0.0, 1.0),
        a: ((a + 128.0) / 255.0).clamp(0.0, 1.0),
        b: ((bb + 128.0) / 255.0).clamp(0.0, 1.0),
    }
}

pub fn rgb_to_hsv(c: [u8; 3]) -> HsvColor {
    let r = c[0] as f64 / 255.0;
    let g = c[1] as f64 / 255.0;
    let b = c[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    HsvColor {
        h: wrap_hue(h),
        s,
        v: max,
    }
}

pub fn hsv_to_rgb(c: HsvColor) -> [u8; 3] {
    let h = wrap_hue(c.h);
    let chroma = c.v * c.s;
    let hp = h / 60.0;
    let x = chroma * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = c.v - chroma;
    [
        round_u8((r1 + m) * 255.0),
        round_u8((g1 + m) * 255.0),
        round_u8((b1 + m) * 255.0),
    ]
}

/// Hue wrapped into `[0, 360)`.
pub fn wrap_hue(h: f64) -> f64 {
    let w = h.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Elliptical structuring element with a `(2*size+1)` square bounding box,
/// returned as the half-width of each row for `dy = -size..=size`.
pub fn ellipse_kernel(size: u32) -> Vec<(i32, i32)> {
    let r = size as i32;
    let inv_r2 = if r > 0 { 1.0 / (r as f64 * r as f64) } else { 0.0 };
    (-r..=r)
        .map(|dy| {
            let dx = (r as f64 * (((r * r - dy * dy) as f64) * inv_r2).sqrt()).round_ties_even() as i32;
            (dy, dx)
        })
        .collect()
}

/// Dilation by the elliptical element of [`ellipse_kernel`].
pub fn dilate_elliptical(m: &Mask, size: u32) -> Mask {
    let (w, h) = m.dimensions();
    if size == 0 || w == 0 || h == 0 {
        return m.clone();
    }
    let kernel = ellipse_kernel(size);
    let mut radii: Vec<i32> = kernel.iter().map(|&(_, dx)| dx).collect();
    radii.sort_unstable();
    radii.dedup();

    // Horizontal dilations of every row for each distinct half-width.
    let wi = w as usize;
    let mut hdil: Vec<Vec<bool>> = Vec::with_capacity(radii.len());
    let mut prefix = vec![0u32; wi + 1];
    for &rad in &radii {
        let mut plane = vec![false; wi * h as usize];
        for y in 0..h as usize {
            let row = &m.bits[y * wi..(y + 1) * wi];
            for x in 0..wi {
                prefix[x + 1] = prefix[x] + row[x] as u32;
            }
            for x in 0..wi {
                let lo = x.saturating_sub(rad as usize);
                let hi = (x + rad as usize + 1).min(wi);
                plane[y * wi + x] = prefix[hi] > prefix[lo];
            }
        }
        hdil.push(plane);
    }

    let mut out = Mask::new(w, h);
    for y in 0..h as i32 {
        let dst = &mut out.bits[y as usize * wi..(y as usize + 1) * wi];
        for &(dy, dx) in &kernel {
            let sy = y + dy;
            if sy < 0 || sy >= h as i32 {
                continue;
            }
            let plane = &hdil[radii.binary_search(&dx).unwrap()];
            let src = &plane[sy as usize * wi..(sy as usize + 1) * wi];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d |= s;
            }
        }
    }
    out
}
