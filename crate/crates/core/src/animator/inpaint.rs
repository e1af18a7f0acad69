//! Fast-marching inpainting (Telea).
//!
//! Hole pixels are filled in order of increasing distance from the hole
//! boundary. Each newly reached pixel takes a weighted average of the known
//! pixels within `radius`, extrapolated along their image gradient, with
//! weights favouring neighbours along the marching normal, nearby and on the
//! same distance level.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use image::Rgb;

use crate::imagecore::{Image, Mask};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flag {
    Known,
    Band,
    Inside,
}

const FAR: f64 = 1.0e6;

#[derive(PartialEq)]
struct Entry {
    t: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on t, then on index for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Field {
    w: usize,
    h: usize,
    flag: Vec<Flag>,
    t: Vec<f64>,
    img: Vec<[f64; 3]>,
}

impl Field {
    fn solve(&self, a: Option<usize>, b: Option<usize>) -> f64 {
        let known = |i: Option<usize>| i.filter(|&i| self.flag[i] == Flag::Known);
        match (known(a), known(b)) {
            (Some(i), Some(j)) => {
                let (t1, t2) = (self.t[i], self.t[j]);
                let d = 2.0 - (t1 - t2) * (t1 - t2);
                if d < 0.0 {
                    return 1.0 + t1.min(t2);
                }
                let r = d.sqrt();
                let s = (t1 + t2 - r) / 2.0;
                if s >= t1 && s >= t2 {
                    s
                } else {
                    let s = s + r;
                    if s >= t1 && s >= t2 {
                        s
                    } else {
                        1.0 + t1.min(t2)
                    }
                }
            }
            (Some(i), None) => 1.0 + self.t[i],
            (None, Some(j)) => 1.0 + self.t[j],
            (None, None) => FAR,
        }
    }

    fn at(&self, x: isize, y: isize) -> Option<usize> {
        (x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h)
            .then(|| y as usize * self.w + x as usize)
    }

    fn usable(&self, i: Option<usize>) -> Option<usize> {
        i.filter(|&i| self.flag[i] != Flag::Inside)
    }

    /// Central difference where both sides are usable, one-sided otherwise.
    fn diff<F: Fn(usize) -> f64>(&self, c: usize, lo: Option<usize>, hi: Option<usize>, val: F) -> f64 {
        match (self.usable(lo), self.usable(hi)) {
            (Some(l), Some(h)) => (val(h) - val(l)) * 0.5,
            (Some(l), None) => val(c) - val(l),
            (None, Some(h)) => val(h) - val(c),
            (None, None) => 0.0,
        }
    }

    fn inpaint_pixel(&mut self, x: usize, y: usize, radius: isize) {
        let (xi, yi) = (x as isize, y as isize);
        let c = y * self.w + x;
        let grad_t = (
            self.diff(c, self.at(xi - 1, yi), self.at(xi + 1, yi), |i| self.t[i]),
            self.diff(c, self.at(xi, yi - 1), self.at(xi, yi + 1), |i| self.t[i]),
        );
        let mut acc = [0f64; 3];
        let mut wsum = 0f64;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                if dx * dx + dy * dy > radius * radius {
                    continue;
                }
                let (qx, qy) = (xi + dx, yi + dy);
                let Some(q) = self.usable(self.at(qx, qy)) else {
                    continue;
                };
                if q == c {
                    continue;
                }
                // r points from the neighbour to the pixel being filled.
                let (rx, ry) = (-dx as f64, -dy as f64);
                let len2 = rx * rx + ry * ry;
                let dst = 1.0 / (len2 * len2.sqrt());
                let lev = 1.0 / (1.0 + (self.t[q] - self.t[c]).abs());
                let mut dir = rx * grad_t.0 + ry * grad_t.1;
                if dir.abs() <= 0.01 {
                    dir = 1.0e-6;
                }
                let wgt = (dst * lev * dir).abs();
                for ch in 0..3 {
                    let gx = self.diff(q, self.at(qx - 1, qy), self.at(qx + 1, qy), |i| self.img[i][ch]);
                    let gy = self.diff(q, self.at(qx, qy - 1), self.at(qx, qy + 1), |i| self.img[i][ch]);
                    acc[ch] += wgt * (self.img[q][ch] + gx * rx + gy * ry);
                }
                wsum += wgt;
            }
        }
        if wsum > 0.0 {
            self.img[c] = acc.map(|v| (v / wsum).clamp(0.0, 255.0));
        }
    }
}

/// Fills the pixels of `hole` from their surroundings.
///
/// Pixels outside the hole are returned unchanged. A hole covering the whole
/// image has nothing to propagate from and is filled with black.
pub fn inpaint_telea(img: &Image, hole: &Mask, radius: u32) -> Image {
    let (w, h) = img.dimensions();
    assert_eq!((w, h), hole.dimensions(), "mask and image sizes differ");
    let (wu, hu) = (w as usize, h as usize);
    let n = wu * hu;
    let mut f = Field {
        w: wu,
        h: hu,
        flag: vec![Flag::Known; n],
        t: vec![0.0; n],
        img: img.pixels().map(|p| p.0.map(f64::from)).collect(),
    };
    for (i, &b) in hole.bits().iter().enumerate() {
        if b {
            f.flag[i] = Flag::Inside;
            f.t[i] = FAR;
            f.img[i] = [0.0; 3];
        }
    }
    if hole.is_empty() {
        return img.clone();
    }

    let neighbours = |i: usize| {
        let (x, y) = ((i % wu) as isize, (i / wu) as isize);
        [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
    };

    let mut heap = BinaryHeap::new();
    for i in 0..n {
        if f.flag[i] == Flag::Known
            && neighbours(i)
                .iter()
                .any(|&(x, y)| f.at(x, y).is_some_and(|q| f.flag[q] == Flag::Inside))
        {
            f.flag[i] = Flag::Band;
            heap.push(Entry { t: 0.0, idx: i });
        }
    }

    // Known pixels near the hole get negative distance levels so that `lev`
    // favours neighbours on the same side of the front.
    let reach = radius as isize + 1;
    for i in 0..n {
        if f.flag[i] != Flag::Known {
            continue;
        }
        let (x, y) = ((i % wu) as isize, (i / wu) as isize);
        let mut best = f64::INFINITY;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if let Some(q) = f.at(x + dx, y + dy) {
                    if f.flag[q] == Flag::Inside {
                        best = best.min(((dx * dx + dy * dy) as f64).sqrt());
                    }
                }
            }
        }
        if best.is_finite() {
            f.t[i] = -(best - 1.0);
        }
    }

    while let Some(Entry { idx, .. }) = heap.pop() {
        if f.flag[idx] == Flag::Known {
            continue;
        }
        f.flag[idx] = Flag::Known;
        for (x, y) in neighbours(idx) {
            let Some(q) = f.at(x, y) else { continue };
            if f.flag[q] == Flag::Known {
                continue;
            }
            let (l, r, u, d) = (f.at(x - 1, y), f.at(x + 1, y), f.at(x, y - 1), f.at(x, y + 1));
            let t = f
                .solve(l, u)
                .min(f.solve(r, u))
                .min(f.solve(l, d))
                .min(f.solve(r, d));
            f.t[q] = t;
            if f.flag[q] == Flag::Inside {
                f.inpaint_pixel(x as usize, y as usize, radius as isize);
                f.flag[q] = Flag::Band;
                heap.push(Entry { t, idx: q });
            }
        }
    }

    let mut out = img.clone();
    for (i, &b) in hole.bits().iter().enumerate() {
        if b {
            let v = f.img[i].map(|c| (c + 0.5).floor() as u8);
            out.put_pixel((i % wu) as u32, (i / wu) as u32, Rgb(v));
        }
    }
    out
}
