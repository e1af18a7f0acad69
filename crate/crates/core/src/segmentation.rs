//! Linear spectral clustering superpixels.
//!
//! Every pixel `(l, a, b, x, y)` (Lab normalized to `[0, 1]`) is lifted into a
//! ten dimensional feature space through cosine/sine pairs, so that weighted
//! K-means in that space approximates normalized cuts on the pixel graph.
//! Clusters are seeded on a regular grid, each cluster only searches a window
//! of two seed spacings around its center, and after the last iteration
//! undersized fragments are merged into the neighbour they share the longest
//! border with.
//!
//! Segment IDs run from 1 to K and are ordered by the grid seed a segment grew
//! from, which keeps IDs stable under small photometric or geometric changes.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;

use image::{ImageBuffer, Luma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{rgb_to_lab_norm, Image, Mask};

/// Weight of the colour components in feature space.
const COLOR_COEFF: f64 = 20.0;
/// Extra weight on the chroma channels relative to lightness.
const CHROMA_SCALE: f64 = 2.55;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SegmentError {
    #[error("invalid segmentation parameter: {0}")]
    InvalidParams(String),
    #[error("average superpixel size {size} exceeds image area {area}")]
    SizeExceedsArea { size: u32, area: u32 },
    #[error("image has zero area")]
    EmptyImage,
    #[error("label map holds {0} segments, more than a 16-bit export can hold")]
    TooManySegments(usize),
    #[error("could not write label map: {0}")]
    Write(String),
}

/// Segmentation parameters, all serialized on the wire.
///
/// `compactness` is stored in hundredths: 10 means a spatial/colour weight
/// ratio of 0.10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegParams {
    pub avg_superpixel_size: u32,
    pub compactness: u32,
    pub min_merge_size: u32,
    pub iterations: u32,
}

impl Default for SegParams {
    fn default() -> Self {
        Self::tuned(1200, 10)
    }
}

impl SegParams {
    pub const FIXED_ITERATIONS: u32 = 10;

    /// Parameters from the two author-tunable values; the other two are fixed.
    pub fn tuned(avg_superpixel_size: u32, compactness: u32) -> Self {
        Self {
            avg_superpixel_size,
            compactness,
            min_merge_size: (avg_superpixel_size / 16).max(1),
            iterations: Self::FIXED_ITERATIONS,
        }
    }

    pub fn compactness_ratio(&self) -> f64 {
        self.compactness as f64 / 100.0
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        for (name, v) in [
            ("avg_superpixel_size", self.avg_superpixel_size),
            ("compactness", self.compactness),
            ("min_merge_size", self.min_merge_size),
            ("iterations", self.iterations),
        ] {
            if v == 0 {
                return Err(SegmentError::InvalidParams(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Per-pixel segment IDs in `1..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    ids: Vec<u32>,
    count: u32,
}

impl LabelMap {
    /// Builds a label map from raw IDs; IDs must cover `1..=max` without gaps.
    pub fn from_ids(width: u32, height: u32, ids: Vec<u32>) -> Option<Self> {
        if ids.len() != (width * height) as usize || ids.is_empty() {
            return None;
        }
        let count = *ids.iter().max()?;
        let mut seen = vec![false; count as usize + 1];
        for &id in &ids {
            if id == 0 {
                return None;
            }
            seen[id as usize] = true;
        }
        seen[1..].iter().all(|&s| s).then_some(Self {
            width,
            height,
            ids,
            count,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of segments K.
    pub fn segment_count(&self) -> u32 {
        self.count
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.ids[(y * self.width + x) as usize]
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn mask_of(&self, id: u32) -> Mask {
        Mask::from_fn(self.width, self.height, |x, y| self.get(x, y) == id)
    }

    /// Writes the IDs as a 16-bit grayscale PNG.
    pub fn save_png16(&self, path: &Path) -> Result<(), SegmentError> {
        self.to_png16()?.save(path).map_err(|e| SegmentError::Write(e.to_string()))?;
        Ok(())
    }

    /// PNG bytes of [`LabelMap::to_png16`].
    pub fn encode_png16(&self) -> Result<Vec<u8>, SegmentError> {
        let mut buf = std::io::Cursor::new(Vec::new());
        self.to_png16()?
            .write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|e| SegmentError::Write(e.to_string()))?;
        Ok(buf.into_inner())
    }

    pub fn to_png16(&self) -> Result<ImageBuffer<Luma<u16>, Vec<u16>>, SegmentError> {
        if self.count > u16::MAX as u32 {
            return Err(SegmentError::TooManySegments(self.count as usize));
        }
        Ok(ImageBuffer::from_fn(self.width, self.height, |x, y| {
            Luma([self.get(x, y) as u16])
        }))
    }
}

/// Segment descriptor stored on the wire: rounded centroid and pixel area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentFeature {
    pub cx: u32,
    pub cy: u32,
    pub area: u32,
}

impl SegmentFeature {
    pub fn new(cx: u32, cy: u32, area: u32) -> Self {
        Self { cx, cy, area }
    }
}

/// Features for every segment; entry `i` describes segment ID `i + 1`.
pub fn extract_features(labels: &LabelMap) -> Vec<SegmentFeature> {
    let k = labels.count as usize;
    let mut acc = vec![(0u64, 0u64, 0u64); k];
    for y in 0..labels.height {
        for x in 0..labels.width {
            let a = &mut acc[labels.get(x, y) as usize - 1];
            a.0 += x as u64;
            a.1 += y as u64;
            a.2 += 1;
        }
    }
    acc.into_iter()
        .map(|(sx, sy, n)| SegmentFeature {
            cx: round_half_up_div(sx, n),
            cy: round_half_up_div(sy, n),
            area: n as u32,
        })
        .collect()
}

fn round_half_up_div(sum: u64, n: u64) -> u32 {
    ((2 * sum + n) / (2 * n)) as u32
}

/// Writes `id,cx,cy,area` rows.
pub fn write_features_csv<W: Write>(mut out: W, feats: &[SegmentFeature]) -> std::io::Result<()> {
    writeln!(out, "id,cx,cy,area")?;
    for (i, f) in feats.iter().enumerate() {
        writeln!(out, "{},{},{},{}", i + 1, f.cx, f.cy, f.area)?;
    }
    Ok(())
}

const DIM: usize = 10;

struct Cluster {
    center: [f32; DIM],
    x: f64,
    y: f64,
}

/// Seed grid geometry shared by initialization and the search window.
#[derive(Debug, Clone, Copy)]
struct SeedGrid {
    nx: u32,
    ny: u32,
    step_x: f64,
    step_y: f64,
}

impl SeedGrid {
    fn new(width: u32, height: u32, avg: u32) -> Self {
        let step = (avg as f64).sqrt();
        let nx = ((width as f64 / step).round() as u32).clamp(1, width);
        let ny = ((height as f64 / step).round() as u32).clamp(1, height);
        Self {
            nx,
            ny,
            step_x: width as f64 / nx as f64,
            step_y: height as f64 / ny as f64,
        }
    }

    fn cell_of(&self, x: u32, y: u32) -> u32 {
        let i = ((x as f64 / self.step_x) as u32).min(self.nx - 1);
        let j = ((y as f64 / self.step_y) as u32).min(self.ny - 1);
        j * self.nx + i
    }
}

/// Segments `img` into compact superpixels.
pub fn segment(img: &Image, p: &SegParams) -> Result<LabelMap, SegmentError> {
    p.validate()?;
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(SegmentError::EmptyImage);
    }
    let area = w * h;
    if p.avg_superpixel_size > area {
        return Err(SegmentError::SizeExceedsArea {
            size: p.avg_superpixel_size,
            area,
        });
    }
    let grid = SeedGrid::new(w, h, p.avg_superpixel_size);
    let (features, weights) = feature_space(img, grid, p.compactness_ratio());
    let clusters = kmeans(&features, &weights, w, h, grid, p.iterations);
    Ok(enforce_connectivity(&clusters, w, h, p.min_merge_size))
}

/// Normalized features `phi(p) / w(p)` and the weights `w(p) = phi(p) . mean(phi)`.
fn feature_space(img: &Image, grid: SeedGrid, ratio: f64) -> (Vec<[f32; DIM]>, Vec<f32>) {
    let (w, h) = img.dimensions();
    let spatial = COLOR_COEFF * ratio;
    let raw = img.as_raw();
    let phi: Vec<[f64; DIM]> = (0..(w * h) as usize)
        .into_par_iter()
        .map(|i| {
            let x = (i as u32 % w) as f64;
            let y = (i as u32 / w) as f64;
            let lab = rgb_to_lab_norm([raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]]);
            let (sl, cl) = (lab.l * FRAC_PI_2).sin_cos();
            let (sa, ca) = (lab.a * FRAC_PI_2).sin_cos();
            let (sb, cb) = (lab.b * FRAC_PI_2).sin_cos();
            let (sx, cx) = (x / grid.step_x * FRAC_PI_2).sin_cos();
            let (sy, cy) = (y / grid.step_y * FRAC_PI_2).sin_cos();
            let cc = COLOR_COEFF;
            let ch = COLOR_COEFF * CHROMA_SCALE;
            [
                cc * cl,
                cc * sl,
                ch * ca,
                ch * sa,
                ch * cb,
                ch * sb,
                spatial * cx,
                spatial * sx,
                spatial * cy,
                spatial * sy,
            ]
        })
        .collect();

    // Sequential sum for a reproducible mean.
    let mut mean = [0f64; DIM];
    for v in &phi {
        for d in 0..DIM {
            mean[d] += v[d];
        }
    }
    let n = phi.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);

    phi.par_iter()
        .map(|v| {
            let wgt = v.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>().max(1e-6);
            let mut out = [0f32; DIM];
            for d in 0..DIM {
                out[d] = (v[d] / wgt) as f32;
            }
            (out, wgt as f32)
        })
        .unzip()
}

/// Weighted K-means restricted to local windows; returns per-pixel cluster index.
fn kmeans(
    features: &[[f32; DIM]],
    weights: &[f32],
    w: u32,
    h: u32,
    grid: SeedGrid,
    iterations: u32,
) -> Vec<u32> {
    let mut clusters: Vec<Cluster> = Vec::with_capacity((grid.nx * grid.ny) as usize);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let sx = (((i as f64 + 0.5) * grid.step_x) as u32).min(w - 1);
            let sy = (((j as f64 + 0.5) * grid.step_y) as u32).min(h - 1);
            clusters.push(Cluster {
                center: features[(sy * w + sx) as usize],
                x: sx as f64,
                y: sy as f64,
            });
        }
    }

    let mut labels: Vec<u32> = (0..w * h).map(|i| grid.cell_of(i % w, i / w)).collect();
    let mut dist = vec![f32::INFINITY; (w * h) as usize];
    let wi = w as usize;

    for _ in 0..iterations {
        dist.fill(f32::INFINITY);
        for (k, c) in clusters.iter().enumerate() {
            let x0 = (c.x - grid.step_x).floor().max(0.0) as usize;
            let x1 = ((c.x + grid.step_x).ceil() as usize).min(wi - 1);
            let y0 = (c.y - grid.step_y).floor().max(0.0) as usize;
            let y1 = ((c.y + grid.step_y).ceil() as usize).min(h as usize - 1);
            for y in y0..=y1 {
                let row = y * wi;
                for x in x0..=x1 {
                    let idx = row + x;
                    let f = &features[idx];
                    let mut d = 0f32;
                    for k2 in 0..DIM {
                        let t = f[k2] - c.center[k2];
                        d += t * t;
                    }
                    if d < dist[idx] {
                        dist[idx] = d;
                        labels[idx] = k as u32;
                    }
                }
            }
        }

        let mut sum_phi = vec![[0f64; DIM]; clusters.len()];
        let mut sum_w = vec![0f64; clusters.len()];
        let mut sum_xy = vec![(0f64, 0f64, 0u64); clusters.len()];
        for (idx, &k) in labels.iter().enumerate() {
            let k = k as usize;
            let wgt = weights[idx] as f64;
            let f = &features[idx];
            for d in 0..DIM {
                sum_phi[k][d] += f[d] as f64 * wgt;
            }
            sum_w[k] += wgt;
            let s = &mut sum_xy[k];
            s.0 += (idx % wi) as f64;
            s.1 += (idx / wi) as f64;
            s.2 += 1;
        }
        for (k, c) in clusters.iter_mut().enumerate() {
            let (sx, sy, n) = sum_xy[k];
            if n == 0 {
                continue;
            }
            for d in 0..DIM {
                c.center[d] = (sum_phi[k][d] / sum_w[k]) as f32;
            }
            c.x = sx / n as f64;
            c.y = sy / n as f64;
        }
    }
    labels
}

struct Component {
    cluster: u32,
    size: u32,
    first_pixel: u32,
}

/// Splits clusters into 4-connected components, absorbs small components and
/// stray fragments into their longest-border neighbour, and assigns final IDs
/// in seed order.
fn enforce_connectivity(clusters: &[u32], w: u32, h: u32, min_size: u32) -> LabelMap {
    let n = (w * h) as usize;
    let wi = w as usize;
    const UNSET: u32 = u32::MAX;
    let mut comp_of = vec![UNSET; n];
    let mut comps: Vec<Component> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp_of[start] != UNSET {
            continue;
        }
        let id = comps.len() as u32;
        let cl = clusters[start];
        comp_of[start] = id;
        queue.push_back(start);
        let mut size = 0u32;
        while let Some(p) = queue.pop_front() {
            size += 1;
            let (x, y) = (p % wi, p / wi);
            let mut visit = |q: usize| {
                if comp_of[q] == UNSET && clusters[q] == cl {
                    comp_of[q] = id;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < wi {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - wi);
            }
            if y + 1 < h as usize {
                visit(p + wi);
            }
        }
        comps.push(Component {
            cluster: cl,
            size,
            first_pixel: start as u32,
        });
    }

    // Shared border lengths between components.
    let mut adj: Vec<BTreeMap<u32, u32>> = (0..comps.len()).map(|_| BTreeMap::new()).collect();
    for y in 0..h as usize {
        for x in 0..wi {
            let p = y * wi + x;
            let a = comp_of[p];
            if x + 1 < wi {
                let b = comp_of[p + 1];
                if a != b {
                    *adj[a as usize].entry(b).or_default() += 1;
                    *adj[b as usize].entry(a).or_default() += 1;
                }
            }
            if y + 1 < h as usize {
                let b = comp_of[p + wi];
                if a != b {
                    *adj[a as usize].entry(b).or_default() += 1;
                    *adj[b as usize].entry(a).or_default() += 1;
                }
            }
        }
    }

    // Only the largest piece of each cluster keeps its own label; stray
    // fragments are absorbed whatever their size, so every surviving segment
    // maps to one seed and IDs stay put when the image changes slightly.
    let mut primary: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, c) in comps.iter().enumerate() {
        let e = primary.entry(c.cluster).or_insert(i);
        if comps[*e].size < c.size {
            *e = i;
        }
    }
    let fragment: Vec<bool> = comps
        .iter()
        .enumerate()
        .map(|(i, c)| primary[&c.cluster] != i)
        .collect();

    let mut parent: Vec<u32> = (0..comps.len() as u32).collect();
    let mut alive = vec![true; comps.len()];
    loop {
        let mut changed = false;
        for i in 0..comps.len() {
            if !alive[i] || (comps[i].size >= min_size && !fragment[i]) {
                continue;
            }
            // Longest shared border, lowest ID on ties (BTreeMap iterates ascending).
            let Some((&target, _)) = adj[i]
                .iter()
                .fold(None::<(&u32, &u32)>, |best, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                })
            else {
                continue;
            };
            let t = target as usize;
            let neighbours = std::mem::take(&mut adj[i]);
            for (nb, len) in neighbours {
                if nb as usize == t {
                    continue;
                }
                *adj[t].entry(nb).or_default() += len;
                let nb_adj = &mut adj[nb as usize];
                nb_adj.remove(&(i as u32));
                *nb_adj.entry(target).or_default() += len;
            }
            adj[t].remove(&(i as u32));
            comps[t].size += comps[i].size;
            alive[i] = false;
            parent[i] = target;
            changed = true;
        }
        if !changed {
            break;
        }
    }

    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            let gp = parent[parent[i as usize] as usize];
            parent[i as usize] = gp;
            i = gp;
        }
        i
    }

    let mut survivors: Vec<u32> = (0..comps.len() as u32).filter(|&i| alive[i as usize]).collect();
    survivors.sort_by_key(|&i| {
        let c = &comps[i as usize];
        (c.cluster, std::cmp::Reverse(c.size), c.first_pixel)
    });
    // A segment keeps `seed index + 1` as its ID whenever that fits in 1..=K;
    // the rest fill the gaps left by vanished seeds in order. A vanished
    // seed then renumbers only the last few segments instead of every one
    // after it.
    let k = survivors.len() as u32;
    let mut final_id = vec![0u32; comps.len()];
    let mut taken = vec![false; k as usize + 1];
    let mut overflow = Vec::new();
    let mut last_cluster = None;
    for &s in &survivors {
        let cl = comps[s as usize].cluster;
        if cl < k && last_cluster != Some(cl) {
            final_id[s as usize] = cl + 1;
            taken[cl as usize + 1] = true;
        } else {
            overflow.push(s);
        }
        last_cluster = Some(cl);
    }
    let gaps = (1..=k).filter(|&id| !taken[id as usize]);
    for (s, id) in overflow.into_iter().zip(gaps) {
        final_id[s as usize] = id;
    }
    let ids = comp_of
        .iter()
        .map(|&c| final_id[find(&mut parent, c) as usize])
        .collect();
    LabelMap {
        width: w,
        height: h,
        ids,
        count: survivors.len() as u32,
    }
}
