//! 3x3 projective transforms, the per-frame keyframe matrices and
//! nearest-neighbour mask warping.

use std::ops::Mul;

use thiserror::Error;

use crate::codec::{Interp, Move2D, Point, Seconds, Warp3D};
use crate::imagecore::Mask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("singular linear system while solving for a homography")]
    Singular,
}

/// Row-major homogeneous transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub [[f64; 3]; 3]);

impl Default for Homography {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for Homography {
    type Output = Homography;

    fn mul(self, rhs: Homography) -> Homography {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Homography(out)
    }
}

impl Homography {
    pub const IDENTITY: Homography = Homography([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])
    }

    /// `[[cos, sin], [-sin, cos]]` in image coordinates (y pointing down).
    pub fn rotation_deg(theta: f64) -> Self {
        let (s, c) = theta.to_radians().sin_cos();
        Homography([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.0;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        (
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        )
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Option<Homography> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return None;
        }
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        Some(Homography(adj.map(|row| row.map(|v| v / det))))
    }
}

/// Interpolation ratio for 1-based frame `i`, clamped to 1.
pub fn interp_ratio(i: u32, duration: Seconds, interp: Interp) -> f64 {
    let lin = (i as f64 / (3.0 * duration.tenths() as f64)).min(1.0);
    match interp {
        Interp::Linear => lin,
        Interp::Quadratic => lin * lin,
    }
}

/// `T(r t) T(c) R(r theta) T(-c)`: rotate about the ROI centre, then translate.
pub fn move2d_matrix(kf: &Move2D, center: (f64, f64), r: f64) -> Homography {
    Homography::translation(r * kf.tx as f64, r * kf.ty as f64)
        * Homography::translation(center.0, center.1)
        * Homography::rotation_deg(r * kf.theta as f64)
        * Homography::translation(-center.0, -center.1)
}

/// Solves `A x = b` for an 8x8 system by Gaussian elimination with partial pivoting.
fn solve8(mut a: [[f64; 8]; 8], mut b: [f64; 8]) -> Result<[f64; 8], GeometryError> {
    let scale = a.iter().flatten().fold(0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() <= 1e-10 * scale {
            return Err(GeometryError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..8 {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..8 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0f64; 8];
    for row in (0..8).rev() {
        let s: f64 = (row + 1..8).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Homography with `m_ww = 1` mapping each `src[j]` onto `dst[j]`.
pub fn homography_from_points(src: &[(f64, f64); 4], dst: &[(f64, f64); 4]) -> Result<Homography, GeometryError> {
    let mut a = [[0f64; 8]; 8];
    let mut b = [0f64; 8];
    for j in 0..4 {
        let (x, y) = src[j];
        let (u, v) = dst[j];
        a[2 * j] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y];
        b[2 * j] = u;
        a[2 * j + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y];
        b[2 * j + 1] = v;
    }
    let m = solve8(a, b)?;
    let h = Homography([[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], 1.0]]);
    if h.0.iter().flatten().all(|v| v.is_finite()) {
        Ok(h)
    } else {
        Err(GeometryError::Singular)
    }
}

fn to_f64(p: &Point) -> (f64, f64) {
    (p.x as f64, p.y as f64)
}

/// Per-frame matrix: source corners mapped onto corners moved `r` of the way.
pub fn warp3d_matrix(kf: &Warp3D, r: f64) -> Result<Homography, GeometryError> {
    if r == 0.0 {
        return Ok(Homography::IDENTITY);
    }
    let src = kf.src.map(|p| to_f64(&p));
    let mut dst = src;
    for (d, p) in dst.iter_mut().zip(&kf.dst) {
        d.0 += r * (p.x as f64 - d.0);
        d.1 += r * (p.y as f64 - d.1);
    }
    homography_from_points(&src, &dst)
}

/// Nearest-neighbour warp of a binary mask through `h` (inverse mapping).
pub fn warp_mask(mask: &Mask, h: &Homography) -> Result<Mask, GeometryError> {
    let inv = h.inverse().ok_or(GeometryError::Singular)?;
    Ok(warp_mask_inverse(mask, &inv))
}

pub(crate) fn warp_mask_inverse(mask: &Mask, inv: &Homography) -> Mask {
    Mask::from_fn(mask.width(), mask.height(), |x, y| {
        let (sx, sy) = inv.apply(x as f64, y as f64);
        sx.is_finite() && sy.is_finite() && mask.get_signed(sx.round() as i64, sy.round() as i64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Homography, b: &Homography, tol: f64) -> bool {
        a.0.iter().flatten().zip(b.0.iter().flatten()).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn inverse_round_trip() {
        let h = Homography([[1.1, 0.2, 5.0], [-0.1, 0.9, -3.0], [0.0005, 0.0002, 1.0]]);
        assert!(close(&(h * h.inverse().unwrap()), &Homography::IDENTITY, 1e-12));
    }

    #[test]
    fn move_matrix_endpoints() {
        let kf = Move2D {
            tx: 50,
            ty: -20,
            theta: 90,
            duration: Seconds::from_tenths(10),
            interp: Interp::Linear,
        };
        let c = (100.0, 80.0);
        assert!(close(&move2d_matrix(&kf, c, 0.0), &Homography::IDENTITY, 1e-12));
        let m = move2d_matrix(&kf, c, 1.0);
        let (x, y) = m.apply(c.0, c.1);
        assert!((x - 150.0).abs() < 1e-9 && (y - 60.0).abs() < 1e-9);
        // cos 90 = 0, sin 90 = 1: (dx, dy) = (10, 0) maps to (0, -10).
        let (x, y) = m.apply(110.0, 80.0);
        assert!((x - 150.0).abs() < 1e-9 && (y - 50.0).abs() < 1e-9);
    }

    #[test]
    fn interp_laws() {
        let t = Seconds::from_tenths(20);
        assert_eq!(interp_ratio(15, t, Interp::Linear), 0.25);
        assert_eq!(interp_ratio(15, t, Interp::Quadratic), 0.0625);
        assert_eq!(interp_ratio(60, t, Interp::Quadratic), 1.0);
        assert_eq!(interp_ratio(99, t, Interp::Linear), 1.0);
    }

    #[test]
    fn collinear_sources_are_singular() {
        let src = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)];
        assert_eq!(homography_from_points(&src, &src), Err(GeometryError::Singular));
    }

    #[test]
    fn translating_mask_by_integer_is_exact() {
        let m = Mask::from_fn(50, 40, |x, y| (10..20).contains(&x) && (5..12).contains(&y));
        let w = warp_mask(&m, &Homography::translation(7.0, -2.0)).unwrap();
        let expect = Mask::from_fn(50, 40, |x, y| (17..27).contains(&x) && (3..10).contains(&y));
        assert_eq!(w, expect);
    }
}
