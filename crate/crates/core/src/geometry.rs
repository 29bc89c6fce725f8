//! Convex quadrilaterals in pixel coordinates.
//!
//! Pixel `(x, y)` covers `[x, x+1) x [y, y+1)`; a pixel belongs to a region
//! when its centre `(x + 0.5, y + 0.5)` lies inside (or on) the quadrilateral.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Scalar")]
pub struct Quad<T>(pub [[T; 2]; 4]);

impl<T: Scalar> Quad<T> {
    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: T, y0: T, x1: T, y1: T) -> Self {
        Quad([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    /// Vertex mean.
    pub fn centroid(&self) -> [T; 2] {
        let four = T::of(4.0);
        let sx: T = self.0.iter().map(|v| v[0]).sum();
        let sy: T = self.0.iter().map(|v| v[1]).sum();
        [sx / four, sy / four]
    }

    /// Moves every vertex toward the centroid; `inset = 0.5` would collapse it.
    pub fn inset(&self, inset: T) -> Self {
        let c = self.centroid();
        let keep = T::one() - T::of(2.0) * inset;
        Quad(
            self.0
                .map(|v| [c[0] + keep * (v[0] - c[0]), c[1] + keep * (v[1] - c[1])]),
        )
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        let (w, h) = (T::of_usize(width), T::of_usize(height));
        self.0.iter().all(|v| {
            v[0].is_finite() && v[1].is_finite() && v[0] >= T::zero() && v[1] >= T::zero() && v[0] <= w && v[1] <= h
        })
    }

    /// Point-in-convex-polygon by edge cross products (either winding).
    pub fn contains(&self, p: [T; 2]) -> bool {
        let mut pos = false;
        let mut neg = false;
        for i in 0..4 {
            let a = self.0[i];
            let b = self.0[(i + 1) % 4];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            pos |= cross > T::zero();
            neg |= cross < T::zero();
        }
        !(pos && neg)
    }

    /// Pixels whose centres fall inside, in row-major order, clipped to the image.
    pub fn pixels(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        let lo = |k: usize| {
            self.0
                .iter()
                .map(|v| v[k])
                .fold(T::infinity(), T::min)
                .floor()
                .max(T::zero())
                .to_usize()
                .unwrap_or(0)
        };
        let hi = |k: usize, limit: usize| {
            self.0
                .iter()
                .map(|v| v[k])
                .fold(T::neg_infinity(), T::max)
                .ceil()
                .max(T::zero())
                .to_usize()
                .unwrap_or(0)
                .min(limit)
        };
        let half = T::of(0.5);
        let mut out = Vec::new();
        for y in lo(1)..hi(1, height) {
            for x in lo(0)..hi(0, width) {
                if self.contains([T::of_usize(x) + half, T::of_usize(y) + half]) {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_pixels() {
        let q = Quad::rect(1.0f64, 2.0, 4.0, 4.0);
        let px = q.pixels(10, 10);
        assert_eq!(px.len(), 6);
        assert_eq!(px[0], (1, 2));
        assert_eq!(px[5], (3, 3));
    }

    #[test]
    fn inset_shrinks_about_centroid() {
        let q = Quad::rect(0.0f64, 0.0, 10.0, 10.0).inset(0.25);
        assert_eq!(q.0[0], [2.5, 2.5]);
        assert_eq!(q.0[2], [7.5, 7.5]);
        // Centres 2.5..=7.5 lie inside or on the boundary.
        assert_eq!(q.pixels(10, 10).len(), 36);
    }

    #[test]
    fn winding_does_not_matter() {
        let mut q = Quad::rect(0.0f64, 0.0, 4.0, 2.0);
        let n = q.pixels(8, 8).len();
        q.0.reverse();
        assert_eq!(q.pixels(8, 8).len(), n);
    }

    #[test]
    fn rotated_quad() {
        let diamond = Quad([[5.0f64, 0.0], [10.0, 5.0], [5.0, 10.0], [0.0, 5.0]]);
        assert!(diamond.contains([5.0, 5.0]));
        assert!(!diamond.contains([0.5, 0.5]));
        assert!(diamond.within(10, 10));
        assert!(!diamond.within(9, 10));
    }
}
