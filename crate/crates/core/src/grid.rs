//! Uniform evaluation grid over the scene region.

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::scene::Scene;

/// `⌈area / a²⌉`, snapping to the nearest integer when the quotient is within
/// 1e-9 (relative) of it so exact divisions are not pushed up by rounding.
pub fn sample_count(area: f64, a: f64) -> usize {
    let q = area / (a * a);
    let nearest = q.round();
    if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        q.ceil().max(1.0) as usize
    }
}

/// Evaluation points at receiver height, stored implicitly.
///
/// The `len()` points are the first `len()` cell centers of an `nx × ny`
/// row-major lattice (rows run along +x, starting at `ymin`). When `nx·ny`
/// exceeds the sample count the last row is partial.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub region: Rect,
    pub resolution: f64,
    pub rx_height: f64,
    pub nx: usize,
    pub ny: usize,
    len: usize,
}

impl Grid {
    pub fn new(region: Rect, resolution: f64, rx_height: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::Argument(format!(
                "grid resolution must be > 0, got {resolution}"
            )));
        }
        let len = sample_count(region.area(), resolution);
        let nx = ((region.width() / resolution).round() as usize).clamp(1, len);
        let ny = len.div_ceil(nx);
        Ok(Self {
            region,
            resolution,
            rx_height,
            nx,
            ny,
            len,
        })
    }

    /// Number of sampling points L.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.region.width() / self.nx as f64,
            self.region.height() / self.ny as f64,
        )
    }

    pub fn point(&self, idx: usize) -> Point2 {
        debug_assert!(idx < self.len);
        let (dx, dy) = self.cell_size();
        let col = idx % self.nx;
        let row = idx / self.nx;
        Point2::new(
            self.region.xmin + (col as f64 + 0.5) * dx,
            self.region.ymin + (row as f64 + 0.5) * dy,
        )
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = Point2> + '_ {
        (0..self.len).map(|i| self.point(i))
    }
}

pub fn make_grid(scene: &Scene, a: f64) -> Result<Grid> {
    Grid::new(scene.region, a, scene.rx_height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: f64, h: f64, a: f64) -> Grid {
        Grid::new(Rect::new(0.0, 0.0, w, h), a, 1.5).unwrap()
    }

    #[test]
    fn exact_division() {
        let g = grid(10.0, 10.0, 1.0);
        assert_eq!(g.len(), 100);
        assert_eq!((g.nx, g.ny), (10, 10));
        assert_eq!(g.point(0), Point2::new(0.5, 0.5));
        assert_eq!(g.point(11), Point2::new(1.5, 1.5));
    }

    #[test]
    fn ceiling_case() {
        // ⌈100 / 9⌉ = 12
        let g = grid(10.0, 10.0, 3.0);
        assert_eq!(g.len(), 12);
        assert!(g.points().all(|p| g.region.contains(p)));
    }

    #[test]
    fn campus_scale_count() {
        let g = grid(1210.0, 1138.0, 0.2);
        assert_eq!(g.len(), 34_424_500);
        assert_eq!((g.nx, g.ny), (6050, 5690));
    }

    #[test]
    fn nonpositive_resolution_rejected() {
        assert!(Grid::new(Rect::new(0.0, 0.0, 1.0, 1.0), 0.0, 1.5).is_err());
        assert!(Grid::new(Rect::new(0.0, 0.0, 1.0, 1.0), -2.0, 1.5).is_err());
    }

    proptest! {
        // Sizes in decimeters so the oracle is exact integer arithmetic.
        #[test]
        fn count_matches_integer_ceiling(wd in 1u64..5000, hd in 1u64..5000, ad in 1u64..200) {
            let g = grid(wd as f64 / 10.0, hd as f64 / 10.0, ad as f64 / 10.0);
            let expected = (wd * hd).div_ceil(ad * ad) as usize;
            prop_assert_eq!(g.len(), expected);
            prop_assert!(g.nx * g.ny >= g.len());
            prop_assert!(g.nx * (g.ny - 1) < g.len());
            let last = g.point(g.len() - 1);
            prop_assert!(g.region.contains(last));
        }
    }
}
