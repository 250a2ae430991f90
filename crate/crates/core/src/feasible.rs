//! Feasible deployment region and discrete candidate enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point2};
use crate::scene::Scene;

pub const DEFAULT_MOUNT_OFFSET_M: f64 = 2.0;

/// Where new base stations may go: building rooftops and/or explicit polygons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub rooftops: bool,
    #[serde(default)]
    pub polygons: Vec<Vec<Point2>>,
    /// Meters added above the rooftop (or above ground for explicit polygons).
    pub mount_offset: f64,
}

impl Default for FeasibleRegion {
    fn default() -> Self {
        Self {
            rooftops: true,
            polygons: Vec::new(),
            mount_offset: DEFAULT_MOUNT_OFFSET_M,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Candidate {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

impl FeasibleRegion {
    /// Mount height at `p`, or `None` if `p` is not feasible.
    pub fn mount_height(&self, scene: &Scene, p: Point2) -> Option<f64> {
        if !scene.region.contains(p) {
            return None;
        }
        if self.rooftops {
            if let Some(b) = scene.building_at(p) {
                return Some(scene.buildings[b].height + self.mount_offset);
            }
        }
        if self
            .polygons
            .iter()
            .any(|poly| geometry::point_in_polygon(p, poly))
        {
            // explicit polygons may overlap a building even when rooftops are off
            let base = scene
                .building_at(p)
                .map_or(0.0, |b| scene.buildings[b].height);
            return Some(base + self.mount_offset);
        }
        None
    }
}

/// Cell-center lattice of spacing `step` over the region, filtered to the
/// feasible region, row-major from `(xmin, ymin)`.
pub fn enumerate_candidates(
    scene: &Scene,
    feasible: &FeasibleRegion,
    step: f64,
) -> Result<Vec<Candidate>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Argument(format!(
            "candidate step must be > 0, got {step}"
        )));
    }
    let r = scene.region;
    let nx = (r.width() / step).ceil() as usize;
    let ny = (r.height() / step).ceil() as usize;
    let mut out = Vec::new();
    for row in 0..ny {
        let y = r.ymin + (row as f64 + 0.5) * step;
        if y > r.ymax {
            break;
        }
        for col in 0..nx {
            let x = r.xmin + (col as f64 + 0.5) * step;
            if x > r.xmax {
                break;
            }
            let p = Point2::new(x, y);
            if let Some(z) = feasible.mount_height(scene, p) {
                out.push(Candidate { x, y, z });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Planning("no feasible candidates".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::scene::{Building, MaterialParams};

    fn scene_with(buildings: Vec<Building>) -> Scene {
        let k = buildings.len();
        Scene {
            region: Rect::new(0.0, 0.0, 100.0, 100.0),
            buildings,
            existing_bs: vec![],
            rx_height: 1.5,
            carrier_freq: 3.5e9,
            materials: MaterialParams {
                sigma: vec![0.1; k],
                epsilon: vec![5.0; k],
            },
            material_labels: None,
        }
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point2> {
        vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ]
    }

    #[test]
    fn single_20m_building_gives_16() {
        let scene = scene_with(vec![Building::new(rect(40.0, 40.0, 60.0, 60.0), 12.0, 0)]);
        let c = enumerate_candidates(&scene, &FeasibleRegion::default(), 5.0).unwrap();
        assert_eq!(c.len(), 16);
        assert!(c.iter().all(|c| c.z == 14.0));
        assert_eq!((c[0].x, c[0].y), (42.5, 42.5));
        assert_eq!((c[1].x, c[1].y), (47.5, 42.5));
    }

    #[test]
    fn edge_points_count_as_inside() {
        // footprint edges at 42.5 and 57.5 coincide with lattice points
        let scene = scene_with(vec![Building::new(rect(42.5, 42.5, 57.5, 57.5), 12.0, 0)]);
        let c = enumerate_candidates(&scene, &FeasibleRegion::default(), 5.0).unwrap();
        assert_eq!(c.len(), 16);
    }

    #[test]
    fn no_buildings_no_candidates() {
        let scene = scene_with(vec![]);
        let err = enumerate_candidates(&scene, &FeasibleRegion::default(), 5.0).unwrap_err();
        assert!(err.to_string().contains("no feasible candidates"));
    }

    #[test]
    fn explicit_polygon_mast_height() {
        let scene = scene_with(vec![]);
        let feasible = FeasibleRegion {
            rooftops: true,
            polygons: vec![rect(0.0, 0.0, 10.0, 10.0)],
            mount_offset: 2.0,
        };
        let c = enumerate_candidates(&scene, &feasible, 5.0).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|c| c.z == 2.0));
    }

    #[test]
    fn bad_step() {
        let scene = scene_with(vec![]);
        assert!(matches!(
            enumerate_candidates(&scene, &FeasibleRegion::default(), 0.0),
            Err(Error::Argument(_))
        ));
    }
}
