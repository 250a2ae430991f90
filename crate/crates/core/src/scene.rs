//! World model: region, buildings, existing base stations and the material
//! parameter set being calibrated.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point2, Rect};

pub const SIGMA_BOUNDS: (f64, f64) = (0.0, 2.0);
pub const EPSILON_BOUNDS: (f64, f64) = (1.0, 6.0);
/// Margin that turns the open parameter intervals into closed ones.
pub const BOUND_MARGIN: f64 = 1e-3;
/// Hardware limits accepted for base-station transmit power.
pub const TX_POWER_BOUNDS_DBM: (f64, f64) = (-30.0, 60.0);

pub const DEFAULT_RX_HEIGHT_M: f64 = 1.5;
pub const DEFAULT_CARRIER_FREQ_HZ: f64 = 3.5e9;
pub const DEFAULT_TX_POWER_DBM: f64 = 43.0;

/// Conductivity (S/m) and relative permittivity per material, the 2×K matrix
/// being calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub sigma: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl MaterialParams {
    pub fn new(sigma: Vec<f64>, epsilon: Vec<f64>) -> Result<Self> {
        if sigma.len() != epsilon.len() {
            return Err(Error::Validation(format!(
                "materials: sigma has {} entries but epsilon has {}",
                sigma.len(),
                epsilon.len()
            )));
        }
        let params = Self { sigma, epsilon };
        params.check_open_bounds()?;
        Ok(params)
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma_range() -> (f64, f64) {
        (SIGMA_BOUNDS.0 + BOUND_MARGIN, SIGMA_BOUNDS.1 - BOUND_MARGIN)
    }

    pub fn epsilon_range() -> (f64, f64) {
        (
            EPSILON_BOUNDS.0 + BOUND_MARGIN,
            EPSILON_BOUNDS.1 - BOUND_MARGIN,
        )
    }

    /// Clamp every entry into the closed box `[lo+δ, hi−δ]`.
    pub fn project(&mut self) {
        let (slo, shi) = Self::sigma_range();
        let (elo, ehi) = Self::epsilon_range();
        for s in &mut self.sigma {
            *s = s.clamp(slo, shi);
        }
        for e in &mut self.epsilon {
            *e = e.clamp(elo, ehi);
        }
    }

    pub fn in_closed_box(&self) -> bool {
        let (slo, shi) = Self::sigma_range();
        let (elo, ehi) = Self::epsilon_range();
        self.sigma.iter().all(|s| (slo..=shi).contains(s))
            && self.epsilon.iter().all(|e| (elo..=ehi).contains(e))
    }

    fn check_open_bounds(&self) -> Result<()> {
        for (k, (&s, &e)) in self.sigma.iter().zip(&self.epsilon).enumerate() {
            if !(s > SIGMA_BOUNDS.0 && s < SIGMA_BOUNDS.1) {
                return Err(Error::Validation(format!(
                    "material {k}: sigma {s} outside (0, 2)"
                )));
            }
            if !(e > EPSILON_BOUNDS.0 && e < EPSILON_BOUNDS.1) {
                return Err(Error::Validation(format!(
                    "material {k}: epsilon {e} outside (1, 6)"
                )));
            }
        }
        Ok(())
    }

    /// Flat view `[σ_0..σ_{K-1}, ε_0..ε_{K-1}]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.sigma.iter().chain(&self.epsilon).copied().collect()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        let k = flat.len() / 2;
        Self {
            sigma: flat[..k].to_vec(),
            epsilon: flat[k..].to_vec(),
        }
    }

    /// Canonical values for a named material at `freq_hz`, clamped into the box.
    ///
    /// Conductivity follows the usual `a·f_GHz^b` fit; metal and glass fall
    /// outside the calibratable box and are clamped.
    pub fn canonical(label: &str, freq_hz: f64) -> Option<(f64, f64)> {
        let f = freq_hz / 1e9;
        let (eps, sigma): (f64, f64) = match label.to_ascii_lowercase().as_str() {
            "concrete" => (5.24, 0.0462 * f.powf(0.7822)),
            "brick" => (3.91, 0.0238 * f.powf(0.16)),
            "wood" => (1.99, 0.0047 * f.powf(1.0718)),
            "glass" => (6.31, 0.0036 * f.powf(1.3394)),
            "plasterboard" => (2.73, 0.0085 * f.powf(0.9395)),
            "metal" => (1.0, 1e7),
            _ => return None,
        };
        let (slo, shi) = Self::sigma_range();
        let (elo, ehi) = Self::epsilon_range();
        Some((sigma.clamp(slo, shi), eps.clamp(elo, ehi)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    /// Counterclockwise footprint.
    pub footprint: Vec<Point2>,
    pub height: f64,
    pub material_index: usize,
    pub bbox: Rect,
}

impl Building {
    pub fn new(mut footprint: Vec<Point2>, height: f64, material_index: usize) -> Self {
        geometry::normalize_ccw(&mut footprint);
        let bbox = Rect::bounding(&footprint);
        Self {
            footprint,
            height,
            material_index,
            bbox,
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.bbox.contains(p) && geometry::point_in_polygon(p, &self.footprint)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "tx_power_dbm")]
    pub tx_power: f64,
    #[serde(rename = "antenna_gain_db")]
    pub antenna_gain: f64,
}

impl BaseStation {
    pub fn new(x: f64, y: f64, z: f64, tx_power: f64, antenna_gain: f64) -> Self {
        Self {
            x,
            y,
            z,
            tx_power,
            antenna_gain,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub region: Rect,
    pub buildings: Vec<Building>,
    pub existing_bs: Vec<BaseStation>,
    pub rx_height: f64,
    pub carrier_freq: f64,
    pub materials: MaterialParams,
    /// Optional material names (one per material) used to seed calibration.
    pub material_labels: Option<Vec<String>>,
}

impl Scene {
    /// Number of materials K.
    pub fn num_materials(&self) -> usize {
        self.materials.len()
    }

    /// Index of the first building whose footprint contains `p`.
    pub fn building_at(&self, p: Point2) -> Option<usize> {
        self.buildings.iter().position(|b| b.contains(p))
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.region;
        if !(r.xmax > r.xmin && r.ymax > r.ymin) || !r.area().is_finite() {
            return Err(Error::Validation(format!("region {r:?} is empty")));
        }
        if !(self.rx_height > 0.0) {
            return Err(Error::Validation(format!(
                "rx_height {} must be > 0",
                self.rx_height
            )));
        }
        if !(self.carrier_freq > 0.0) {
            return Err(Error::Validation(format!(
                "carrier_freq {} must be > 0",
                self.carrier_freq
            )));
        }
        if self.materials.sigma.len() != self.materials.epsilon.len() {
            return Err(Error::Validation(format!(
                "materials: sigma has {} entries but epsilon has {}",
                self.materials.sigma.len(),
                self.materials.epsilon.len()
            )));
        }
        self.materials.check_open_bounds()?;
        if let Some(labels) = &self.material_labels {
            if labels.len() != self.materials.len() {
                return Err(Error::Validation(format!(
                    "materials: {} labels for {} materials",
                    labels.len(),
                    self.materials.len()
                )));
            }
        }
        let k = self.num_materials();
        for (i, b) in self.buildings.iter().enumerate() {
            if b.footprint.len() < 3 {
                return Err(Error::Validation(format!(
                    "building {i}: footprint has {} vertices, need at least 3",
                    b.footprint.len()
                )));
            }
            if !geometry::is_simple(&b.footprint) {
                return Err(Error::Validation(format!(
                    "building {i}: footprint is not a simple polygon"
                )));
            }
            if let Some(p) = b.footprint.iter().find(|p| !r.contains(**p)) {
                return Err(Error::Validation(format!(
                    "building {i}: vertex ({}, {}) outside region",
                    p.x, p.y
                )));
            }
            if !(b.height > 0.0) {
                return Err(Error::Validation(format!(
                    "building {i}: height {} must be > 0",
                    b.height
                )));
            }
            if b.material_index >= k {
                return Err(Error::Validation(format!(
                    "building {i}: material_index {} out of range for K={k}",
                    b.material_index
                )));
            }
        }
        for (m, bs) in self.existing_bs.iter().enumerate() {
            validate_bs(r, bs)
                .map_err(|msg| Error::Validation(format!("existing_bs {m}: {msg}")))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        let scene = Scene::from(file);
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SceneFile::from(self)).expect("scene serializes")
    }

    /// Scene with its materials replaced (e.g. by calibrated values).
    pub fn with_materials(&self, materials: MaterialParams) -> Scene {
        Scene {
            materials,
            ..self.clone()
        }
    }
}

pub(crate) fn validate_bs(region: &Rect, bs: &BaseStation) -> std::result::Result<(), String> {
    if !region.contains(bs.position()) {
        return Err(format!("position ({}, {}) outside region", bs.x, bs.y));
    }
    if !(bs.z > 0.0) {
        return Err(format!("height {} must be > 0", bs.z));
    }
    let (lo, hi) = TX_POWER_BOUNDS_DBM;
    if !(lo..=hi).contains(&bs.tx_power) {
        return Err(format!("tx_power {} dBm outside [{lo}, {hi}]", bs.tx_power));
    }
    if !bs.antenna_gain.is_finite() {
        return Err("antenna gain must be finite".into());
    }
    Ok(())
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scene::from_json(&text)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scene.to_json() + "\n").map_err(|e| Error::io(path, e))
}

// On-disk layout.

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    region: Rect,
    #[serde(default = "default_freq")]
    carrier_freq_hz: f64,
    #[serde(default = "default_rx_height")]
    rx_height_m: f64,
    buildings: Vec<BuildingFile>,
    #[serde(default)]
    existing_bs: Vec<BaseStation>,
    materials: MaterialsFile,
}

#[derive(Debug, Serialize, Deserialize)]
struct BuildingFile {
    footprint: Vec<[f64; 2]>,
    height_m: f64,
    material_index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct MaterialsFile {
    sigma: Vec<f64>,
    epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

fn default_freq() -> f64 {
    DEFAULT_CARRIER_FREQ_HZ
}

fn default_rx_height() -> f64 {
    DEFAULT_RX_HEIGHT_M
}

impl From<SceneFile> for Scene {
    fn from(f: SceneFile) -> Self {
        Scene {
            region: f.region,
            buildings: f
                .buildings
                .into_iter()
                .map(|b| {
                    Building::new(
                        b.footprint
                            .iter()
                            .map(|&[x, y]| Point2::new(x, y))
                            .collect(),
                        b.height_m,
                        b.material_index,
                    )
                })
                .collect(),
            existing_bs: f.existing_bs,
            rx_height: f.rx_height_m,
            carrier_freq: f.carrier_freq_hz,
            materials: MaterialParams {
                sigma: f.materials.sigma,
                epsilon: f.materials.epsilon,
            },
            material_labels: f.materials.labels,
        }
    }
}

impl From<&Scene> for SceneFile {
    fn from(s: &Scene) -> Self {
        SceneFile {
            region: s.region,
            carrier_freq_hz: s.carrier_freq,
            rx_height_m: s.rx_height,
            buildings: s
                .buildings
                .iter()
                .map(|b| BuildingFile {
                    footprint: b.footprint.iter().map(|p| [p.x, p.y]).collect(),
                    height_m: b.height,
                    material_index: b.material_index,
                })
                .collect(),
            existing_bs: s.existing_bs.clone(),
            materials: MaterialsFile {
                sigma: s.materials.sigma.clone(),
                epsilon: s.materials.epsilon.clone(),
                labels: s.material_labels.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "region": {"xmin": 0, "ymin": 0, "xmax": 100, "ymax": 100},
        "carrier_freq_hz": 3.5e9,
        "rx_height_m": 1.5,
        "buildings": [{"footprint": [[40,40],[40,60],[60,60],[60,40]], "height_m": 12, "material_index": 0}],
        "existing_bs": [{"x": 10, "y": 10, "z": 25, "tx_power_dbm": 43, "antenna_gain_db": 0}],
        "materials": {"sigma": [0.1], "epsilon": [5.24]}
    }"#;

    #[test]
    fn minimal_scene_loads() {
        let scene = Scene::from_json(MINIMAL).unwrap();
        assert_eq!(scene.num_materials(), 1);
        assert_eq!(scene.existing_bs.len(), 1);
        // clockwise input is normalized
        assert!(geometry::signed_area(&scene.buildings[0].footprint) > 0.0);
    }

    #[test]
    fn two_vertex_building_is_rejected() {
        let text = MINIMAL.replace("[[40,40],[40,60],[60,60],[60,40]]", "[[40,40],[60,60]]");
        let err = Scene::from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("building 0")),
            "{err}"
        );
    }

    #[test]
    fn out_of_range_material_index_names_building() {
        let text = MINIMAL.replace("\"material_index\": 0", "\"material_index\": 3");
        let err = Scene::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("building 0"), "{err}");
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(Scene::from_json("{ nope"), Err(Error::Parse(_))));
    }

    #[test]
    fn material_bounds_are_open() {
        let text = MINIMAL.replace("\"sigma\": [0.1]", "\"sigma\": [2.0]");
        assert!(Scene::from_json(&text).is_err());
        let text = MINIMAL.replace("\"epsilon\": [5.24]", "\"epsilon\": [1.0]");
        assert!(Scene::from_json(&text).is_err());
    }

    #[test]
    fn projection_uses_margin() {
        let mut p = MaterialParams {
            sigma: vec![-1.0, 5.0],
            epsilon: vec![0.0, 9.0],
        };
        p.project();
        assert_eq!(p.sigma, vec![1e-3, 2.0 - 1e-3]);
        assert_eq!(p.epsilon, vec![1.0 + 1e-3, 6.0 - 1e-3]);
        assert!(p.in_closed_box());
    }

    #[test]
    fn canonical_labels_land_in_box() {
        for label in [
            "concrete",
            "brick",
            "wood",
            "glass",
            "plasterboard",
            "metal",
        ] {
            let (s, e) = MaterialParams::canonical(label, 3.5e9).unwrap();
            let p = MaterialParams::new(vec![s], vec![e]).unwrap();
            assert!(p.in_closed_box(), "{label}");
        }
        assert!(MaterialParams::canonical("cheese", 3.5e9).is_none());
    }
}
