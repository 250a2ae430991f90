//! Closed-form, differentiable propagation: Friis free-space loss plus a
//! plane-wave slab penetration loss for every building wall the ray crosses.
//!
//! Geometry (which walls a ray crosses) does not depend on the material
//! parameters, so it is computed once per link and reused through [`Link`].

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point2, Rect, GEOM_EPS};
use crate::scene::{BaseStation, MaterialParams, Scene};

/// Neper → decibel.
const NP_TO_DB: f64 = 20.0 / LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub wall_thickness_m: f64,
    pub min_distance_m: f64,
    pub noise_floor_dbm: f64,
    pub speed_of_light: f64,
    pub vacuum_permittivity: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            wall_thickness_m: 0.3,
            min_distance_m: 1.0,
            noise_floor_dbm: -94.0,
            speed_of_light: 299_792_458.0,
            vacuum_permittivity: 8.854_187_812_8e-12,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.wall_thickness_m > 0.0) || !(self.min_distance_m > 0.0) {
            return Err(crate::Error::Argument(
                "wall thickness and minimum distance must be > 0".into(),
            ));
        }
        if !self.noise_floor_dbm.is_finite() {
            return Err(crate::Error::Argument("noise floor must be finite".into()));
        }
        Ok(())
    }
}

/// Friis free-space path loss in dB with the distance clamped to `d_min`.
pub fn free_space_path_loss(d: f64, f: f64, config: &EngineConfig) -> f64 {
    20.0 * d.max(config.min_distance_m).log10()
        + 20.0 * f.log10()
        + 20.0 * (4.0 * PI / config.speed_of_light).log10()
}

/// Wall loss and its partial derivatives with respect to σ and ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallLoss {
    pub db: f64,
    pub d_sigma: f64,
    pub d_epsilon: f64,
}

/// Penetration loss (dB) of a homogeneous wall: absorption through the slab
/// plus transmission loss at its two faces.
pub fn wall_loss(sigma: f64, epsilon: f64, t_wall: f64, f: f64, config: &EngineConfig) -> f64 {
    wall_loss_with_grad(sigma, epsilon, t_wall, f, config).db
}

pub fn wall_loss_with_grad(
    sigma: f64,
    epsilon: f64,
    t_wall: f64,
    f: f64,
    config: &EngineConfig,
) -> WallLoss {
    let omega = 2.0 * PI * f;
    let beta0 = omega / config.speed_of_light;
    let sqrt_eps = epsilon.sqrt();

    // loss tangent and its partials
    let tan_d = sigma / (omega * config.vacuum_permittivity * epsilon);
    let dtan_dsigma = 1.0 / (omega * config.vacuum_permittivity * epsilon);
    let dtan_deps = -tan_d / epsilon;

    // g(T) = sqrt((sqrt(1+T²) − 1)/2), rewritten to avoid cancellation at small T
    let s = (1.0 + tan_d * tan_d).sqrt();
    let u = 2.0 * (s + 1.0);
    let g = tan_d / u.sqrt();
    let dg = (1.0 - tan_d * tan_d / (s * u)) / u.sqrt();

    let alpha = beta0 * sqrt_eps * g;
    let dalpha_dsigma = beta0 * sqrt_eps * dg * dtan_dsigma;
    let dalpha_deps = beta0 * (g / (2.0 * sqrt_eps) + sqrt_eps * dg * dtan_deps);

    let abs_db = NP_TO_DB * alpha * t_wall;

    // 1 − Γ² = 4n/(1+n)² with n = √ε
    let n = sqrt_eps;
    let refl_db = NP_TO_DB * (2.0 * (1.0 + n).ln() - (4.0 * n).ln());
    let drefl_dn = NP_TO_DB * (2.0 / (1.0 + n) - 1.0 / n);
    let drefl_deps = drefl_dn / (2.0 * n);

    WallLoss {
        db: abs_db + refl_db,
        d_sigma: NP_TO_DB * t_wall * dalpha_dsigma,
        d_epsilon: NP_TO_DB * t_wall * dalpha_deps + drefl_deps,
    }
}

/// Effective footprint-edge crossings of one tx→rx path, per building.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathCrossings {
    /// `(building_index, crossing_count)` sorted by building index.
    pub entries: Vec<(usize, u32)>,
}

impl PathCrossings {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    /// Crossing counts aggregated per material, sorted by material index.
    pub fn per_material(&self, scene: &Scene) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = Vec::with_capacity(self.entries.len());
        for &(b, c) in &self.entries {
            let k = scene.buildings[b].material_index;
            match out.iter_mut().find(|(m, _)| *m == k) {
                Some((_, acc)) => *acc += c,
                None => out.push((k, c)),
            }
        }
        out.sort_unstable();
        out
    }
}

/// Counts the footprint edges crossed by the 2D projection of `tx → rx`
/// where the straight ray is still below the roof (2.5D occlusion).
pub fn trace_crossings(scene: &Scene, tx: &BaseStation, rx: Point2) -> PathCrossings {
    let a = tx.position();
    let seg_box = Rect::bounding(&[a, rx]);
    let mut entries = Vec::new();
    for (bi, b) in scene.buildings.iter().enumerate() {
        if !seg_box.intersects(&b.bbox) {
            continue;
        }
        let n = b.footprint.len();
        let mut count = 0u32;
        for i in 0..n {
            let v0 = b.footprint[i];
            let v1 = b.footprint[(i + 1) % n];
            let Some((t, u)) = geometry::segment_params(a, rx, v0, v1) else {
                continue;
            };
            if !(0.0..=1.0).contains(&t) || !(-GEOM_EPS..1.0 - GEOM_EPS).contains(&u) {
                continue;
            }
            let ray_z = tx.z + t * (scene.rx_height - tx.z);
            if ray_z < b.height {
                count += 1;
            }
        }
        if count > 0 {
            entries.push((bi, count));
        }
    }
    PathCrossings { entries }
}

/// Material-independent part of a link plus its wall crossings per material.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// `tx_power + gain − FSPL` in dBm.
    pub free_space_dbm: f64,
    /// `(material_index, crossing_count)`.
    pub walls: Vec<(usize, u32)>,
}

impl Link {
    pub fn rsrp(&self, table: &WallTable) -> f64 {
        self.walls.iter().fold(self.free_space_dbm, |acc, &(k, c)| {
            acc - c as f64 * table.loss[k]
        })
    }
}

/// Per-material wall loss and gradients for a fixed parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct WallTable {
    pub loss: Vec<f64>,
    pub d_sigma: Vec<f64>,
    pub d_epsilon: Vec<f64>,
}

/// Gradient of a scalar with respect to every (σ_k, ε_k).
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialGradient {
    pub d_sigma: Vec<f64>,
    pub d_epsilon: Vec<f64>,
}

impl MaterialGradient {
    pub fn zeros(k: usize) -> Self {
        Self {
            d_sigma: vec![0.0; k],
            d_epsilon: vec![0.0; k],
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.d_sigma
            .iter()
            .chain(&self.d_epsilon)
            .copied()
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.d_sigma
            .iter()
            .chain(&self.d_epsilon)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// The propagation engine bound to one scene.
#[derive(Debug, Clone, Copy)]
pub struct Engine<'a> {
    pub scene: &'a Scene,
    pub config: EngineConfig,
}

impl<'a> Engine<'a> {
    pub fn new(scene: &'a Scene, config: EngineConfig) -> Self {
        Self { scene, config }
    }

    pub fn wall_table(&self, params: &MaterialParams) -> WallTable {
        let f = self.scene.carrier_freq;
        let t = self.config.wall_thickness_m;
        let mut table = WallTable {
            loss: Vec::with_capacity(params.len()),
            d_sigma: Vec::with_capacity(params.len()),
            d_epsilon: Vec::with_capacity(params.len()),
        };
        for (&s, &e) in params.sigma.iter().zip(&params.epsilon) {
            let w = wall_loss_with_grad(s, e, t, f, &self.config);
            table.loss.push(w.db);
            table.d_sigma.push(w.d_sigma);
            table.d_epsilon.push(w.d_epsilon);
        }
        table
    }

    pub fn distance_3d(&self, tx: &BaseStation, rx: Point2) -> f64 {
        let dz = tx.z - self.scene.rx_height;
        (tx.x - rx.x).hypot(tx.y - rx.y).hypot(dz)
    }

    pub fn link(&self, tx: &BaseStation, rx: Point2) -> Link {
        let fspl = free_space_path_loss(
            self.distance_3d(tx, rx),
            self.scene.carrier_freq,
            &self.config,
        );
        Link {
            free_space_dbm: tx.tx_power + tx.antenna_gain - fspl,
            walls: trace_crossings(self.scene, tx, rx).per_material(self.scene),
        }
    }

    pub fn rsrp(&self, params: &MaterialParams, tx: &BaseStation, rx: Point2) -> f64 {
        self.link(tx, rx).rsrp(&self.wall_table(params))
    }

    /// Analytic ∂rsrp/∂σ_k and ∂rsrp/∂ε_k; zero for materials the path misses.
    pub fn rsrp_gradient(
        &self,
        params: &MaterialParams,
        tx: &BaseStation,
        rx: Point2,
    ) -> MaterialGradient {
        let link = self.link(tx, rx);
        let table = self.wall_table(params);
        let mut grad = MaterialGradient::zeros(params.len());
        accumulate_link_gradient(&link, &table, 1.0, &mut grad);
        grad
    }
}

/// `grad += weight · ∂rsrp/∂Θ` for one link.
pub fn accumulate_link_gradient(
    link: &Link,
    table: &WallTable,
    weight: f64,
    grad: &mut MaterialGradient,
) {
    for &(k, c) in &link.walls {
        grad.d_sigma[k] -= weight * c as f64 * table.d_sigma[k];
        grad.d_epsilon[k] -= weight * c as f64 * table.d_epsilon[k];
    }
}
