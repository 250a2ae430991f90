//! Fixtures and slow reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::Complex;
use radioplan::geometry::Point2;
use radioplan::scene::{BaseStation, Building, MaterialParams, Scene};
use radioplan::{EngineConfig, Rect};

pub const C0: f64 = 299_792_458.0;
pub const EPS0: f64 = 8.854_187_812_8e-12;

pub fn rect_building(x0: f64, y0: f64, x1: f64, y1: f64, h: f64, k: usize) -> Building {
    Building::new(
        vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ],
        h,
        k,
    )
}

pub fn scene(
    region: Rect,
    buildings: Vec<Building>,
    bs: Vec<BaseStation>,
    materials: MaterialParams,
) -> Scene {
    let s = Scene {
        region,
        buildings,
        existing_bs: bs,
        rx_height: 1.5,
        carrier_freq: 3.5e9,
        materials,
        material_labels: None,
    };
    s.validate().unwrap();
    s
}

/// Friis loss written out from wavelength.
pub fn fspl_oracle(d: f64, f: f64) -> f64 {
    let lambda = C0 / f;
    20.0 * (4.0 * std::f64::consts::PI * d.max(1.0) / lambda).log10()
}

/// Slab loss from the complex refractive index: absorption from Im(n) of
/// `ε − jσ/(ωε0)`, reflection from the lossless index.
pub fn wall_loss_oracle(sigma: f64, epsilon: f64, t: f64, f: f64) -> f64 {
    let omega = 2.0 * std::f64::consts::PI * f;
    let eps_c = Complex::new(epsilon, -sigma / (omega * EPS0));
    let n = eps_c.sqrt();
    let alpha = omega / C0 * n.im.abs();
    let to_db = 20.0 / std::f64::consts::LN_10;
    let nr = epsilon.sqrt();
    let refl = -20.0 * (4.0 * nr / ((1.0 + nr) * (1.0 + nr))).log10();
    to_db * alpha * t + refl
}

/// Footprint edges crossed below the roof, per building, by brute force.
pub fn crossings_oracle(scene: &Scene, tx: &BaseStation, rx: Point2) -> Vec<u32> {
    let a = Point2::new(tx.x, tx.y);
    let d = Point2::new(rx.x - a.x, rx.y - a.y);
    scene
        .buildings
        .iter()
        .map(|b| {
            let n = b.footprint.len();
            let mut c = 0;
            for i in 0..n {
                let p = b.footprint[i];
                let q = b.footprint[(i + 1) % n];
                let e = Point2::new(q.x - p.x, q.y - p.y);
                let den = d.x * e.y - d.y * e.x;
                if den == 0.0 {
                    continue;
                }
                let w = Point2::new(p.x - a.x, p.y - a.y);
                let t = (w.x * e.y - w.y * e.x) / den;
                let u = (w.x * d.y - w.y * d.x) / den;
                if !(0.0..=1.0).contains(&t) || !(-1e-9..1.0 - 1e-9).contains(&u) {
                    continue;
                }
                let z = tx.z + t * (scene.rx_height - tx.z);
                if z < b.height {
                    c += 1;
                }
            }
            c
        })
        .collect()
}

pub fn rsrp_oracle(scene: &Scene, params: &MaterialParams, tx: &BaseStation, rx: Point2) -> f64 {
    let cfg = EngineConfig::default();
    let d =
        ((tx.x - rx.x).powi(2) + (tx.y - rx.y).powi(2) + (tx.z - scene.rx_height).powi(2)).sqrt();
    let mut r = tx.tx_power + tx.antenna_gain - fspl_oracle(d, scene.carrier_freq);
    for (b, c) in crossings_oracle(scene, tx, rx).into_iter().enumerate() {
        let k = scene.buildings[b].material_index;
        r -= c as f64
            * wall_loss_oracle(
                params.sigma[k],
                params.epsilon[k],
                cfg.wall_thickness_m,
                scene.carrier_freq,
            );
    }
    r
}

/// Best RSRP per point, first station on ties.
pub fn best_rsrp_oracle(
    scene: &Scene,
    params: &MaterialParams,
    bs: &[BaseStation],
    pts: &[Point2],
) -> Vec<(f64, usize)> {
    pts.iter()
        .map(|&p| {
            let mut best = (f64::NEG_INFINITY, 0);
            for (i, b) in bs.iter().enumerate() {
                let r = rsrp_oracle(scene, params, b, p);
                if r > best.0 {
                    best = (r, i);
                }
            }
            best
        })
        .collect()
}

/// `(C, S, T)` with the default noise floor.
pub fn metrics_oracle(best: &[f64], alpha: f64, r_th: f64) -> (f64, f64, f64) {
    let n = best.len() as f64;
    let mut covered = 0usize;
    let mut cap = 0.0;
    for &r in best {
        if r > r_th {
            covered += 1;
        }
        cap += (1.0 + 10f64.powf((r + 94.0) / 10.0)).log2();
    }
    let c = covered as f64 / n;
    let s = cap / n;
    (c, s, alpha * c + s)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}
