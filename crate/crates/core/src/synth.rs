//! Seeded generators for test scenes and drive-test-like measurements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calibration::{Measurement, MeasurementSet};
use crate::error::{Error, Result};
use crate::feasible::DEFAULT_MOUNT_OFFSET_M;
use crate::geometry::{Point2, Rect};
use crate::propagation::Engine;
use crate::scene::{
    BaseStation, Building, MaterialParams, Scene, DEFAULT_CARRIER_FREQ_HZ, DEFAULT_RX_HEIGHT_M,
    DEFAULT_TX_POWER_DBM,
};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
pub const BUILDING_HEIGHT_RANGE_M: (f64, f64) = (5.0, 30.0);
/// Ground-truth materials are drawn from this sub-box of the parameter box,
/// roughly spanning wood to dense concrete at mid-band frequencies.
pub const TRUE_SIGMA_RANGE: (f64, f64) = (0.01, 0.3);
pub const TRUE_EPSILON_RANGE: (f64, f64) = (1.5, 5.8);
/// Minimum clearance between generated footprints.
pub const BUILDING_GAP_M: f64 = 2.0;
pub const OPEN_FIELD_MAST_M: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub width: f64,
    pub height: f64,
    pub n_buildings: usize,
    pub seed: u64,
}

/// Random scene: non-overlapping axis-aligned rectangular buildings, one
/// material per building, and one existing station on the tallest rooftop
/// (or a mast at the center of an empty region).
pub fn gen_scene(spec: &SceneSpec) -> Result<Scene> {
    if !(spec.width > 0.0 && spec.height > 0.0) {
        return Err(Error::Argument("scene size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let region = Rect::new(0.0, 0.0, spec.width, spec.height);
    let side_max = 40f64.min(0.3 * spec.width.min(spec.height));
    let side_min = 8f64.min(0.5 * side_max);

    let mut rects: Vec<Rect> = Vec::with_capacity(spec.n_buildings);
    for i in 0..spec.n_buildings {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let w = rng.random_range(side_min..=side_max);
            let h = rng.random_range(side_min..=side_max);
            let x0 = rng.random_range(0.0..=(spec.width - w));
            let y0 = rng.random_range(0.0..=(spec.height - h));
            let r = Rect::new(x0, y0, x0 + w, y0 + h);
            let clear = rects.iter().all(|o| {
                let grown = Rect::new(
                    o.xmin - BUILDING_GAP_M,
                    o.ymin - BUILDING_GAP_M,
                    o.xmax + BUILDING_GAP_M,
                    o.ymax + BUILDING_GAP_M,
                );
                !grown.intersects(&r)
            });
            if clear {
                placed = Some(r);
                break;
            }
        }
        let r = placed.ok_or_else(|| {
            Error::Argument(format!(
                "could not place building {i} after {MAX_PLACEMENT_ATTEMPTS} attempts"
            ))
        })?;
        rects.push(r);
    }

    let mut buildings = Vec::with_capacity(rects.len());
    let mut sigma = Vec::with_capacity(rects.len());
    let mut epsilon = Vec::with_capacity(rects.len());
    for (i, r) in rects.iter().enumerate() {
        let height = rng.random_range(BUILDING_HEIGHT_RANGE_M.0..=BUILDING_HEIGHT_RANGE_M.1);
        sigma.push(rng.random_range(TRUE_SIGMA_RANGE.0..=TRUE_SIGMA_RANGE.1));
        epsilon.push(rng.random_range(TRUE_EPSILON_RANGE.0..=TRUE_EPSILON_RANGE.1));
        let footprint = vec![
            Point2::new(r.xmin, r.ymin),
            Point2::new(r.xmax, r.ymin),
            Point2::new(r.xmax, r.ymax),
            Point2::new(r.xmin, r.ymax),
        ];
        buildings.push(Building::new(footprint, height, i));
    }

    let bs = match buildings
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.height.total_cmp(&b.1.height).then(b.0.cmp(&a.0)))
    {
        Some((_, b)) => {
            let c = Rect::bounding(&b.footprint);
            BaseStation::new(
                0.5 * (c.xmin + c.xmax),
                0.5 * (c.ymin + c.ymax),
                b.height + DEFAULT_MOUNT_OFFSET_M,
                DEFAULT_TX_POWER_DBM,
                0.0,
            )
        }
        None => BaseStation::new(
            0.5 * spec.width,
            0.5 * spec.height,
            OPEN_FIELD_MAST_M,
            DEFAULT_TX_POWER_DBM,
            0.0,
        ),
    };

    let scene = Scene {
        region,
        buildings,
        existing_bs: vec![bs],
        rx_height: DEFAULT_RX_HEIGHT_M,
        carrier_freq: DEFAULT_CARRIER_FREQ_HZ,
        materials: MaterialParams { sigma, epsilon },
        material_labels: None,
    };
    scene.validate()?;
    Ok(scene)
}

/// Uniform in-region samples of the best RSRP over the existing stations
/// under `params_true`, plus Gaussian noise of `noise_sigma` dB. The serving
/// station index is recorded when there is more than one.
pub fn synth_measurements(
    engine: Engine<'_>,
    params_true: &MaterialParams,
    n_points: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    let scene = engine.scene;
    if n_points == 0 {
        return Err(Error::Argument("n_points must be >= 1".into()));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::Argument(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    if scene.existing_bs.is_empty() {
        return Err(Error::Argument("scene has no existing base station".into()));
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Argument(e.to_string()))?;
    let table = engine.wall_table(params_true);
    let r = scene.region;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let x = rng.random_range(r.xmin..=r.xmax);
        let y = rng.random_range(r.ymin..=r.ymax);
        let p = Point2::new(x, y);
        let (bs, rsrp) = scene
            .existing_bs
            .iter()
            .enumerate()
            .map(|(b, tx)| (b, engine.link(tx, p).rsrp(&table)))
            .fold((0, f64::NEG_INFINITY), |acc, cur| {
                if cur.1 > acc.1 {
                    cur
                } else {
                    acc
                }
            });
        let noisy = if noise_sigma > 0.0 {
            rsrp + noise.sample(&mut rng)
        } else {
            rsrp
        };
        records.push(Measurement {
            x,
            y,
            rsrp: noisy,
            bs_index: (scene.existing_bs.len() > 1).then_some(bs),
        });
    }
    Ok(MeasurementSet::new(records))
}
