//! Radio-map solver and the coverage/capacity planning objective.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::propagation::{Engine, WallTable};
use crate::scene::{BaseStation, MaterialParams};

pub const DEFAULT_RTH_DBM: f64 = -90.0;
pub const DEFAULT_ALPHA_WEIGHT: f64 = 10.0;
/// RSRP range mapped onto the 8-bit heatmap.
pub const PGM_RANGE_DBM: (f64, f64) = (-120.0, -30.0);

#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap {
    pub grid: Grid,
    pub best_rsrp: Vec<f64>,
    pub snr_linear: Vec<f64>,
    pub serving_bs: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub coverage: f64,
    pub capacity: f64,
    pub target: f64,
    pub alpha_weight: f64,
    pub r_th: f64,
}

impl Metrics {
    pub fn from_parts(coverage: f64, capacity: f64, alpha_weight: f64, r_th: f64) -> Self {
        Self {
            coverage,
            capacity,
            target: alpha_weight * coverage + capacity,
            alpha_weight,
            r_th,
        }
    }
}

pub fn snr_linear(rsrp_dbm: f64, noise_floor_dbm: f64) -> f64 {
    10f64.powf((rsrp_dbm - noise_floor_dbm) / 10.0)
}

/// Evaluates per-point RSRP fields for a fixed engine, parameter set and grid.
pub struct FieldSolver<'a> {
    engine: Engine<'a>,
    table: WallTable,
    grid: &'a Grid,
}

impl<'a> FieldSolver<'a> {
    pub fn new(engine: Engine<'a>, params: &MaterialParams, grid: &'a Grid) -> Self {
        Self {
            table: engine.wall_table(params),
            engine,
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn noise_floor(&self) -> f64 {
        self.engine.config.noise_floor_dbm
    }

    /// RSRP of a single base station at every grid point.
    pub fn field(&self, bs: &BaseStation) -> Vec<f64> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.engine.link(bs, self.grid.point(i)).rsrp(&self.table))
            .collect()
    }

    /// Folds another station's field into a running best map. Only a strictly
    /// larger value replaces the incumbent, so earlier stations win ties.
    pub fn merge_into(best: &mut [f64], serving: &mut [usize], field: &[f64], bs_index: usize) {
        for ((b, s), &v) in best.iter_mut().zip(serving.iter_mut()).zip(field) {
            if v > *b {
                *b = v;
                *s = bs_index;
            }
        }
    }

    pub fn solve(&self, bs_set: &[BaseStation]) -> Result<RadioMap> {
        let (first, rest) = bs_set
            .split_first()
            .ok_or_else(|| Error::Argument("radio map needs at least one base station".into()))?;
        let mut best = self.field(first);
        let mut serving = vec![0; best.len()];
        for (i, bs) in rest.iter().enumerate() {
            let f = self.field(bs);
            Self::merge_into(&mut best, &mut serving, &f, i + 1);
        }
        let nf = self.noise_floor();
        let snr = best.iter().map(|&r| snr_linear(r, nf)).collect();
        Ok(RadioMap {
            grid: self.grid.clone(),
            best_rsrp: best,
            snr_linear: snr,
            serving_bs: serving,
        })
    }
}

pub fn solve_radiomap(
    engine: Engine<'_>,
    params: &MaterialParams,
    bs_set: &[BaseStation],
    grid: &Grid,
) -> Result<RadioMap> {
    FieldSolver::new(engine, params, grid).solve(bs_set)
}

/// Fraction of points with best RSRP strictly above `r_th`.
pub fn coverage_of(best_rsrp: &[f64], r_th: f64) -> f64 {
    let covered = best_rsrp.iter().filter(|&&r| r > r_th).count();
    covered as f64 / best_rsrp.len() as f64
}

/// Mean Shannon spectral efficiency in bit/s/Hz.
pub fn capacity_of(snr_linear: &[f64]) -> f64 {
    let total: f64 = snr_linear.iter().map(|&s| (1.0 + s).log2()).sum();
    total / snr_linear.len() as f64
}

/// Metrics straight from a best-RSRP field, without materializing a [`RadioMap`].
pub fn metrics_of_field(
    best_rsrp: &[f64],
    noise_floor: f64,
    alpha_weight: f64,
    r_th: f64,
) -> Metrics {
    let coverage = coverage_of(best_rsrp, r_th);
    let total: f64 = best_rsrp
        .iter()
        .map(|&r| (1.0 + snr_linear(r, noise_floor)).log2())
        .sum();
    Metrics::from_parts(coverage, total / best_rsrp.len() as f64, alpha_weight, r_th)
}

pub fn coverage(map: &RadioMap, r_th: f64) -> f64 {
    coverage_of(&map.best_rsrp, r_th)
}

pub fn capacity(map: &RadioMap) -> f64 {
    capacity_of(&map.snr_linear)
}

pub fn target(map: &RadioMap, alpha_weight: f64, r_th: f64) -> Metrics {
    Metrics::from_parts(coverage(map, r_th), capacity(map), alpha_weight, r_th)
}

impl RadioMap {
    /// CSV with header `x,y,rsrp_dbm,snr_db,serving_bs`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "y", "rsrp_dbm", "snr_db", "serving_bs"])?;
        for (i, p) in self.grid.points().enumerate() {
            w.write_record([
                p.x.to_string(),
                p.y.to_string(),
                self.best_rsrp[i].to_string(),
                (10.0 * self.snr_linear[i].log10()).to_string(),
                self.serving_bs[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// 8-bit heatmap pixel values, top row = largest y.
    pub fn heatmap_pixels(&self) -> Vec<u8> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut pixels = vec![0u8; nx * ny];
        for (i, &r) in self.best_rsrp.iter().enumerate() {
            let col = i % nx;
            let row = i / nx;
            pixels[(ny - 1 - row) * nx + col] = rsrp_to_gray(r);
        }
        pixels
    }

    /// Binary PGM (P5). Cells past the last sampling point stay 0.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        let (lo, hi) = PGM_RANGE_DBM;
        write!(
            out,
            "P5\n# rsrp heatmap: gray = 255*(rsrp_dbm - ({lo}))/({hi} - ({lo})), clamped to [0,255]; top row is ymax\n{} {}\n255\n",
            self.grid.nx, self.grid.ny
        )
        .expect("write to vec");
        out.extend_from_slice(&self.heatmap_pixels());
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn rsrp_to_gray(rsrp_dbm: f64) -> u8 {
    let (lo, hi) = PGM_RANGE_DBM;
    let v = (rsrp_dbm - lo) / (hi - lo) * 255.0;
    v.round().clamp(0.0, 255.0) as u8
}
