//! Fits the material parameters to measured RSRP by projected gradient
//! descent on the mean squared sim-to-real residual.

mod measurements;
mod optimizer;

pub use measurements::{Measurement, MeasurementSet};
pub use optimizer::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::{accumulate_link_gradient, Engine, Link, MaterialGradient};
use crate::scene::{MaterialParams, Scene};

pub const DEFAULT_LR: f64 = 0.01;
pub const DEFAULT_EPOCHS: usize = 300;

/// Measurements bound to their propagation links. Link geometry and the
/// serving-station association are fixed at construction.
pub struct CalibrationProblem<'a> {
    engine: Engine<'a>,
    links: Vec<Link>,
    measured: Vec<f64>,
    serving: Vec<usize>,
}

impl<'a> CalibrationProblem<'a> {
    /// Measurements without a `bs_index` are served by the station with the
    /// highest simulated RSRP under `association_params` (lowest index on ties).
    pub fn new(
        engine: Engine<'a>,
        measurements: &MeasurementSet,
        association_params: &MaterialParams,
    ) -> Result<Self> {
        let scene = engine.scene;
        if measurements.is_empty() {
            return Err(Error::Argument("measurement set is empty".into()));
        }
        if scene.existing_bs.is_empty() {
            return Err(Error::Argument(
                "calibration needs at least one existing base station".into(),
            ));
        }
        if association_params.len() != scene.num_materials() {
            return Err(Error::Argument(format!(
                "parameter set has {} materials, scene has {}",
                association_params.len(),
                scene.num_materials()
            )));
        }
        let table = engine.wall_table(association_params);
        let mut links = Vec::with_capacity(measurements.len());
        let mut serving = Vec::with_capacity(measurements.len());
        for (p, m) in measurements.records.iter().enumerate() {
            let pos = m.position();
            if !scene.region.contains(pos) {
                return Err(Error::Validation(format!(
                    "measurement {p} at ({}, {}) is outside the region",
                    m.x, m.y
                )));
            }
            if !m.rsrp.is_finite() {
                return Err(Error::Validation(format!(
                    "measurement {p}: rsrp is not finite"
                )));
            }
            let (bs, link) = match m.bs_index {
                Some(b) => {
                    let tx = scene.existing_bs.get(b).ok_or_else(|| {
                        Error::Validation(format!(
                            "measurement {p}: bs_index {b} out of range (M={})",
                            scene.existing_bs.len()
                        ))
                    })?;
                    (b, engine.link(tx, pos))
                }
                None => {
                    let mut best: Option<(usize, Link, f64)> = None;
                    for (b, tx) in scene.existing_bs.iter().enumerate() {
                        let link = engine.link(tx, pos);
                        let r = link.rsrp(&table);
                        if best.as_ref().is_none_or(|(_, _, br)| r > *br) {
                            best = Some((b, link, r));
                        }
                    }
                    let (b, link, _) = best.expect("at least one base station");
                    (b, link)
                }
            };
            links.push(link);
            serving.push(bs);
        }
        Ok(Self {
            engine,
            links,
            measured: measurements.records.iter().map(|m| m.rsrp).collect(),
            serving,
        })
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn num_materials(&self) -> usize {
        self.engine.scene.num_materials()
    }

    pub fn serving_bs(&self) -> &[usize] {
        &self.serving
    }

    /// Total wall crossings per material over all measurement paths.
    pub fn crossings_per_material(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.num_materials()];
        for link in &self.links {
            for &(k, c) in &link.walls {
                counts[k] += c as u64;
            }
        }
        counts
    }

    /// Simulated RSRP for every measurement.
    pub fn simulate(&self, params: &MaterialParams) -> Vec<f64> {
        let table = self.engine.wall_table(params);
        self.links.par_iter().map(|l| l.rsrp(&table)).collect()
    }

    pub fn residuals(&self, params: &MaterialParams) -> Vec<f64> {
        let sim = self.simulate(params);
        sim.iter().zip(&self.measured).map(|(s, m)| s - m).collect()
    }

    /// Mean squared residual in dB².
    pub fn loss(&self, params: &MaterialParams) -> f64 {
        let res = self.residuals(params);
        res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64
    }

    pub fn loss_and_gradient(&self, params: &MaterialParams) -> (f64, MaterialGradient) {
        let all: Vec<usize> = (0..self.len()).collect();
        self.batch_loss_and_gradient(params, &all)
    }

    /// Loss and gradient restricted to the measurements in `batch`, summed
    /// in batch order.
    pub fn batch_loss_and_gradient(
        &self,
        params: &MaterialParams,
        batch: &[usize],
    ) -> (f64, MaterialGradient) {
        let table = self.engine.wall_table(params);
        let residuals: Vec<f64> = batch
            .par_iter()
            .map(|&i| self.links[i].rsrp(&table) - self.measured[i])
            .collect();
        let n = batch.len() as f64;
        let mut grad = MaterialGradient::zeros(params.len());
        let mut sum_sq = 0.0;
        for (&i, &r) in batch.iter().zip(&residuals) {
            sum_sq += r * r;
            accumulate_link_gradient(&self.links[i], &table, 2.0 * r / n, &mut grad);
        }
        (sum_sq / n, grad)
    }
}

/// Sim-to-real MSE with serving stations resolved at `params`.
pub fn loss(
    engine: Engine<'_>,
    params: &MaterialParams,
    measurements: &MeasurementSet,
) -> Result<f64> {
    Ok(CalibrationProblem::new(engine, measurements, params)?.loss(params))
}

/// Analytic gradient of [`loss`] with respect to every (σ_k, ε_k).
pub fn loss_gradient(
    engine: Engine<'_>,
    params: &MaterialParams,
    measurements: &MeasurementSet,
) -> Result<MaterialGradient> {
    Ok(CalibrationProblem::new(engine, measurements, params)?
        .loss_and_gradient(params)
        .1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub lr: f64,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    /// Measurements per update; `None` means full batch.
    pub batch_size: Option<usize>,
    /// Shuffling seed for mini-batches.
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            lr: DEFAULT_LR,
            epochs: DEFAULT_EPOCHS,
            optimizer: OptimizerKind::Adam,
            batch_size: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub epochs: usize,
    pub num_measurements: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Loss after each epoch's update.
    pub loss_curve: Vec<f64>,
    pub theta_initial: MaterialParams,
    pub theta_star: MaterialParams,
    /// Wall crossings per material over all measurement paths; a material
    /// with zero crossings is unobservable and keeps its initial value.
    pub crossings_per_material: Vec<u64>,
}

impl CalibrationReport {
    pub fn write_loss_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "loss"])?;
        w.write_record(["0".to_string(), self.initial_loss.to_string()])?;
        for (e, l) in self.loss_curve.iter().enumerate() {
            w.write_record([(e + 1).to_string(), l.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Initial Θ: canonical values when the scene labels its materials,
/// otherwise uniform in the closed box from a seeded RNG.
pub fn initial_params(scene: &Scene, seed: u64) -> MaterialParams {
    let k = scene.num_materials();
    if let Some(labels) = &scene.material_labels {
        let mut sigma = Vec::with_capacity(k);
        let mut epsilon = Vec::with_capacity(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for label in labels {
            let (s, e) = MaterialParams::canonical(label, scene.carrier_freq)
                .unwrap_or_else(|| random_material(&mut rng));
            sigma.push(s);
            epsilon.push(e);
        }
        return MaterialParams { sigma, epsilon };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sigma, epsilon) = (0..k).map(|_| random_material(&mut rng)).unzip();
    MaterialParams { sigma, epsilon }
}

fn random_material(rng: &mut impl Rng) -> (f64, f64) {
    let (slo, shi) = MaterialParams::sigma_range();
    let (elo, ehi) = MaterialParams::epsilon_range();
    (rng.random_range(slo..=shi), rng.random_range(elo..=ehi))
}

/// Projected gradient descent from `params0`; the serving-station
/// association is frozen at `params0`.
pub fn calibrate(
    engine: Engine<'_>,
    params0: &MaterialParams,
    measurements: &MeasurementSet,
    config: &CalibrationConfig,
) -> Result<CalibrationReport> {
    let problem = CalibrationProblem::new(engine, measurements, params0)?;
    calibrate_problem(&problem, params0, config, |_, _, _| {})
}

/// Like [`calibrate`] on a prepared problem; `observer(epoch, params, loss)`
/// runs after every epoch.
pub fn calibrate_problem(
    problem: &CalibrationProblem<'_>,
    params0: &MaterialParams,
    config: &CalibrationConfig,
    mut observer: impl FnMut(usize, &MaterialParams, f64),
) -> Result<CalibrationReport> {
    if !(config.lr > 0.0) || !config.lr.is_finite() {
        return Err(Error::Argument(format!(
            "learning rate must be > 0, got {}",
            config.lr
        )));
    }
    if config.epochs == 0 {
        return Err(Error::Argument("epochs must be >= 1".into()));
    }
    if params0.len() != problem.num_materials() {
        return Err(Error::Argument(
            "initial parameters do not match the scene".into(),
        ));
    }
    let p = problem.len();
    let batch_size = config.batch_size.unwrap_or(p).clamp(1, p);

    let mut params = params0.clone();
    params.project();
    let initial_loss = problem.loss(&params);
    if !initial_loss.is_finite() {
        return Err(Error::Numerical("initial loss is not finite".into()));
    }

    let mut flat = params.to_flat();
    let mut opt = Optimizer::new(config.optimizer, config.lr, flat.len());
    let mut order: Vec<usize> = (0..p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut loss_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if batch_size < p {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(batch_size) {
            let (_, grad) = problem.batch_loss_and_gradient(&params, batch);
            let g = grad.to_flat();
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite gradient at epoch {}",
                    epoch + 1
                )));
            }
            opt.step(&mut flat, &g);
            params = MaterialParams::from_flat(&flat);
            params.project();
            flat = params.to_flat();
        }
        let l = problem.loss(&params);
        if !l.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss at epoch {}",
                epoch + 1
            )));
        }
        observer(epoch, &params, l);
        loss_curve.push(l);
    }

    Ok(CalibrationReport {
        optimizer: config.optimizer,
        lr: config.lr,
        epochs: config.epochs,
        num_measurements: p,
        initial_loss,
        final_loss: *loss_curve.last().expect("epochs >= 1"),
        loss_curve,
        theta_initial: params0.clone(),
        theta_star: params,
        crossings_per_material: problem.crossings_per_material(),
    })
}
