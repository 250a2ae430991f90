//! Python bindings. Reports come back as plain dicts (parsed from the same
//! JSON the CLI writes).

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use radioplan::calibration::{self, CalibrationConfig, Measurement, MeasurementSet, OptimizerKind};
use radioplan::geometry::Point2;
use radioplan::planner::{
    self, BoSettings, Budget, CandidateSet, Objective, ObjectiveSettings, PlanReport,
};
use radioplan::radiomap::{self, FieldSolver};
use radioplan::scene::BaseStation;
use radioplan::synth::{self, SceneSpec};
use radioplan::{make_grid, Engine, EngineConfig, Error, FeasibleRegion, MaterialParams};

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io { .. } => PyOSError::new_err(msg),
        Error::Numerical(_) => PyArithmeticError::new_err(msg),
        Error::Planning(_) => PyRuntimeError::new_err(msg),
        Error::Parse(_) | Error::Validation(_) | Error::Argument(_) => PyValueError::new_err(msg),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

type Station = (f64, f64, f64, f64, f64);

fn station((x, y, z, p, g): Station) -> BaseStation {
    BaseStation::new(x, y, z, p, g)
}

/// A validated scene: region, buildings, existing stations and materials.
#[pyclass(name = "Scene", module = "radioplan", frozen)]
struct PyScene {
    inner: radioplan::Scene,
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        radioplan::load_scene(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        radioplan::Scene::from_json(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Random non-overlapping rectangular buildings plus one rooftop station.
    #[staticmethod]
    #[pyo3(signature = (width, height, n_buildings, seed=0))]
    fn generate(width: f64, height: f64, n_buildings: usize, seed: u64) -> PyResult<Self> {
        synth::gen_scene(&SceneSpec {
            width,
            height,
            n_buildings,
            seed,
        })
        .map(|inner| Self { inner })
        .map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        radioplan::save_scene(&self.inner, path).map_err(to_py)
    }

    /// Copy of the scene with new (σ, ε) per material.
    fn with_materials(&self, sigma: Vec<f64>, epsilon: Vec<f64>) -> PyResult<Self> {
        if sigma.len() != self.inner.num_materials() || epsilon.len() != sigma.len() {
            return Err(PyValueError::new_err(
                "material count does not match the scene",
            ));
        }
        let m = MaterialParams::new(sigma, epsilon).map_err(to_py)?;
        Ok(Self {
            inner: self.inner.with_materials(m),
        })
    }

    #[getter]
    fn num_buildings(&self) -> usize {
        self.inner.buildings.len()
    }

    #[getter]
    fn num_materials(&self) -> usize {
        self.inner.num_materials()
    }

    #[getter]
    fn sigma(&self) -> Vec<f64> {
        self.inner.materials.sigma.clone()
    }

    #[getter]
    fn epsilon(&self) -> Vec<f64> {
        self.inner.materials.epsilon.clone()
    }

    #[getter]
    fn region(&self) -> (f64, f64, f64, f64) {
        let r = self.inner.region;
        (r.xmin, r.ymin, r.xmax, r.ymax)
    }

    /// Existing stations as `(x, y, z, tx_power_dbm, antenna_gain_db)`.
    #[getter]
    fn existing_bs(&self) -> Vec<Station> {
        self.inner
            .existing_bs
            .iter()
            .map(|b| (b.x, b.y, b.z, b.tx_power, b.antenna_gain))
            .collect()
    }

    fn __repr__(&self) -> String {
        let r = self.inner.region;
        format!(
            "Scene({}x{} m, {} buildings, {} stations)",
            r.width(),
            r.height(),
            self.inner.buildings.len(),
            self.inner.existing_bs.len()
        )
    }
}

/// RSRP in dBm at `rx = (x, y)` from `tx = (x, y, z, power, gain)` under the
/// scene's materials.
#[pyfunction]
fn rsrp(scene: &PyScene, tx: Station, rx: (f64, f64)) -> f64 {
    let s = &scene.inner;
    Engine::new(s, EngineConfig::default()).rsrp(
        &s.materials,
        &station(tx),
        Point2::new(rx.0, rx.1),
    )
}

/// `(dRSRP/dσ, dRSRP/dε)` per material.
#[pyfunction]
fn rsrp_gradient(scene: &PyScene, tx: Station, rx: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let s = &scene.inner;
    let g = Engine::new(s, EngineConfig::default()).rsrp_gradient(
        &s.materials,
        &station(tx),
        Point2::new(rx.0, rx.1),
    );
    (g.d_sigma, g.d_epsilon)
}

/// Noisy measurements `(x, y, rsrp_dbm)` using the scene's materials as truth.
#[pyfunction]
#[pyo3(signature = (scene, n_points, noise_sigma=0.0, seed=0))]
fn synth_measurements(
    scene: &PyScene,
    n_points: usize,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let s = &scene.inner;
    let m = synth::synth_measurements(
        Engine::new(s, EngineConfig::default()),
        &s.materials,
        n_points,
        noise_sigma,
        seed,
    )
    .map_err(to_py)?;
    Ok(m.records.iter().map(|r| (r.x, r.y, r.rsrp)).collect())
}

fn measurement_set(rows: Vec<(f64, f64, f64)>) -> MeasurementSet {
    MeasurementSet::new(
        rows.into_iter()
            .map(|(x, y, rsrp)| Measurement {
                x,
                y,
                rsrp,
                bs_index: None,
            })
            .collect(),
    )
}

/// Mean squared residual of `measurements` under the scene's materials.
#[pyfunction]
fn calibration_loss(scene: &PyScene, measurements: Vec<(f64, f64, f64)>) -> PyResult<f64> {
    let s = &scene.inner;
    calibration::loss(
        Engine::new(s, EngineConfig::default()),
        &s.materials,
        &measurement_set(measurements),
    )
    .map_err(to_py)
}

/// Fits the scene's materials to `(x, y, rsrp_dbm)` rows; returns the report
/// as a dict.
#[pyfunction]
#[pyo3(signature = (scene, measurements, epochs=300, lr=0.01, optimizer="adam", seed=0))]
fn calibrate<'py>(
    py: Python<'py>,
    scene: &PyScene,
    measurements: Vec<(f64, f64, f64)>,
    epochs: usize,
    lr: f64,
    optimizer: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = &scene.inner;
    let optimizer: OptimizerKind = optimizer.parse().map_err(PyValueError::new_err)?;
    let p0 = calibration::initial_params(s, seed);
    let cfg = CalibrationConfig {
        lr,
        epochs,
        optimizer,
        batch_size: None,
        seed,
    };
    let report = calibration::calibrate(
        Engine::new(s, EngineConfig::default()),
        &p0,
        &measurement_set(measurements),
        &cfg,
    )
    .map_err(to_py)?;
    json_to_py(py, &report)
}

/// Coverage, capacity and target of the existing stations plus `extra`.
#[pyfunction]
#[pyo3(signature = (scene, extra=Vec::new(), grid_res=2.0, alpha=10.0, rth_dbm=-90.0))]
fn radio_map<'py>(
    py: Python<'py>,
    scene: &PyScene,
    extra: Vec<Station>,
    grid_res: f64,
    alpha: f64,
    rth_dbm: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let s = &scene.inner;
    let grid = make_grid(s, grid_res).map_err(to_py)?;
    let stations: Vec<BaseStation> = s
        .existing_bs
        .iter()
        .copied()
        .chain(extra.into_iter().map(station))
        .collect();
    let map = radioplan::solve_radiomap(
        Engine::new(s, EngineConfig::default()),
        &s.materials,
        &stations,
        &grid,
    )
    .map_err(to_py)?;
    let metrics = radiomap::target(&map, alpha, rth_dbm);
    let out = json_to_py(py, &metrics)?;
    out.set_item("best_rsrp", map.best_rsrp)?;
    out.set_item("serving_bs", map.serving_bs)?;
    out.set_item("shape", (grid.ny, grid.nx))?;
    Ok(out)
}

/// Planning inputs shared by `plan` and the baselines.
struct PlanArgs {
    grid_res: f64,
    es_step: f64,
    alpha: f64,
    rth_dbm: f64,
    tx_power: f64,
}

fn with_objective<R>(
    scene: &radioplan::Scene,
    a: &PlanArgs,
    f: impl FnOnce(&Objective<'_>, &CandidateSet) -> radioplan::Result<R>,
) -> PyResult<R> {
    let grid = make_grid(scene, a.grid_res).map_err(to_py)?;
    let sites = radioplan::enumerate_candidates(scene, &FeasibleRegion::default(), a.es_step)
        .map_err(to_py)?;
    let cands = CandidateSet::new(scene, sites).map_err(to_py)?;
    let settings = ObjectiveSettings {
        alpha_weight: a.alpha,
        r_th: a.rth_dbm,
        tx_power: a.tx_power,
        antenna_gain: 0.0,
    };
    let engine = Engine::new(scene, EngineConfig::default());
    let obj = Objective::new(
        FieldSolver::new(engine, &scene.materials, &grid),
        scene,
        settings,
    );
    f(&obj, &cands).map_err(to_py)
}

fn report_to_py<'py>(py: Python<'py>, r: &PlanReport) -> PyResult<Bound<'py, PyAny>> {
    let out = json_to_py(py, r)?;
    out.set_item("wall_time_s", r.wall_time_s)?;
    Ok(out)
}

/// Places `n_new` stations with the GP/EI planner.
#[pyfunction]
#[pyo3(signature = (scene, n_new=3, grid_res=2.0, es_step=5.0, budget_init=10, budget_bo=30, seed=0, alpha=10.0, rth_dbm=-90.0, tx_power=43.0))]
#[allow(clippy::too_many_arguments)]
fn plan<'py>(
    py: Python<'py>,
    scene: &PyScene,
    n_new: usize,
    grid_res: f64,
    es_step: f64,
    budget_init: usize,
    budget_bo: usize,
    seed: u64,
    alpha: f64,
    rth_dbm: f64,
    tx_power: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let a = PlanArgs {
        grid_res,
        es_step,
        alpha,
        rth_dbm,
        tx_power,
    };
    let budget = Budget {
        q_init: budget_init,
        q_bo: budget_bo,
    };
    let r = with_objective(&scene.inner, &a, |obj, c| {
        planner::plan(
            obj,
            &scene.inner,
            c,
            n_new,
            budget,
            BoSettings::default(),
            seed,
        )
    })?;
    report_to_py(py, &r)
}

/// Best of `n_groups` random groups of `n_new` candidates.
#[pyfunction]
#[pyo3(signature = (scene, n_new=3, n_groups=100, grid_res=2.0, es_step=5.0, seed=0, alpha=10.0, rth_dbm=-90.0, tx_power=43.0))]
#[allow(clippy::too_many_arguments)]
fn baseline_random<'py>(
    py: Python<'py>,
    scene: &PyScene,
    n_new: usize,
    n_groups: usize,
    grid_res: f64,
    es_step: f64,
    seed: u64,
    alpha: f64,
    rth_dbm: f64,
    tx_power: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let a = PlanArgs {
        grid_res,
        es_step,
        alpha,
        rth_dbm,
        tx_power,
    };
    let r = with_objective(&scene.inner, &a, |obj, c| {
        planner::baseline_random(obj, &scene.inner, c, n_new, n_groups, seed)
    })?;
    report_to_py(py, &r)
}

/// Greedy exhaustive search over every candidate.
#[pyfunction]
#[pyo3(signature = (scene, n_new=3, grid_res=2.0, es_step=5.0, alpha=10.0, rth_dbm=-90.0, tx_power=43.0))]
#[allow(clippy::too_many_arguments)]
fn baseline_exhaustive<'py>(
    py: Python<'py>,
    scene: &PyScene,
    n_new: usize,
    grid_res: f64,
    es_step: f64,
    alpha: f64,
    rth_dbm: f64,
    tx_power: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let a = PlanArgs {
        grid_res,
        es_step,
        alpha,
        rth_dbm,
        tx_power,
    };
    let r = with_objective(&scene.inner, &a, |obj, c| {
        planner::baseline_exhaustive(obj, &scene.inner, c, n_new)
    })?;
    report_to_py(py, &r)
}

/// Closed-form EI of `N(mu, std²)` over `t_best + xi`.
#[pyfunction]
#[pyo3(signature = (mu, std, t_best, xi=0.01))]
fn expected_improvement(mu: f64, std: f64, t_best: f64, xi: f64) -> f64 {
    planner::expected_improvement(mu, std, t_best, xi)
}

#[pymodule(name = "radioplan")]
fn radioplan_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(rsrp, m)?)?;
    m.add_function(wrap_pyfunction!(rsrp_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(synth_measurements, m)?)?;
    m.add_function(wrap_pyfunction!(calibration_loss, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(radio_map, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_random, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(expected_improvement, m)?)?;
    Ok(())
}
