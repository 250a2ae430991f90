use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use radioplan::calibration::{calibrate, initial_params, CalibrationConfig, MeasurementSet};
use radioplan::planner::{
    baseline_exhaustive, baseline_random, plan, BoSettings, Budget, CandidateSet, Objective,
    ObjectiveSettings, PlanReport,
};
use radioplan::radiomap::{target, FieldSolver};
use radioplan::scene::BaseStation;
use radioplan::synth::{gen_scene, synth_measurements, SceneSpec};
use radioplan::{
    enumerate_candidates, load_scene, make_grid, save_scene, solve_radiomap, Engine, Error,
    FeasibleRegion, Grid, Result, Scene,
};
use serde::Serialize;

use crate::config::RunConfig;

/// Written next to every command's outputs. Timings are the only
/// non-deterministic field.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub drt_queries: BTreeMap<String, usize>,
    pub timings_s: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig, params: serde_json::Value) -> Self {
        Self {
            tool: "radioplan",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: cfg.seed,
            params,
            config: cfg.clone(),
            outputs: Vec::new(),
            drt_queries: BTreeMap::new(),
            timings_s: BTreeMap::new(),
        }
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("manifest_{}.json", self.command.replace('-', "_")));
        self.output(&path);
        write_json(&path, self)?;
        Ok(path)
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg.out_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::Argument(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Argument(format!("cannot write {}: {e}", path.display())))
}

pub fn gen_scene_cmd(cfg: &RunConfig, spec: SceneSpec, out: Option<PathBuf>) -> Result<Manifest> {
    let dir = out_dir(cfg)?;
    let start = Instant::now();
    let scene = gen_scene(&spec)?;
    let path = out.unwrap_or_else(|| dir.join("scene.json"));
    save_scene(&scene, &path)?;
    let mut m = Manifest::new(
        "gen-scene",
        cfg,
        serde_json::json!({"width": spec.width, "height": spec.height, "n_buildings": spec.n_buildings}),
    );
    m.output(&path);
    m.timings_s
        .insert("total".into(), start.elapsed().as_secs_f64());
    m.write(dir)?;
    println!(
        "wrote {} ({} buildings)",
        path.display(),
        scene.buildings.len()
    );
    Ok(m)
}

pub fn synth_cmd(
    cfg: &RunConfig,
    n_points: usize,
    noise_sigma: f64,
    out: Option<PathBuf>,
) -> Result<Manifest> {
    let dir = out_dir(cfg)?;
    let scene = load_scene(cfg.scene_path()?)?;
    let start = Instant::now();
    let engine = Engine::new(&scene, cfg.engine);
    let meas = synth_measurements(engine, &scene.materials, n_points, noise_sigma, cfg.seed)?;
    let path = out.unwrap_or_else(|| dir.join("measurements.csv"));
    meas.write_csv(&path)?;
    let mut m = Manifest::new(
        "synth-measurements",
        cfg,
        serde_json::json!({"n_points": n_points, "noise_sigma_db": noise_sigma}),
    );
    m.output(&path);
    m.timings_s
        .insert("total".into(), start.elapsed().as_secs_f64());
    m.write(dir)?;
    println!("wrote {} ({} rows)", path.display(), meas.len());
    Ok(m)
}

pub fn calibrate_cmd(cfg: &RunConfig) -> Result<Manifest> {
    let dir = out_dir(cfg)?;
    let scene = load_scene(cfg.scene_path()?)?;
    let meas = MeasurementSet::read_csv(cfg.measurements_path()?)?;
    let start = Instant::now();
    let engine = Engine::new(&scene, cfg.engine);
    let p0 = initial_params(&scene, cfg.seed);
    let report = calibrate(
        engine,
        &p0,
        &meas,
        &CalibrationConfig {
            lr: cfg.lr,
            epochs: cfg.epochs,
            optimizer: cfg.optimizer,
            batch_size: cfg.batch_size,
            seed: cfg.seed,
        },
    )?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut m = Manifest::new("calibrate", cfg, serde_json::json!({}));
    let report_path = dir.join("calibration.json");
    write_json(&report_path, &report)?;
    m.output(&report_path);
    let loss_path = dir.join("loss.csv");
    report.write_loss_csv(&loss_path)?;
    m.output(&loss_path);
    let scene_path = dir.join("scene_calibrated.json");
    save_scene(
        &scene.with_materials(report.theta_star.clone()),
        &scene_path,
    )?;
    m.output(&scene_path);
    m.timings_s.insert("calibrate".into(), elapsed);
    m.write(dir)?;

    println!(
        "loss {:.4} -> {:.4} dB² over {} epochs ({} measurements)",
        report.initial_loss, report.final_loss, report.epochs, report.num_measurements
    );
    for (k, c) in report.crossings_per_material.iter().enumerate() {
        if *c == 0 {
            eprintln!(
                "warning: material {k} is never crossed; its parameters keep their initial values"
            );
        }
    }
    Ok(m)
}

/// Scene, grid and candidates for the planning commands.
struct Planning {
    scene: Scene,
    grid: Grid,
    candidates: CandidateSet,
}

impl Planning {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let scene = load_scene(cfg.scene_path()?)?;
        let grid = make_grid(&scene, cfg.grid_res_m)?;
        let feasible = FeasibleRegion {
            mount_offset: cfg.mount_offset_m,
            ..FeasibleRegion::default()
        };
        let sites = enumerate_candidates(&scene, &feasible, cfg.es_step_m)?;
        let candidates = CandidateSet::new(&scene, sites)?;
        Ok(Self {
            scene,
            grid,
            candidates,
        })
    }

    fn objective(&self, cfg: &RunConfig, tx_power: f64) -> Objective<'_> {
        let engine = Engine::new(&self.scene, cfg.engine);
        let settings = ObjectiveSettings {
            alpha_weight: cfg.alpha,
            r_th: cfg.rth_dbm,
            tx_power,
            antenna_gain: 0.0,
        };
        Objective::new(
            FieldSolver::new(engine, &self.scene.materials, &self.grid),
            &self.scene,
            settings,
        )
    }

    fn run_plan(&self, cfg: &RunConfig, objective: &Objective<'_>) -> Result<PlanReport> {
        plan(
            objective,
            &self.scene,
            &self.candidates,
            cfg.n_new,
            Budget {
                q_init: cfg.budget_init,
                q_bo: cfg.budget_bo,
            },
            BoSettings {
                xi: cfg.xi,
                ..BoSettings::default()
            },
            cfg.seed,
        )
    }
}

/// Human-readable comparison table: coverage %, capacity, target, queries.
pub fn table(reports: &[&PlanReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:>11} {:>16} {:>9} {:>12}",
        "method", "coverage_%", "capacity_bps_hz", "target", "drt_queries"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<18} {:>11.2} {:>16.3} {:>9.3} {:>12}",
            r.method,
            100.0 * r.metrics.coverage,
            r.metrics.capacity,
            r.metrics.target,
            r.drt_queries
        );
    }
    s
}

fn write_plan(
    dir: &Path,
    stem: &str,
    report: &PlanReport,
    c: &CandidateSet,
    m: &mut Manifest,
) -> Result<()> {
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, report)?;
    m.output(&json);
    let trace = dir.join(format!("{stem}_trace.csv"));
    report.write_trace_csv(&trace, c)?;
    m.output(&trace);
    m.drt_queries
        .insert(report.method.clone(), report.drt_queries);
    m.timings_s
        .insert(report.method.clone(), report.wall_time_s);
    Ok(())
}

pub fn plan_cmd(cfg: &RunConfig) -> Result<Manifest> {
    let dir = out_dir(cfg)?;
    let p = Planning::load(cfg)?;
    let mut m = Manifest::new(
        "plan",
        cfg,
        serde_json::json!({"num_candidates": p.candidates.len(), "grid_points": p.grid.len()}),
    );
    let objective = p.objective(cfg, cfg.tx_power_dbm);
    let report = p.run_plan(cfg, &objective)?;
    write_plan(dir, "plan", &report, &p.candidates, &mut m)?;
    let t = table(&[&report]);
    let table_path = dir.join("plan_table.txt");
    write_text(&table_path, &t)?;
    m.output(&table_path);
    print!("{t}");

    if !cfg.tx_power_list.is_empty() {
        let mut csv = String::from("tx_power_dbm,n_new,coverage,capacity,target\n");
        for &power in &cfg.tx_power_list {
            let obj = p.objective(cfg, power);
            let r = p.run_plan(cfg, &obj)?;
            for tr in &r.traces {
                let mt = &tr.metrics_after;
                let _ = writeln!(
                    csv,
                    "{power},{},{},{},{}",
                    tr.step, mt.coverage, mt.capacity, mt.target
                );
            }
            m.drt_queries
                .insert(format!("sweep_{power}"), r.drt_queries);
            m.timings_s.insert(format!("sweep_{power}"), r.wall_time_s);
        }
        let sweep = dir.join("tx_power_sweep.csv");
        write_text(&sweep, &csv)?;
        m.output(&sweep);
    }
    m.write(dir)?;
    Ok(m)
}

pub fn baselines_cmd(cfg: &RunConfig) -> Result<Manifest> {
    let dir = out_dir(cfg)?;
    let p = Planning::load(cfg)?;
    let mut m = Manifest::new(
        "baselines",
        cfg,
        serde_json::json!({"num_candidates": p.candidates.len(), "grid_points": p.grid.len()}),
    );
    let objective = p.objective(cfg, cfg.tx_power_dbm);
    let bo = p.run_plan(cfg, &objective)?;
    let rs = baseline_random(
        &objective,
        &p.scene,
        &p.candidates,
        cfg.n_new,
        cfg.rs_groups,
        cfg.seed,
    )?;
    let es = baseline_exhaustive(&objective, &p.scene, &p.candidates, cfg.n_new)?;
    write_plan(dir, "plan", &bo, &p.candidates, &mut m)?;
    write_plan(dir, "random_sampling", &rs, &p.candidates, &mut m)?;
    write_plan(dir, "exhaustive_search", &es, &p.candidates, &mut m)?;
    let t = table(&[&bo, &rs, &es]);
    let table_path = dir.join("baselines_table.txt");
    write_text(&table_path, &t)?;
    m.output(&table_path);
    print!("{t}");
    println!(
        "plan reaches {:.2}% of exhaustive-search T with {:.1}% of its queries; exhaustive search took {:.2} s, {:.1}x the planner",
        100.0 * bo.metrics.target / es.metrics.target,
        100.0 * bo.drt_queries as f64 / es.drt_queries as f64,
        es.wall_time_s,
        es.wall_time_s / bo.wall_time_s.max(1e-9)
    );
    m.write(dir)?;
    Ok(m)
}

/// Selected stations from a plan report file.
fn stations_from_plan(path: &Path) -> Result<Vec<BaseStation>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Argument(format!("cannot read plan {}: {e}", path.display())))?;
    #[derive(serde::Deserialize)]
    struct Selected {
        selected: Vec<BaseStation>,
    }
    let s: Selected = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(s.selected)
}

pub fn map_cmd(cfg: &RunConfig, plan_file: Option<&Path>) -> Result<Manifest> {
    let dir = out_dir(cfg)?;
    let scene = load_scene(cfg.scene_path()?)?;
    let mut stations = scene.existing_bs.clone();
    let mut m = Manifest::new(
        "map",
        cfg,
        serde_json::json!({"plan": plan_file.map(|p| p.display().to_string())}),
    );
    if let Some(p) = plan_file {
        stations.extend(stations_from_plan(p)?);
    }
    let start = Instant::now();
    let grid = make_grid(&scene, cfg.grid_res_m)?;
    let map = solve_radiomap(
        Engine::new(&scene, cfg.engine),
        &scene.materials,
        &stations,
        &grid,
    )?;
    m.timings_s
        .insert("solve".into(), start.elapsed().as_secs_f64());
    let metrics = target(&map, cfg.alpha, cfg.rth_dbm);
    let csv = dir.join("map.csv");
    map.write_csv(&csv)?;
    m.output(&csv);
    let pgm = dir.join("map.pgm");
    map.write_pgm(&pgm)?;
    m.output(&pgm);
    let mj = dir.join("map_metrics.json");
    write_json(&mj, &metrics)?;
    m.output(&mj);
    m.write(dir)?;
    println!(
        "{} stations, {} points: coverage {:.2}%, capacity {:.3} bit/s/Hz, target {:.3}",
        stations.len(),
        grid.len(),
        100.0 * metrics.coverage,
        metrics.capacity,
        metrics.target
    );
    Ok(m)
}
