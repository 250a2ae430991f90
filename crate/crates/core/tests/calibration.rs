mod common;

use common::*;
use radioplan::calibration::{
    calibrate, calibrate_problem, initial_params, CalibrationConfig, CalibrationProblem,
    MeasurementSet, OptimizerKind,
};
use radioplan::scene::MaterialParams;
use radioplan::synth::{gen_scene, synth_measurements, SceneSpec};
use radioplan::{Engine, EngineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(seed: u64, noise: f64) -> (radioplan::Scene, MeasurementSet) {
    let s = gen_scene(&SceneSpec {
        width: 200.0,
        height: 200.0,
        n_buildings: 5,
        seed,
    })
    .unwrap();
    let e = Engine::new(&s, EngineConfig::default());
    let m = synth_measurements(e, &s.materials, 600, noise, seed + 100).unwrap();
    (s, m)
}

#[test]
fn loss_gradient_matches_central_difference() {
    let (s, m) = fixture(4, 1.0);
    let e = Engine::new(&s, EngineConfig::default());
    let prob = CalibrationProblem::new(e, &m, &s.materials).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let k = s.num_materials();
        let p = MaterialParams::new(
            (0..k).map(|_| rng.random_range(0.01..1.99)).collect(),
            (0..k).map(|_| rng.random_range(1.01..5.99)).collect(),
        )
        .unwrap();
        let (_, g) = prob.loss_and_gradient(&p);
        let flat = p.to_flat();
        let grad = g.to_flat();
        let h = 1e-5;
        for j in 0..flat.len() {
            let mut up = flat.clone();
            let mut dn = flat.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (prob.loss(&MaterialParams::from_flat(&up))
                - prob.loss(&MaterialParams::from_flat(&dn)))
                / (2.0 * h);
            assert!(
                rel_err(grad[j], fd) < 1e-4 || (grad[j] - fd).abs() < 1e-6,
                "{j}: {} vs {fd}",
                grad[j]
            );
        }
    }
}

#[test]
fn noiseless_recovery_reaches_near_zero_loss() {
    let (s, m) = fixture(2, 0.0);
    let e = Engine::new(&s, EngineConfig::default());
    let p0 = initial_params(&s, 5);
    let r = calibrate(
        e,
        &p0,
        &m,
        &CalibrationConfig {
            epochs: 600,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(
        r.final_loss <= 0.01 * r.initial_loss,
        "{} / {}",
        r.final_loss,
        r.initial_loss
    );
    assert!(r.theta_star.in_closed_box());
    assert_eq!(r.loss_curve.len(), 600);
}

#[test]
fn iterates_stay_in_box_for_both_optimizers() {
    let (s, m) = fixture(6, 3.0);
    let e = Engine::new(&s, EngineConfig::default());
    let prob = CalibrationProblem::new(e, &m, &s.materials).unwrap();
    for (kind, lr) in [(OptimizerKind::Adam, 0.5), (OptimizerKind::Sgd, 1e-3)] {
        let cfg = CalibrationConfig {
            optimizer: kind,
            lr,
            epochs: 40,
            ..Default::default()
        };
        let p0 = initial_params(&s, 1);
        let res = calibrate_problem(&prob, &p0, &cfg, |_, p, _| assert!(p.in_closed_box()));
        if let Ok(r) = res {
            assert!(r.theta_star.in_closed_box());
        }
    }
}

#[test]
fn csv_round_trip_preserves_loss() {
    let (s, m) = fixture(3, 2.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    m.write_csv(&path).unwrap();
    let back = MeasurementSet::read_csv(&path).unwrap();
    assert_eq!(back, m);
    let e = Engine::new(&s, EngineConfig::default());
    let a = radioplan::calibration::loss(e, &s.materials, &m).unwrap();
    let b = radioplan::calibration::loss(e, &s.materials, &back).unwrap();
    assert_eq!(a, b);
}
