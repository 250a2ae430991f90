mod common;

use common::*;
use radioplan::geometry::Point2;
use radioplan::radiomap::{capacity, coverage, rsrp_to_gray, target};
use radioplan::scene::{BaseStation, MaterialParams};
use radioplan::synth::{gen_scene, SceneSpec};
use radioplan::{make_grid, solve_radiomap, Engine, EngineConfig, Grid, Rect};

#[test]
fn solver_matches_naive_double_loop() {
    for seed in 0..4 {
        let mut s = gen_scene(&SceneSpec {
            width: 180.0,
            height: 120.0,
            n_buildings: 6,
            seed,
        })
        .unwrap();
        s.existing_bs
            .push(BaseStation::new(10.0, 10.0, 12.0, 40.0, 3.0));
        s.existing_bs
            .push(BaseStation::new(170.0, 110.0, 8.0, 46.0, 0.0));
        let e = Engine::new(&s, EngineConfig::default());
        let grid = make_grid(&s, 6.0).unwrap();
        let map = solve_radiomap(e, &s.materials, &s.existing_bs, &grid).unwrap();
        let pts: Vec<Point2> = grid.points().collect();
        let want = best_rsrp_oracle(&s, &s.materials, &s.existing_bs, &pts);
        for (i, (r, b)) in want.iter().enumerate() {
            assert!((map.best_rsrp[i] - r).abs() < 1e-9);
            assert_eq!(map.serving_bs[i], *b);
        }
        let (c, cap, t) = metrics_oracle(&map.best_rsrp, 10.0, -90.0);
        assert!((coverage(&map, -90.0) - c).abs() < 1e-12);
        assert!((capacity(&map) - cap).abs() < 1e-9);
        assert!((target(&map, 10.0, -90.0).target - t).abs() < 1e-9);
    }
}

#[test]
fn adding_a_station_never_lowers_any_point() {
    let s = gen_scene(&SceneSpec {
        width: 200.0,
        height: 200.0,
        n_buildings: 10,
        seed: 5,
    })
    .unwrap();
    let e = Engine::new(&s, EngineConfig::default());
    let grid = make_grid(&s, 5.0).unwrap();
    let mut set = s.existing_bs.clone();
    let mut prev = solve_radiomap(e, &s.materials, &set, &grid).unwrap();
    for (x, y) in [(20.0, 30.0), (180.0, 20.0), (100.0, 190.0)] {
        set.push(BaseStation::new(x, y, 15.0, 43.0, 0.0));
        let next = solve_radiomap(e, &s.materials, &set, &grid).unwrap();
        assert!(next
            .best_rsrp
            .iter()
            .zip(&prev.best_rsrp)
            .all(|(a, b)| a >= b));
        assert!(target(&next, 10.0, -90.0).target >= target(&prev, 10.0, -90.0).target);
        prev = next;
    }
}

#[test]
fn three_by_three_two_stations() {
    let s = scene(
        Rect::new(0.0, 0.0, 3.0, 3.0),
        vec![],
        vec![
            BaseStation::new(0.5, 0.5, 10.0, 43.0, 0.0),
            BaseStation::new(2.5, 2.5, 10.0, 43.0, 0.0),
        ],
        MaterialParams::new(vec![], vec![]).unwrap(),
    );
    let e = Engine::new(&s, EngineConfig::default());
    let grid = Grid::new(s.region, 1.0, s.rx_height).unwrap();
    assert_eq!(grid.len(), 9);
    let map = solve_radiomap(e, &s.materials, &s.existing_bs, &grid).unwrap();
    // the anti-diagonal is equidistant, so station 0 keeps it
    for (i, p) in grid.points().enumerate() {
        let d0 = (p.x - 0.5).hypot(p.y - 0.5);
        let d1 = (p.x - 2.5).hypot(p.y - 2.5);
        let want = if d1 < d0 - 1e-12 { 1 } else { 0 };
        assert_eq!(map.serving_bs[i], want, "point {p:?}");
    }
}

#[test]
fn exports_have_expected_shape() {
    let s = gen_scene(&SceneSpec {
        width: 60.0,
        height: 40.0,
        n_buildings: 2,
        seed: 1,
    })
    .unwrap();
    let e = Engine::new(&s, EngineConfig::default());
    let grid = make_grid(&s, 4.0).unwrap();
    let map = solve_radiomap(e, &s.materials, &s.existing_bs, &grid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    map.write_csv(dir.path().join("m.csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,y,rsrp_dbm,snr_db,serving_bs");
    assert_eq!(lines.count(), grid.len());

    map.write_pgm(dir.path().join("m.pgm")).unwrap();
    let bytes = std::fs::read(dir.path().join("m.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5"));
    let pixels = grid.nx * grid.ny;
    assert_eq!(&bytes[bytes.len() - pixels..], &map.heatmap_pixels()[..]);
    assert_eq!(rsrp_to_gray(-200.0), 0);
    assert_eq!(rsrp_to_gray(0.0), 255);
}
