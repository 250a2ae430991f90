"""Smoke test for the radioplan Python extension.

Build the module first, e.g.

    cargo build --release -p radioplan-py --features extension-module
    cp target/release/libradioplan_py.so python/radioplan.so

or `maturin develop -m crates/py/Cargo.toml`, then run `python3 python/smoke_test.py`.
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import radioplan as rp


def main():
    scene = rp.Scene.generate(150.0, 150.0, 5, seed=1)
    assert scene.num_buildings == 5 and scene.num_materials == 5
    again = rp.Scene.from_json(scene.to_json())
    assert again.to_json() == scene.to_json()

    tx = scene.existing_bs[0]
    r = rp.rsrp(scene, tx, (10.0, 140.0))
    assert math.isfinite(r) and r < tx[3]
    d_sigma, d_eps = rp.rsrp_gradient(scene, tx, (10.0, 140.0))
    assert len(d_sigma) == len(d_eps) == 5

    meas = rp.synth_measurements(scene, 400, noise_sigma=0.0, seed=2)
    assert len(meas) == 400
    assert rp.calibration_loss(scene, meas) < 1e-18

    off = scene.with_materials([1.0] * 5, [3.0] * 5)
    report = rp.calibrate(off, meas, epochs=200, seed=3)
    assert report["final_loss"] < report["initial_loss"]
    assert len(report["loss_curve"]) == 200

    base = rp.radio_map(scene, grid_res=5.0)
    ny, nx = base["shape"]
    assert len(base["best_rsrp"]) <= nx * ny
    assert abs(base["target"] - (10 * base["coverage"] + base["capacity"])) < 1e-12

    plan = rp.plan(scene, n_new=2, grid_res=8.0, seed=4)
    es = rp.baseline_exhaustive(scene, n_new=2, grid_res=8.0)
    rs = rp.baseline_random(scene, n_new=2, n_groups=20, grid_res=8.0, seed=4)
    assert len(plan["selected"]) == 2
    assert rs["metrics"]["target"] <= es["metrics"]["target"]
    assert plan["drt_queries"] < es["drt_queries"]

    extra = [(b["x"], b["y"], b["z"], b["tx_power_dbm"], b["antenna_gain_db"]) for b in plan["selected"]]
    after = rp.radio_map(scene, extra, grid_res=8.0)
    assert abs(after["target"] - plan["metrics"]["target"]) < 1e-9

    assert abs(rp.expected_improvement(1.0, 1.0, 1.0, 0.0) - 0.3989422804) < 1e-9

    try:
        rp.Scene.from_json("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("invalid scene accepted")

    print(json.dumps({
        "plan_T": plan["metrics"]["target"],
        "es_T": es["metrics"]["target"],
        "rs_T": rs["metrics"]["target"],
        "queries": [plan["drt_queries"], es["drt_queries"]],
    }))
    print("smoke test OK")


if __name__ == "__main__":
    main()
