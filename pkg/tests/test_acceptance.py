"""The ten acceptance criteria, one test each. A verdict line per criterion is
printed in the terminal summary."""
import math
import re
import time

import numpy as np
import pytest

from acceptance_log import criterion
from oracles import chain_grid_minimum
from pageflip.harness import ExperimentConfig, replay, run, sweep, write_trace
from pageflip.physics import PageMaterial, PageState, solve_quasi_static
from pageflip.shape import bezier_points, descriptor, fit_bezier
from pageflip.tactile import P_EPS, TactileFrame, compute_sums

TRACES = {}
PATTERN = re.compile(r"(Press Rub )+Up ShapeControl")


def test_c01_sum_arithmetic():
    with criterion(1, "force sums and friction ratio on 1000 frames") as note:
        rng = np.random.default_rng(1)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            frame = TactileFrame(rng.uniform(0, 800, (4, 4)), rng.uniform(-400, 400, (4, 4)))
            s = compute_sums(frame)
            assert s.P_s == s.P_s_L + s.P_s_R
            if s.mu is not None:
                worst = max(worst, abs(s.mu * s.P_s - s.T_s) / max(abs(s.T_s), s.P_s))
        elapsed = time.perf_counter() - start
        note["detail"] = f"max rel residual {worst:.1e}"
        assert worst <= 4 * np.finfo(float).eps
        assert elapsed < 1.0


def test_c02_grid_oracle():
    with criterion(2, "equilibrium vs 0.5 deg grid search, 20 instances") as note:
        rng = np.random.default_rng(2)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(3, 11))
            ei = 10 ** rng.uniform(-3.7, -2.0)
            g = rng.uniform(0.01, 0.3)
            b = rng.uniform(0.3, 1.0)
            load = tuple(rng.uniform(-0.03, 0.03, 2))
            sa = math.pi + math.radians(rng.uniform(-30, 30))
            m = PageMaterial(bending_stiffness=ei, gravity_load=g, binding=b)
            s = solve_quasi_static(PageState(np.full(n - 1, sa), 0.2 / (n - 1), (0.2, 1.0), sa), m,
                                   end_load=load)
            ref, _ = chain_grid_minimum(n, 0.2, sa, ei, b, g, load)
            err = np.abs(np.diff(np.concatenate(([sa], s.angles))) - np.diff(np.concatenate(([sa], ref))))
            worst = max(worst, math.degrees(err.max()))
        note["detail"] = f"worst joint difference {worst:.3f} deg"
        assert worst <= 0.5
        assert time.perf_counter() - start < 120


def press_config(P_des):
    return ExperimentConfig().replace({"mode": "press", "press.P_des": P_des, "press.cycles": 650})


def test_c03_plane_orientation():
    with criterion(3, "tilt regulation on a 10 deg plane") as note:
        t = run(press_config(2180.0))
        TRACES["c03"] = t
        k = t.summary["orientation_settle_cycle"]
        note["detail"] = f"|P_dif|/P_s < 2% from cycle {k} to {len(t.records)}"
        assert k is not None and k <= 150
        assert len(t.records) - k >= 500


@pytest.mark.parametrize("P_des", [500.0, 2180.0, 5200.0, 9500.0])
def test_c04_force_regulation(P_des):
    with criterion(4, "force regulation, P_des 500/2180/5200/9500") as note:
        t = run(press_config(P_des))
        TRACES[f"c04-{P_des:g}"] = t
        k = t.summary["force_settle_cycle"]
        done = [key for key in TRACES if key.startswith("c04")]
        note["detail"] = f"P_des {P_des:g} settled by cycle {k} ({len(done)}/4 levels checked)"
        assert k is not None and k <= 200


def test_c05_stage_machine():
    with criterion(5, "50 randomized runs: stage order and P3 = 0.5 P1") as note:
        rng = np.random.default_rng(5)
        grid = [{"rng_seed": int(rng.integers(1 << 30)), "sensor.noise_sigma": float(rng.uniform(0, 5)),
                 "P0_des": float(rng.uniform(600, 2000))} for _ in range(50)]
        traces = sweep(ExperimentConfig(), grid)
        ok = 0
        for i, t in enumerate(traces):
            TRACES[f"c05-{i}"] = t
            s = t.summary
            assert s["success"], s["error"]
            assert PATTERN.fullmatch(" ".join(s["stages"]))
            ups = [x for x in t.transitions if x["to"] == "Up"]
            assert len(ups) == 1 and ups[0]["P3_des"] == 0.5 * ups[0]["P1_des"]
            ok += 1
        note["detail"] = f"{ok}/50 runs"


def test_c06_escalation():
    with criterion(6, "adaptive escalation from a low start force") as note:
        t = run(ExperimentConfig().replace({"P0_des": 300.0}))
        TRACES["c06"] = t
        s = t.summary
        starts = s["P0_des"]
        note["detail"] = f"{s['restarts']} restarts, P0_des {starts}"
        assert s["success"], s["error"]
        assert s["restarts"] >= 2
        assert all(a < b for a, b in zip(starts, starts[1:]))


def test_c07_stiffness_ordering():
    with criterion(7, "final P1_des rises with stiffness") as note:
        traces = sweep(ExperimentConfig(), {"page.stiffness": ["low", "medium", "high"]})
        p1 = []
        for name, t in zip(("low", "medium", "high"), traces):
            TRACES[f"c07-{name}"] = t
            assert t.summary["success"], t.summary["error"]
            p1.append(t.summary["P1_des"])
        note["detail"] = "P1_des " + " < ".join(f"{v:g}" for v in p1)
        assert p1[0] < p1[1] < p1[2]


def test_c08_bezier_round_trip():
    with criterion(8, "Bezier round trip on 100 random cubics") as note:
        rng = np.random.default_rng(8)
        start = time.perf_counter()
        worst = [0.0, 0.0]
        t7 = np.linspace(0.0, 1.0, 7)
        done = 0
        while done < 100:
            ctrl = rng.uniform([0, 0], [640, 480], (4, 2))
            m = bezier_points(ctrl, t7)
            if np.hypot(*np.diff(m, axis=0).T).min() < 2.0 or np.hypot(*np.diff(ctrl, axis=0).T).min() < 2.0:
                continue
            got, ref = descriptor(fit_bezier(m)), descriptor(ctrl)
            worst = [max(worst[0], abs(got.Theta - ref.Theta)), max(worst[1], abs(got.X_c - ref.X_c))]
            done += 1
        note["detail"] = f"worst |dTheta| {worst[0]:.1e} deg, |dX_c| {worst[1]:.1e} px"
        assert worst[0] <= 1e-3 and worst[1] <= 1e-3
        assert time.perf_counter() - start < 5.0


def test_c09_shape_convergence():
    with criterion(9, "shape control from post-Up to (215.0, 979)") as note:
        t = run(ExperimentConfig())
        TRACES["c09"] = t
        s = t.summary
        shape = [r for r in t.records if r["stage"] == "ShapeControl"]
        note["detail"] = (f"Theta {s['Theta']:.2f}, X_c {s['X_c']:.1f} after {len(shape)} cycles, "
                          f"min P_s {s['min_P_s_shape']:.0f}")
        assert s["success"], s["error"]
        assert abs(s["Theta"] - 215.0) <= 3.0 and abs(s["X_c"] - 979.0) <= 15.0
        assert len(shape) <= 3000
        assert min(r["P_s"] for r in shape) >= P_EPS


def test_c10_replay(tmp_path):
    with criterion(10, "replay reproduces every stored trace") as note:
        expected = 1 + 4 + 50 + 1 + 3 + 1
        assert len(TRACES) == expected, "run the whole acceptance module so every trace exists"
        same = 0
        for key, t in TRACES.items():
            d = write_trace(t, tmp_path / key)
            ok, _ = replay(d)
            assert ok, key
            same += 1
        note["detail"] = f"{same}/{expected} summaries byte-identical"
