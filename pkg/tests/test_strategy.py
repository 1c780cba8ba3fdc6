import math
import re
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import default_rig
from pageflip.errors import TrialLimit
from pageflip.strategy import (AdaptiveParams, Rubbing, Stage, StageContext, classify_rubbing,
                               is_local_minimum, push_mu, rub_update, run_turning, stage_transition)
from pageflip.tactile import TactileSums

P = AdaptiveParams()


def sums(P_s, mu=None):
    return TactileSums(P_s / 2, P_s / 2, P_s, 0.0 if mu is None else mu * P_s, 0.0, mu)


def test_classification_threshold_is_inclusive():
    assert classify_rubbing(0.0, P) is Rubbing.INEFFECTIVE
    assert classify_rubbing(math.radians(2.0), P) is Rubbing.EFFECTIVE
    assert classify_rubbing(math.radians(5.0), P) is Rubbing.EFFECTIVE
    assert classify_rubbing(-math.radians(5.0), P) is Rubbing.EFFECTIVE


def rubbing(P_des=2000.0, **kw):
    return StageContext(2000.0, stage=Stage.RUB, P_des_current=P_des, **kw)


def test_ineffective_rub_raises_reference():
    ctx = rub_update(rubbing(), Rubbing.INEFFECTIVE, 0.005, replace(P, delta_P=180.0))
    assert ctx.P_des_current == 2180.0
    assert ctx.slide_distance == pytest.approx(0.005)
    assert ctx.stage is Stage.RUB


def test_effective_rub_keeps_references():
    ctx = rubbing(rub_start_y=0.0)
    out = rub_update(ctx, Rubbing.EFFECTIVE, 0.01, P)
    assert (out.P_des_current, out.P0_des, out.stage, out.trial_index) == (2000.0, 2000.0, Stage.RUB, 1)
    assert out.rub_effective and out.slide_distance == 0.0


def test_sliding_too_far_restarts_from_latest_reference():
    params = replace(P, delta_P=180.0)
    ctx = rubbing()
    y = 0.0
    while ctx.stage is Stage.RUB:
        y += 0.005
        ctx = rub_update(ctx, Rubbing.INEFFECTIVE, y, params)
    assert ctx.stage is Stage.PRESS
    assert ctx.trial_index == 2
    assert ctx.slide_distance == 0.0
    assert ctx.P0_des == ctx.P_des_current == 2000.0 + 180.0 * round(params.slide_max / 0.005)
    assert ctx.trial_starts == (2000.0, ctx.P0_des)


def test_trial_limit():
    ctx = rubbing(trial_index=P.trial_max)
    with pytest.raises(TrialLimit):
        rub_update(ctx, Rubbing.INEFFECTIVE, P.slide_max, P)


def test_rub_update_needs_rub_stage():
    with pytest.raises(ValueError):
        rub_update(StageContext(1000.0), Rubbing.EFFECTIVE, 0.0, P)


def test_press_to_rub_after_hold():
    ctx = StageContext(2180.0)
    for i in range(P.press_hold):
        assert ctx.stage is Stage.PRESS
        ctx = stage_transition(ctx, sums(2180.0 * 1.019), P)
    assert ctx.stage is Stage.RUB


def test_press_hold_restarts_when_force_leaves_band():
    ctx = StageContext(2180.0)
    for _ in range(P.press_hold - 1):
        ctx = stage_transition(ctx, sums(2180.0), P)
    ctx = stage_transition(ctx, sums(2180.0 * 1.03), P)
    assert ctx.press_count == 0 and ctx.stage is Stage.PRESS


def test_rub_with_steady_friction_stays():
    ctx = rubbing(rub_effective=True)
    for _ in range(50):
        ctx = stage_transition(ctx, sums(2000.0, 0.4), P)
    assert ctx.stage is Stage.RUB


def test_rub_to_up_halves_reference():
    ctx = rubbing(P_des=5200.0, rub_effective=True)
    ctx = stage_transition(ctx, sums(5200.0, 0.0), P)
    assert ctx.stage is Stage.UP
    assert ctx.P1_des == 5200.0 and ctx.P3_des == 2600.0 and ctx.P_des_current == 2600.0


def test_rub_exit_needs_an_effective_window():
    ctx = stage_transition(rubbing(rub_effective=False), sums(2000.0, 0.0), P)
    assert ctx.stage is Stage.RUB


def test_up_local_minimum_enters_shape_control():
    params = replace(P, local_min_window=5, mu_smoothing=1)
    ctx = StageContext(1000.0, stage=Stage.UP, P1_des=5200.0, P3_des=2600.0, P_des_current=2600.0,
                       up_settled=True)
    seq = (0.30, 0.22, 0.18, 0.21, 0.26)
    for i, mu in enumerate(seq):
        ctx = push_mu(ctx, mu, params)
        ctx = stage_transition(ctx, sums(2600.0, mu), params)
        if i < len(seq) - 1:
            assert ctx.stage is Stage.UP
    assert ctx.stage is Stage.SHAPE_CONTROL


def test_up_zero_friction_acts_once_settled():
    ctx = StageContext(1000.0, stage=Stage.UP, P1_des=5200.0, P3_des=2600.0, P_des_current=2600.0)
    ctx = stage_transition(ctx, sums(5000.0, 0.0), P)
    assert ctx.stage is Stage.UP and ctx.up_touched_zero
    ctx = stage_transition(ctx, sums(2600.0, 0.3), P)
    assert ctx.up_settled and ctx.stage is Stage.UP
    assert stage_transition(ctx, sums(2600.0, 0.3), P).stage is Stage.SHAPE_CONTROL


@pytest.mark.parametrize("history, expect", [
    ((0.3, 0.22, 0.18, 0.21, 0.26), True),
    ((0.3, 0.22, 0.18, 0.18, 0.26), False),
    ((0.1, 0.2, 0.3, 0.4, 0.5), False),
    ((0.3, 0.2, 0.1), False),
])
def test_local_minimum_definition(history, expect):
    assert is_local_minimum(history, 5) is expect


@given(st.lists(st.floats(0, 1), min_size=7, max_size=30))
def test_local_minimum_agrees_with_brute_force(history):
    w = history[-5:]
    assert is_local_minimum(history, 5) == all(w[2] < x for i, x in enumerate(w) if i != 2)


def test_params_validation():
    with pytest.raises(ValueError):
        AdaptiveParams(k=0.0)
    with pytest.raises(ValueError):
        AdaptiveParams(local_min_window=4)
    with pytest.raises(ValueError):
        StageContext(0.0)


STAGE_PATTERN = re.compile(r"(Press,Rub,)+Up,ShapeControl")


def visited(records):
    seq = []
    for r in records:
        if not seq or seq[-1] != r["stage"]:
            seq.append(r["stage"])
    return seq


def test_low_page_above_critical_needs_one_trial():
    ctx, trace = run_turning(StageContext(2500.0), default_rig("low"))
    assert ctx.stage is Stage.SHAPE_CONTROL
    assert ctx.trial_index == 1 and ctx.trial_starts == (2500.0,)


def test_default_run_properties(post_up):
    ctx, trace = post_up
    assert ctx.stage is Stage.SHAPE_CONTROL
    assert STAGE_PATTERN.fullmatch(",".join(visited(trace.records) + ["ShapeControl"]))
    assert ctx.P3_des == 0.5 * ctx.P1_des
    assert list(ctx.trial_starts) == sorted(set(ctx.trial_starts))
    by_trial = {}
    for r in trace.records:
        if r["stage"] == "Rub":
            by_trial.setdefault(r["trial"], []).append(r["P_des_current"])
    for refs in by_trial.values():
        assert refs == sorted(refs)


def test_restart_re_enters_press_without_tangential_motion(post_up):
    _, trace = post_up
    restarts = [i for i in range(1, len(trace.records))
                if trace.records[i]["trial"] != trace.records[i - 1]["trial"]]
    assert restarts
    for i in restarts:
        r = trace.records[i]
        assert r["stage"] == "Press" and r["slide_distance"] == 0.0
        press = [x for x in trace.records[i:] if x["trial"] == r["trial"] and x["stage"] == "Press"]
        assert all(x["slide_distance"] == 0.0 for x in press)
        # homing (lift, move back) is logged under Press; the re-press itself has no tangential motion
        moving = [k for k, x in enumerate(press) if x["V_t"] != 0.0]
        repress = press[moving[-1] + 1:]
        assert len(repress) >= AdaptiveParams().press_hold
        assert all(x["V_t"] == 0.0 for x in repress)
        assert repress[0]["y"] == pytest.approx(trace.records[0]["y"], abs=1e-3)
