"""Four-stage page turning with adaptive press-force determination.

Stages run Press, Rub, Up, ShapeControl. The press force for rubbing is
found online: a rubbing window in which the finger orientation barely
changes means the tip slides over the page instead of dragging it, so the
reference force is raised. Sliding too far restarts the trial from Press
with the latest force as the new starting value.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .control import DT, OMEGA_MAX, V_MAX, MotionCommand
from .errors import PageflipError, TrialLimit
from .rig import Rig, open_loop_cycle, servo_cycle
from .tactile import TactileSums


class Stage(str, Enum):
    PRESS = "Press"
    RUB = "Rub"
    UP = "Up"
    SHAPE_CONTROL = "ShapeControl"


class Rubbing(str, Enum):
    EFFECTIVE = "Effective"
    INEFFECTIVE = "Ineffective"


@dataclass(frozen=True)
class AdaptiveParams:
    """Thresholds and increments of the adaptive force search.

    ``delta_P=None`` makes each increment ``delta_P_fraction`` of the
    trial's starting force. ``mu_smoothing`` is the moving-average length
    applied before the local-minimum test.
    """

    delta_alpha_c: float = math.radians(2.0)
    delta_P: float | None = None
    delta_P_fraction: float = 0.1
    slide_max: float = 0.04
    k: float = 0.5
    mu_eps: float = 0.02
    local_min_window: int = 7
    mu_smoothing: int = 3
    classify_window: int = 25
    press_band: float = 0.02
    press_hold: int = 10
    trial_max: int = 12

    def __post_init__(self):
        for name in ("delta_alpha_c", "delta_P_fraction", "slide_max", "mu_eps", "press_band"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.delta_P is not None and not self.delta_P > 0:
            raise ValueError("delta_P must be positive")
        if not 0 < self.k <= 1:
            raise ValueError("k must lie in (0, 1]")
        if self.local_min_window < 3 or self.local_min_window % 2 == 0:
            raise ValueError("local_min_window must be odd and at least 3")
        for name in ("mu_smoothing", "classify_window", "press_hold", "trial_max"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    @property
    def history_length(self) -> int:
        return self.local_min_window + self.mu_smoothing - 1

    def increment(self, P0_des: float) -> float:
        return self.delta_P if self.delta_P is not None else self.delta_P_fraction * P0_des


@dataclass(frozen=True)
class StageContext:
    """Everything the stage machine remembers between cycles.

    ``rub_effective`` records whether the current Rub has produced an
    effective window yet; the Rub exit on low friction is only armed after
    that. ``up_settled`` turns true once the press force has come down to
    (or below) the Up reference; ``up_touched_zero`` remembers whether the
    friction coefficient reached ``mu_eps`` at any point of the Up stage.
    """

    P0_des: float
    stage: Stage = Stage.PRESS
    P_des_current: float | None = None
    P1_des: float | None = None
    P3_des: float | None = None
    rub_start_y: float = 0.0
    slide_distance: float = 0.0
    trial_index: int = 1
    mu_history: tuple[float, ...] = ()
    press_count: int = 0
    rub_effective: bool = False
    up_settled: bool = False
    up_touched_zero: bool = False
    alpha_window: tuple[float, ...] = ()
    trial_starts: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.P0_des > 0:
            raise ValueError("P0_des must be positive")
        if self.P_des_current is None:
            object.__setattr__(self, "P_des_current", float(self.P0_des))
        if not self.trial_starts:
            object.__setattr__(self, "trial_starts", (float(self.P0_des),))
        object.__setattr__(self, "stage", Stage(self.stage))

    def enter(self, stage: Stage, **kw) -> "StageContext":
        """Switch stage and clear the per-stage bookkeeping."""
        return replace(self, stage=stage, mu_history=(), press_count=0, alpha_window=(), **kw)


def classify_rubbing(delta_alpha_window: float, params: AdaptiveParams) -> Rubbing:
    """Effective iff the accumulated orientation change reaches the critical angle."""
    if abs(delta_alpha_window) >= params.delta_alpha_c:
        return Rubbing.EFFECTIVE
    return Rubbing.INEFFECTIVE


def rub_update(ctx: StageContext, classification: Rubbing, finger_y: float,
               params: AdaptiveParams) -> StageContext:
    """Apply one rubbing classification.

    An ineffective window raises the press reference and refreshes the
    sliding counter. An effective one starts a fresh rubbing action at the
    current finger position, so the counter only measures sliding since the
    page last deformed. Too much sliding restarts the trial.
    """
    if ctx.stage is not Stage.RUB:
        raise ValueError("rub_update needs the Rub stage")
    if Rubbing(classification) is Rubbing.EFFECTIVE:
        return replace(ctx, rub_effective=True, rub_start_y=finger_y, slide_distance=0.0)
    slide = abs(finger_y - ctx.rub_start_y)
    ctx = replace(ctx, P_des_current=ctx.P_des_current + params.increment(ctx.trial_starts[-1]),
                  slide_distance=slide)
    if slide < params.slide_max:
        return ctx
    trial = ctx.trial_index + 1
    if trial > params.trial_max:
        raise TrialLimit(f"no effective rubbing after {params.trial_max} trials "
                         f"(last press reference {ctx.P_des_current:.0f} counts)")
    return ctx.enter(Stage.PRESS, P0_des=ctx.P_des_current, trial_index=trial, slide_distance=0.0,
                     rub_effective=False, trial_starts=ctx.trial_starts + (ctx.P_des_current,))


def push_mu(ctx: StageContext, mu: float | None, params: AdaptiveParams) -> StageContext:
    """Append a friction sample to the bounded history (``None`` is skipped)."""
    if mu is None:
        return ctx
    return replace(ctx, mu_history=(ctx.mu_history + (float(mu),))[-params.history_length:])


def is_local_minimum(history: Sequence[float], window: int, smoothing: int = 1) -> bool:
    """Centre of the newest ``window`` smoothed samples is below all the others."""
    h = np.asarray(history, dtype=float)
    if smoothing > 1:
        if h.size < smoothing:
            return False
        h = np.convolve(h, np.full(smoothing, 1.0 / smoothing), mode="valid")
    if h.size < window:
        return False
    w = h[-window:]
    c = window // 2
    others = np.delete(w, c)
    return bool((w[c] < others).all())


def stage_transition(ctx: StageContext, sums: TactileSums, params: AdaptiveParams) -> StageContext:
    """Advance the stage from this cycle's tactile sums.

    ``ctx.mu_history`` must already hold this cycle's friction sample.
    """
    mu = sums.mu
    if ctx.stage is Stage.PRESS:
        ref = ctx.P_des_current
        ok = abs(sums.P_s - ref) <= params.press_band * ref
        count = ctx.press_count + 1 if ok else 0
        if count >= params.press_hold:
            return ctx.enter(Stage.RUB, rub_effective=False, slide_distance=0.0)
        return replace(ctx, press_count=count)
    if ctx.stage is Stage.RUB:
        if ctx.rub_effective and mu is not None and mu <= params.mu_eps:
            p1 = ctx.P_des_current
            p3 = params.k * p1
            return ctx.enter(Stage.UP, P1_des=p1, P3_des=p3, P_des_current=p3, up_settled=False,
                             up_touched_zero=False)
        return ctx
    if ctx.stage is Stage.UP:
        # friction reaching zero while the force is still coming down is acted on once it has settled
        touched = ctx.up_touched_zero or (mu is not None and mu <= params.mu_eps)
        if not ctx.up_settled:
            if sums.P_s <= (1.0 + params.press_band) * ctx.P3_des:
                return replace(ctx, up_settled=True, up_touched_zero=touched,
                               mu_history=ctx.mu_history[-1:])
            return replace(ctx, up_touched_zero=touched)
        if touched or is_local_minimum(ctx.mu_history, params.local_min_window, params.mu_smoothing):
            return ctx.enter(Stage.SHAPE_CONTROL)
        return ctx
    return ctx


@dataclass(frozen=True)
class RubMotion:
    """Finger motion used while rubbing and while homing between trials."""

    V_t: float = 0.02
    retract: float = 0.01
    return_speed: float = 0.01

    def __post_init__(self):
        for name in ("V_t", "retract", "return_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TurningTrace:
    """Per-cycle records plus the rig as it was when the loop stopped."""

    records: list[dict] = field(default_factory=list)
    transitions: list[dict] = field(default_factory=list)
    rig: Rig | None = None
    error: str | None = None


def record(rig_cycle: int, ctx: StageContext, stage: Stage, rec, accum: float) -> dict:
    s = rec.sums
    return {
        "cycle": rig_cycle,
        "stage": stage.value,
        "trial": ctx.trial_index,
        "P_des_current": ctx.P_des_current,
        "P_s": s.P_s,
        "P_dif": s.P_dif,
        "T_s": s.T_s,
        "mu": s.mu,
        "alpha": rec.pose.alpha,
        "delta_alpha_accum": accum,
        "slide_distance": ctx.slide_distance,
        "y": rec.pose.position[0],
        "z": rec.pose.position[1],
        "omega_x": rec.command.omega_x,
        "V_v": rec.command.V_v,
        "V_t": rec.command.V_t,
    }


def _homing_command(rig: Rig, lift_to: float, press_y: float, motion: RubMotion):
    """Global-frame lift, then return above the press point with the finger upright."""
    y, z = rig.pose.position
    dt = rig.dt
    alpha = rig.pose.alpha
    omega = math.copysign(min(abs(alpha) / dt, OMEGA_MAX), -alpha) if alpha else 0.0
    if z < lift_to - 1e-12:
        gy, gz = 0.0, min(V_MAX, (lift_to - z) / dt)
    elif abs(y - press_y) > 1e-12:
        gy, gz = math.copysign(min(motion.return_speed, abs(press_y - y) / dt), press_y - y), 0.0
    else:
        gy = gz = 0.0
    # velocities are applied along the axes rotated by the new angle
    a = alpha + dt * omega
    v_v = gy * math.sin(a) - gz * math.cos(a)
    v_t = gy * math.cos(a) + gz * math.sin(a)
    done = gy == 0.0 and gz == 0.0 and omega == 0.0
    return MotionCommand(omega, v_v, v_t), done


def run_turning(ctx: StageContext, rig: Rig, params: AdaptiveParams = AdaptiveParams(),
                motion: RubMotion = RubMotion(), max_cycles: int = 20000,
                trace: TurningTrace | None = None, observer=None):
    """Run stages Press, Rub and Up until ShapeControl begins.

    Returns ``(ctx, trace)``; ``trace.rig`` is the rig at exit. Stops early
    when ``max_cycles`` cycles have run. A :class:`PageflipError` raised by
    the plant or the force search propagates with the partial trace
    attached as ``err.trace``. ``observer(ctx, rig, record)`` is called
    after every cycle.
    """
    trace = trace if trace is not None else TurningTrace()
    press_y = rig.pose.position[0]
    homing = None
    try:
        for _ in range(max_cycles):
            if ctx.stage is Stage.SHAPE_CONTROL:
                break
            stage = ctx.stage
            if homing is not None:
                cmd, done = _homing_command(rig, homing, press_y, motion)
                if done:
                    homing = None
                    rig = replace(rig, servo=rig.servo.reset())
                    rig, rec = servo_cycle(rig, ctx.P_des_current, 0.0)
                else:
                    rig, rec = open_loop_cycle(rig, cmd)
                trace.records.append(record(rec.cycle, ctx, stage, rec, 0.0))
                if observer is not None:
                    observer(ctx, rig, trace.records[-1])
                continue
            v_t = motion.V_t if stage in (Stage.RUB, Stage.UP) else 0.0
            rig, rec = servo_cycle(rig, ctx.P_des_current, v_t)
            ctx = push_mu(ctx, rec.sums.mu, params)
            if stage is Stage.RUB:
                ctx = replace(ctx, alpha_window=ctx.alpha_window + (rec.delta_alpha,))
            accum = abs(sum(ctx.alpha_window))
            trace.records.append(record(rec.cycle, ctx, stage, rec, accum))
            if stage is Stage.RUB and len(ctx.alpha_window) >= params.classify_window:
                cls = classify_rubbing(accum, params)
                ctx = rub_update(replace(ctx, alpha_window=()), cls, rec.pose.position[0], params)
                trace.records[-1]["slide_distance"] = ctx.slide_distance
                if ctx.stage is Stage.PRESS:
                    trace.transitions.append({"cycle": rec.cycle, "from": stage.value, "to": "Press",
                                              "P0_des": ctx.P0_des, "trial": ctx.trial_index})
                    homing = rig.pose.position[1] + motion.retract
                    continue
            before = ctx.stage
            ctx = stage_transition(ctx, rec.sums, params)
            if observer is not None:
                observer(ctx, rig, trace.records[-1])
            if ctx.stage is Stage.RUB and before is Stage.PRESS:
                ctx = replace(ctx, rub_start_y=rig.pose.position[0])
            if ctx.stage is not before:
                trace.transitions.append({"cycle": rec.cycle, "from": before.value, "to": ctx.stage.value,
                                          "P1_des": ctx.P1_des, "P3_des": ctx.P3_des,
                                          "trial": ctx.trial_index})
    except PageflipError as err:
        trace.rig = rig
        trace.error = f"{type(err).__name__}: {err}"
        err.trace = trace
        err.ctx = ctx
        raise
    trace.rig = rig
    return ctx, trace


__all__ = [
    "AdaptiveParams", "DT", "RubMotion", "Rubbing", "Stage", "StageContext", "TurningTrace",
    "classify_rubbing", "is_local_minimum", "push_mu", "rub_update", "run_turning",
    "stage_transition",
]
