"""End-to-end runs, trace persistence, replay and parameter sweeps."""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from ..errors import ConfigError, PageflipError
from ..rig import servo_cycle
from ..shape import run_shape_control
from ..strategy import Stage, StageContext, TurningTrace, run_turning
from .config import ExperimentConfig, dump_config, from_dict, load_config

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RECORD_KEYS = ("cycle", "stage", "trial", "P_des_current", "P_s", "P_dif", "T_s", "mu", "alpha",
               "delta_alpha_accum", "slide_distance", "y", "z", "omega_x", "V_v", "V_t",
               "Theta", "X_c")


@dataclass
class ExperimentTrace:
    config: dict
    config_hash: str
    records: list[dict] = field(default_factory=list)
    transitions: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return bool(self.summary.get("success"))

    def summary_bytes(self) -> bytes:
        return (json.dumps(self.summary, sort_keys=True, indent=2) + "\n").encode()


def schema() -> dict:
    text = resources.files("pageflip.harness").joinpath(f"trace_schema_v{SCHEMA_VERSION}.json").read_text()
    return json.loads(text)


def validate_trace(trace: ExperimentTrace) -> None:
    """Raise :class:`jsonschema.ValidationError` if records or summary break the schema."""
    s = schema()
    jsonschema.validate(trace.summary, s["definitions"]["summary"])
    record_schema = s["definitions"]["record"]
    for rec in trace.records:
        jsonschema.validate(rec, record_schema)


def _row(rec: dict, stage: str, trial: int) -> dict:
    out = {k: rec.get(k) for k in RECORD_KEYS}
    out["stage"] = stage
    out["trial"] = trial
    if out["delta_alpha_accum"] is None:
        out["delta_alpha_accum"] = 0.0
    if out["slide_distance"] is None:
        out["slide_distance"] = 0.0
    return out


def _stage_pattern(records: list[dict]) -> list[str]:
    seq = []
    for r in records:
        if not seq or seq[-1] != r["stage"]:
            seq.append(r["stage"])
    return seq


def settle_cycle(inside: list[bool]) -> int | None:
    """First index from which every entry is true, or None if the last one is false."""
    k = len(inside)
    while k > 0 and inside[k - 1]:
        k -= 1
    return k if k < len(inside) else None


def _run_press(config: ExperimentConfig, trace: ExperimentTrace) -> ExperimentTrace:
    pc = config.press
    summary = trace.summary
    summary.update(orientation_settle_cycle=None, force_settle_cycle=None)
    rig = config.build_rig()
    n = min(pc.cycles, config.max_cycles)
    stage = Stage.PRESS.value
    try:
        for _ in range(n):
            rig, rec = servo_cycle(rig, pc.P_des)
            s = rec.sums
            trace.records.append(_row({
                "cycle": rec.cycle, "P_des_current": pc.P_des, "P_s": s.P_s, "P_dif": s.P_dif,
                "T_s": s.T_s, "mu": s.mu, "alpha": rec.pose.alpha,
                "y": rec.pose.position[0], "z": rec.pose.position[1],
                "omega_x": rec.command.omega_x, "V_v": rec.command.V_v, "V_t": rec.command.V_t,
            }, stage, 1))
    except Exception as err:  # keep what was recorded before the plant failed
        summary["error"] = f"{type(err).__name__}: {err}"
    recs = trace.records
    tilt = settle_cycle([r["P_s"] > 0 and abs(r["P_dif"]) < pc.band * r["P_s"] for r in recs])
    force = settle_cycle([abs(r["P_s"] - pc.P_des) <= pc.band * pc.P_des for r in recs])
    summary.update(orientation_settle_cycle=tilt, force_settle_cycle=force,
                   cycles=len(recs), stages=_stage_pattern(recs))
    if summary["error"] is None:
        late = [c for c in (tilt, force) if c is None or len(recs) - c < pc.hold]
        if late:
            summary["error"] = "Timeout: pressing did not settle and hold within the cycle budget"
    summary["success"] = summary["error"] is None
    return trace


def run(config: ExperimentConfig) -> ExperimentTrace:
    """Stages Press, Rub and Up, then shape control until converged or out of cycles.

    In ``press`` mode the finger only holds ``press.P_des`` on the chosen
    plant and the summary reports when tilt and force settled.
    Controlled failures end up in ``summary["error"]`` with ``success``
    false; nothing is raised for them.
    """
    trace = ExperimentTrace(config.to_dict(), config.hash)
    ctx = StageContext(config.P0_des)
    summary = {"schema_version": SCHEMA_VERSION, "mode": config.mode, "config_hash": config.hash,
               "seed": config.rng_seed, "success": False, "error": None, "cycles": 0, "stages": [],
               "trials_used": 0,
               "restarts": 0, "P0_des": [], "P1_des": None, "P3_des": None, "P4_des": None,
               "Theta": None, "X_c": None, "shape_converged_cycle": None, "min_P_s_shape": None}
    trace.summary = summary
    if config.mode == "press":
        return _run_press(config, trace)
    if config.max_cycles == 0:
        return trace
    rig = config.build_rig()
    try:
        ctx, tt = run_turning(ctx, rig, config.adaptive, config.rub, max_cycles=config.max_cycles)
    except PageflipError as err:
        tt = err.trace
        ctx = getattr(err, "ctx", ctx)
        summary["error"] = tt.error
    except Exception as err:  # the plant itself failed; keep the partial record
        tt = TurningTrace()
        summary["error"] = f"{type(err).__name__}: {err}"
    trace.records = [_row(r, r["stage"], r["trial"]) for r in tt.records]
    trace.transitions = list(tt.transitions)
    summary.update(trials_used=ctx.trial_index, restarts=ctx.trial_index - 1,
                   P0_des=list(ctx.trial_starts), P1_des=ctx.P1_des, P3_des=ctx.P3_des)
    budget = min(config.shape.max_cycles, config.max_cycles - len(trace.records))
    if summary["error"] is None and ctx.stage is Stage.SHAPE_CONTROL and budget > 0:
        sh = config.shape
        try:
            st = run_shape_control(tt.rig, ctx.P3_des, sh.target, config.camera, config.shape_pids(),
                                   sh.band, budget, markers=sh.markers, marker_start=sh.marker_start)
        except PageflipError as err:
            st = err.trace
            summary["error"] = f"{type(err).__name__}: {err}"
        stage = Stage.SHAPE_CONTROL.value
        trace.records += [_row(r, stage, ctx.trial_index) for r in st.records]
        shape_ps = [r["P_s"] for r in st.records]
        summary.update(P4_des=st.P4_des, shape_converged_cycle=st.converged_cycle,
                       min_P_s_shape=min(shape_ps) if shape_ps else None)
        if st.final is not None:
            summary.update(Theta=st.final.Theta, X_c=st.final.X_c)
        if summary["error"] is None and st.converged_cycle is None:
            summary["error"] = "Timeout: shape did not settle in the cycle budget"
    elif summary["error"] is None:
        summary["error"] = "Timeout: cycle budget spent before shape control"
    summary["cycles"] = len(trace.records)
    summary["stages"] = _stage_pattern(trace.records)
    summary["success"] = summary["error"] is None
    return trace


def _records_jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def _records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RECORD_KEYS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: "" if r[k] is None else r[k] for k in RECORD_KEYS})
    return buf.getvalue()


def write_trace(trace: ExperimentTrace, out_root, csv_export: bool = False) -> Path:
    """Write into ``out_root/<hash prefix>`` atomically; other run directories are never touched."""
    root = Path(out_root)
    root.mkdir(parents=True, exist_ok=True)
    final = root / trace.config_hash[:16]
    tmp = Path(tempfile.mkdtemp(prefix=".tmp-", dir=root))
    try:
        (tmp / "config.yaml").write_text(dump_config(from_dict(trace.config)))
        (tmp / "records.jsonl").write_text(_records_jsonl(trace.records))
        (tmp / "transitions.json").write_text(json.dumps(trace.transitions, sort_keys=True, indent=2) + "\n")
        (tmp / "summary.json").write_bytes(trace.summary_bytes())
        if csv_export:
            (tmp / "records.csv").write_text(_records_csv(trace.records))
        if final.exists():
            old = Path(tempfile.mkdtemp(prefix=".old-", dir=root))
            os.replace(final, old / "run")
            os.replace(tmp, final)
            shutil.rmtree(old, ignore_errors=True)
        else:
            os.replace(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return final


def read_trace(directory) -> ExperimentTrace:
    d = Path(directory)
    try:
        config = load_config(d / "config.yaml")
        summary = json.loads((d / "summary.json").read_text())
        records = [json.loads(line) for line in (d / "records.jsonl").read_text().splitlines() if line]
        transitions = json.loads((d / "transitions.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read trace in {d}: {exc}") from exc
    return ExperimentTrace(config.to_dict(), config.hash, records, transitions, summary)


def replay(directory) -> tuple[bool, ExperimentTrace]:
    """Re-run the stored config and compare summaries and records byte for byte."""
    stored = read_trace(directory)
    fresh = run(from_dict(stored.config))
    stored_summary = (Path(directory) / "summary.json").read_bytes()
    same = (fresh.summary_bytes() == stored_summary
            and _records_jsonl(fresh.records) == (Path(directory) / "records.jsonl").read_text())
    return same, fresh


def expand_grid(grid) -> list[dict]:
    """A mapping of dotted keys to value lists (cartesian product) or a list of override mappings."""
    if isinstance(grid, dict):
        if not grid or any(not isinstance(v, list) or not v for v in grid.values()):
            raise ConfigError("grid mapping needs non-empty value lists")
        keys = list(grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    if isinstance(grid, list) and grid and all(isinstance(g, dict) for g in grid):
        return [dict(g) for g in grid]
    raise ConfigError("grid must be a non-empty mapping of lists or a list of mappings")


def _run_point(args):
    base, overrides = args
    try:
        config = from_dict(base).replace(overrides)
    except ConfigError as err:
        t = ExperimentTrace({"overrides": overrides}, "")
        t.summary = {"schema_version": SCHEMA_VERSION, "success": False, "error": f"ConfigError: {err}"}
        return t
    return run(config)


def sweep(base: ExperimentConfig, grid, workers: int | None = None) -> list[ExperimentTrace]:
    """One independent run per grid point, in grid order; failures stay in their own entry."""
    points = expand_grid(grid)
    jobs = [(base.to_dict(), p) for p in points]
    workers = min(len(jobs), workers or os.cpu_count() or 1)
    if workers <= 1:
        return [_run_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point, jobs))
