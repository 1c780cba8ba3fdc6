"""Deterministic SVG figures from a stored trace."""
from __future__ import annotations

import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger(__name__)

STAGE_COLORS = {"Press": "#dde8f5", "Rub": "#f7e3cf", "Up": "#dff0d8", "ShapeControl": "#eee0f2"}
SHAPE = "ShapeControl"


def _column(records, key, scale=1.0):
    return [math.nan if r[key] is None else r[key] * scale for r in records]


def _stage_bands(ax, records):
    start = 0
    for i in range(1, len(records) + 1):
        if i == len(records) or records[i]["stage"] != records[start]["stage"]:
            ax.axvspan(records[start]["cycle"], records[i - 1]["cycle"] + 1,
                       color=STAGE_COLORS[records[start]["stage"]], lw=0, zorder=0)
            start = i


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def turning_figure(records, mu_eps, path):
    cyc = [r["cycle"] for r in records]
    fig, axes = plt.subplots(4, 1, figsize=(8, 10), sharex=True)
    ax = axes[0]
    ax.plot(cyc, _column(records, "P_dif"), lw=0.8, color="C0")
    ax.set_ylabel("E_Pdif (counts)")
    tw = ax.twinx()
    tw.plot(cyc, _column(records, "alpha", 180 / math.pi), lw=0.8, color="C3")
    tw.set_ylabel("alpha (deg)")

    ax = axes[1]
    ax.plot(cyc, [r["P_s"] - r["P_des_current"] for r in records], lw=0.8, color="C0")
    ax.set_ylabel("E_Ps (counts)")
    tw = ax.twinx()
    tw.plot(cyc, _column(records, "z", 1e3), lw=0.8, color="C2")
    tw.set_ylabel("z (mm)")

    ax = axes[2]
    _stage_bands(ax, records)
    ax.plot(cyc, _column(records, "mu"), lw=0.8, color="k")
    ax.axhline(mu_eps, ls="--", lw=0.8, color="C3")
    ax.set_ylabel("mu")

    ax = axes[3]
    ax.step(cyc, _column(records, "P_des_current"), where="post", lw=1.0, color="C1")
    ax.set_ylabel("P_des (counts)")
    tw = ax.twinx()
    tw.plot(cyc, _column(records, "delta_alpha_accum", 180 / math.pi), lw=0.8, color="C4")
    tw.set_ylabel("sum d_alpha (deg)")
    ax.set_xlabel("cycle")
    fig.tight_layout()
    _save(fig, path)


def shape_figure(records, target, bands, path):
    frames = [r for r in records if r["Theta"] is not None]
    cyc = [r["cycle"] for r in frames]
    fig, axes = plt.subplots(3, 1, figsize=(8, 7.5), sharex=True)
    for ax, key, des, band in ((axes[0], "Theta", target[0], bands[0]), (axes[1], "X_c", target[1], bands[1])):
        ax.axhspan(des - band, des + band, color="#e0e0e0", lw=0)
        ax.axhline(des, ls="--", lw=0.8, color="C3")
        ax.plot(cyc, [r[key] for r in frames], lw=1.0, color="C0")
        ax.set_ylabel(f"{key} ({'deg' if key == 'Theta' else 'px'})")
    ax = axes[2]
    allc = [r["cycle"] for r in records]
    ax.step(allc, _column(records, "P_des_current"), where="post", lw=1.0, color="C1", label="P_des")
    ax.plot(allc, _column(records, "P_s"), lw=0.8, color="k", label="P_s")
    ax.set_ylabel("counts")
    ax.legend(loc="upper right", fontsize=8)
    tw = ax.twinx()
    tw.plot(allc, _column(records, "V_t", 1e3), lw=0.8, color="C2")
    tw.set_ylabel("V_t (mm/s)")
    ax.set_xlabel("cycle")
    fig.tight_layout()
    _save(fig, path)


def emit_plots(trace, out_dir) -> list[Path]:
    """Write ``turning.svg`` and, if shape control ran, ``shape.svg``. Same trace, same bytes."""
    records = trace.records
    if not records:
        log.warning("empty trace: no plots written")
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with plt.rc_context({"svg.hashsalt": "pageflip", "svg.fonttype": "none"}):
        turning = [r for r in records if r["stage"] != SHAPE]
        if turning:
            path = out / "turning.svg"
            turning_figure(turning, trace.config["adaptive"]["mu_eps"], path)
            written.append(path)
        shaped = [r for r in records if r["stage"] == SHAPE]
        if shaped:
            sh = trace.config["shape"]
            path = out / "shape.svg"
            shape_figure(shaped, (sh["Theta_des"], sh["X_c_des"]), (sh["band_Theta"], sh["band_X_c"]), path)
            written.append(path)
    return written
