"""Compiled vs numpy energy kernel.

    python benchmarks/bench_kernel.py [--nodes 20] [--repeat 7]

Times one energy+gradient+Hessian evaluation of a page pressed by the
fingertip, then a full equilibrium solve, with each backend. The solve is
timed by swapping the function the solver calls.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from pageflip.control import FingerPose
from pageflip.physics import PageMaterial, flat_page, solve_quasi_static
from pageflip.physics import _pykernel, kernel
from pageflip.physics.solver import GAUSS_W, GAUSS_X, _params

try:
    from pageflip.physics import _ckernel
except ImportError:
    _ckernel = None


def scenario(nodes):
    material = PageMaterial()
    finger = FingerPose((0.03, -0.0004))
    state = solve_quasi_static(flat_page(nodes), material, finger)
    return state, material, finger


def bench(nodes, repeat):
    state, material, finger = scenario(nodes)
    prm, cap, anchor = _params(state, material, finger)
    phi = np.ascontiguousarray(state.angles)
    n = phi.size + 1
    backends = {"numpy": _pykernel.evaluate}
    if _ckernel is not None:
        backends["compiled"] = _ckernel.evaluate
    rows = {}
    for name, fn in backends.items():
        def one_eval():
            g = np.zeros(phi.size)
            H = np.zeros((phi.size, phi.size))
            fn(phi, prm, cap, anchor, GAUSS_X, GAUSS_W, g, H)

        def one_solve():
            solve_quasi_static(state, material, FingerPose((0.031, -0.0004)))

        number = 2000 if name == "compiled" else 200
        t_eval = min(timeit.repeat(one_eval, number=number, repeat=repeat)) / number
        saved = kernel.evaluate
        kernel.evaluate = fn
        try:
            t_solve = min(timeit.repeat(one_solve, number=20, repeat=repeat)) / 20
        finally:
            kernel.evaluate = saved
        rows[name] = (t_eval, t_solve)
    print(f"nodes={n}  active backend: {kernel.BACKEND}")
    print(f"{'backend':<10}{'eval+grad+hess (us)':>22}{'solve (ms)':>14}")
    for name, (te, ts) in rows.items():
        print(f"{name:<10}{te * 1e6:>22.1f}{ts * 1e3:>14.3f}")
    if len(rows) == 2:
        (pe, ps), (ce, cs) = rows["numpy"], rows["compiled"]
        print(f"speedup   {pe / ce:>22.1f}x{ps / cs:>13.1f}x")
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)
    bench(a.nodes, a.repeat)


if __name__ == "__main__":
    main()
