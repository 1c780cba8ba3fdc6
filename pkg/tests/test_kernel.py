import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pageflip.control import FingerPose
from pageflip.physics import PageMaterial, flat_page, solve_quasi_static
from pageflip.physics import _pykernel, kernel
from pageflip.physics.solver import GAUSS_W, GAUSS_X, _params

try:
    from pageflip.physics import _ckernel
except ImportError:  # pragma: no cover
    _ckernel = None

needs_c = pytest.mark.skipif(_ckernel is None, reason="compiled kernel not built")


def problem(y, depth, alpha, jitter, seed):
    m = PageMaterial()
    f = FingerPose((y, -depth), alpha)
    s = solve_quasi_static(flat_page(20), m, FingerPose((y + 0.003, -depth)))
    prm, cap, anchor = _params(s, m, f, end_load=(0.001, -0.002))
    rng = np.random.default_rng(seed)
    phi = np.ascontiguousarray(s.angles + jitter * rng.standard_normal(s.angles.size))
    return phi, prm, cap, anchor


def full(fn, phi, prm, cap, anchor):
    g = np.zeros(phi.size)
    H = np.zeros((phi.size, phi.size))
    e = fn(phi, prm, cap, anchor, GAUSS_X, GAUSS_W, g, H)
    return e, g, H


args = st.tuples(st.floats(0.03, 0.17), st.floats(0.0, 6e-4), st.floats(-0.3, 0.3),
                 st.floats(0.0, 0.02), st.integers(0, 1000))


@needs_c
@given(args)
def test_backends_agree(a):
    p = problem(*a)
    e1, g1, H1 = full(_pykernel.evaluate, *p)
    e2, g2, H2 = full(_ckernel.evaluate, *p)
    assert e2 == pytest.approx(e1, rel=1e-11, abs=1e-15)
    scale = max(np.abs(g1).max(), 1e-12)
    np.testing.assert_allclose(g2, g1, rtol=1e-9, atol=1e-11 * scale)
    hs = max(np.abs(H1).max(), 1e-12)
    np.testing.assert_allclose(H2, H1, rtol=1e-9, atol=1e-11 * hs)


@pytest.mark.parametrize("a", [(0.1, 3e-4, 0.0, 0.0, 0), (0.06, 5e-4, 0.2, 0.01, 1), (0.14, 1e-4, -0.3, 0.005, 2)])
def test_gradient_matches_finite_differences(a):
    phi, prm, cap, anchor = problem(*a)
    _, g, H = full(_pykernel.evaluate, phi, prm, cap, anchor)
    h = 1e-9  # penalty and friction terms are stiff; coarser steps straddle their curvature
    for i in range(0, phi.size, 3):
        d = np.zeros_like(phi)
        d[i] = h
        ep = _pykernel.evaluate(phi + d, prm, cap, anchor, GAUSS_X, GAUSS_W)
        em = _pykernel.evaluate(phi - d, prm, cap, anchor, GAUSS_X, GAUSS_W)
        assert g[i] == pytest.approx((ep - em) / (2 * h), rel=1e-4, abs=1e-6 * np.abs(g).max())
        gp, gm = np.zeros_like(phi), np.zeros_like(phi)
        _pykernel.evaluate(phi + d, prm, cap, anchor, GAUSS_X, GAUSS_W, gp, np.zeros_like(H))
        _pykernel.evaluate(phi - d, prm, cap, anchor, GAUSS_X, GAUSS_W, gm, np.zeros_like(H))
        np.testing.assert_allclose(H[:, i], (gp - gm) / (2 * h), rtol=1e-3, atol=1e-5 * np.abs(H).max())


def test_energy_only_call_matches(a=(0.1, 3e-4, 0.1, 0.0, 0)):
    p = problem(*a)
    assert kernel.evaluate(*p, GAUSS_X, GAUSS_W) == full(kernel.evaluate, *p)[0]


def test_backend_flag():
    assert kernel.BACKEND in ("compiled", "python")
    if _ckernel is not None:
        assert kernel.BACKEND == "compiled" or kernel.evaluate is _pykernel.evaluate


def test_pure_environment_variable_selects_numpy():
    import os
    import subprocess
    import sys

    env = dict(os.environ, PAGEFLIP_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import pageflip; print(pageflip.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
