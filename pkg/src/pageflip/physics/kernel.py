"""Energy-kernel backend selection.

The compiled ``_ckernel`` extension is used when it imports; otherwise the
numpy reference in ``_pykernel``. Set ``PAGEFLIP_PURE=1`` to force the
reference implementation.
"""
import os

from . import _pykernel

NPRM = _pykernel.NPRM

BACKEND = "python"
evaluate = _pykernel.evaluate

if not os.environ.get("PAGEFLIP_PURE"):
    try:
        from . import _ckernel
    except ImportError:  # extension not built
        pass
    else:
        evaluate = _ckernel.evaluate
        BACKEND = "compiled"
