"""Backend selection for the hot kernels.

The compiled extension ``qmcomb._kernels`` is used when it imports; the
pure-Python ``qmcomb._fallback`` otherwise.  Setting the environment
variable ``QMCOMB_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("QMCOMB_PURE_PYTHON", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

block_response_grid = _impl.block_response_grid
rk4_block = _impl.rk4_block
rk4_resonator = _impl.rk4_resonator

__all__ = ["BACKEND", "block_response_grid", "rk4_block", "rk4_resonator"]
