"""Selects the compiled core when available, NumPy fallbacks otherwise.

Set DIVKERNEL_BACKEND=numpy to force the fallback (used by the benchmark
and by tests that compare the two implementations).
"""

from __future__ import annotations

import os

from . import _ref

_forced = os.environ.get("DIVKERNEL_BACKEND", "").strip().lower()

if _forced == "numpy":
    _impl = _ref
else:
    try:
        from . import _core
        _impl = _core
    except ImportError:
        _impl = _ref

BACKEND_NAME: str = _impl.BACKEND_NAME
gaussian_kde_grid = _impl.gaussian_kde_grid
replay_divisions = _impl.replay_divisions
