"""Pure NumPy fallbacks for the compiled kernels in _core.

Same call signatures and, up to floating point library differences in exp,
the same outputs.  Selected automatically when the extension is missing;
see _backend.
"""

from __future__ import annotations

import math

import numpy as np

_CHUNK = 2048

BACKEND_NAME = "numpy"


def gaussian_kde_grid(
    samples: np.ndarray,
    lo: float,
    dx: float,
    n_points: int,
    bandwidth: float,
    trunc: float,
) -> np.ndarray:
    """Tabulate (1/(m l)) sum_i phi((g_j - x_i)/l) on the uniform grid.

    Contributions beyond trunc standard deviations are dropped; at the
    truncation used by callers they sit at the 2e-16 level of the peak.
    """
    x = np.ascontiguousarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("need a nonempty 1d sample")
    if bandwidth <= 0.0 or dx <= 0.0:
        raise ValueError("bandwidth and grid step must be positive")
    out = np.zeros(n_points)
    radius = trunc * bandwidth
    width = min(int(math.floor(2.0 * radius / dx)) + 2, n_points)
    offsets = np.arange(width)
    for start in range(0, x.size, _CHUNK):
        xc = x[start : start + _CHUNK]
        first = np.ceil((xc - radius - lo) / dx).astype(np.int64)
        # anchor windows that begin left of the grid at index 0, otherwise a
        # capped window can miss the in-grid part of a wide kernel
        np.maximum(first, 0, out=first)
        idx = first[:, None] + offsets[None, :]
        z = (lo + idx * dx - xc[:, None]) / bandwidth
        w = np.exp(-0.5 * z * z)
        w[(idx < 0) | (idx >= n_points) | (np.abs(z) > trunc)] = 0.0
        out += np.bincount(
            np.clip(idx, 0, n_points - 1).ravel(), weights=w.ravel(), minlength=n_points
        )
    out *= 1.0 / (x.size * bandwidth * math.sqrt(2.0 * math.pi))
    return out


def replay_divisions(
    times: np.ndarray,
    cells: np.ndarray,
    fracs: np.ndarray,
    x0: np.ndarray,
    alpha: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Apply division events in order and return per-event parent toxicity.

    State per living cell is (toxicity at birth, birth time); the cell's
    toxicity at time t is birth value + alpha * (t - birth time).  Event k
    replaces cell `cells[k]` by a daughter carrying fraction `fracs[k]` of
    the mother's toxicity and appends the sibling at the next free slot.
    The second daughter receives mother minus first daughter, which keeps
    the split exact to the last bit.

    Returns (parent toxicity per event, final birth toxicities, final
    birth times); the final arrays have n0 + len(times) entries.
    """
    times = np.ascontiguousarray(times, dtype=float)
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    fracs = np.ascontiguousarray(fracs, dtype=float)
    x0 = np.ascontiguousarray(x0, dtype=float)
    m = times.size
    n0 = x0.size
    if cells.size != m or fracs.size != m:
        raise ValueError("event arrays must have equal length")
    xb = np.empty(n0 + m)
    tb = np.zeros(n0 + m)
    xb[:n0] = x0
    parent_tox = np.empty(m)
    for k in range(m):
        p = cells[k]
        t = times[k]
        xp = xb[p] + alpha * (t - tb[p])
        d1 = fracs[k] * xp
        parent_tox[k] = xp
        xb[p] = d1
        tb[p] = t
        xb[n0 + k] = xp - d1
        tb[n0 + k] = t
    return parent_tox, xb, tb
