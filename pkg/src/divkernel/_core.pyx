# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Gaussian KDE tabulation and division replay.

Mirrors _ref; the float operation order is kept identical so results match
the fallback to the last bit (exp aside, which may differ by one ulp
between libm and NumPy's vectorized implementation).
"""

from libc.math cimport ceil, exp, floor, sqrt

import numpy as np

BACKEND_NAME = "compiled"

M_SQRT_2PI = sqrt(2.0 * 3.14159265358979323846)


def gaussian_kde_grid(samples, double lo, double dx, int n_points, double bandwidth, double trunc):
    """Tabulate (1/(m l)) sum_i phi((g_j - x_i)/l) on the uniform grid."""
    cdef double[::1] x = np.ascontiguousarray(samples, dtype=np.float64)
    cdef Py_ssize_t m = x.shape[0]
    if m == 0:
        raise ValueError("need a nonempty 1d sample")
    if bandwidth <= 0.0 or dx <= 0.0:
        raise ValueError("bandwidth and grid step must be positive")
    out_arr = np.zeros(n_points)
    cdef double[::1] out = out_arr
    cdef double radius = trunc * bandwidth
    cdef double inv_bw = 1.0 / bandwidth
    cdef Py_ssize_t i, j, j0, j1
    cdef double xi, z
    for i in range(m):
        xi = x[i]
        j0 = <Py_ssize_t>ceil((xi - radius - lo) / dx)
        j1 = <Py_ssize_t>floor((xi + radius - lo) / dx)
        if j0 < 0:
            j0 = 0
        if j1 >= n_points:
            j1 = n_points - 1
        for j in range(j0, j1 + 1):
            z = (lo + j * dx - xi) * inv_bw
            if z > trunc or z < -trunc:
                continue
            out[j] += exp(-0.5 * z * z)
    cdef double scale = 1.0 / (m * bandwidth * M_SQRT_2PI)
    for j in range(n_points):
        out[j] *= scale
    return out_arr


def replay_divisions(times, cells, fracs, x0, double alpha):
    """Apply division events in order; see the fallback for the contract."""
    cdef double[::1] t_arr = np.ascontiguousarray(times, dtype=np.float64)
    cdef long long[::1] c_arr = np.ascontiguousarray(cells, dtype=np.int64)
    cdef double[::1] f_arr = np.ascontiguousarray(fracs, dtype=np.float64)
    cdef double[::1] x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t m = t_arr.shape[0]
    cdef Py_ssize_t n0 = x0_arr.shape[0]
    if c_arr.shape[0] != m or f_arr.shape[0] != m:
        raise ValueError("event arrays must have equal length")
    xb_arr = np.empty(n0 + m)
    tb_arr = np.zeros(n0 + m)
    parent_arr = np.empty(m)
    cdef double[::1] xb = xb_arr
    cdef double[::1] tb = tb_arr
    cdef double[::1] parent_tox = parent_arr
    cdef Py_ssize_t k, p
    cdef double t, xp, d1
    for k in range(n0):
        xb[k] = x0_arr[k]
    for k in range(m):
        p = <Py_ssize_t>c_arr[k]
        t = t_arr[k]
        xp = xb[p] + alpha * (t - tb[p])
        d1 = f_arr[k] * xp
        parent_tox[k] = xp
        xb[p] = d1
        tb[p] = t
        xb[n0 + k] = xp - d1
        tb[n0 + k] = t
    return parent_arr, xb_arr, tb_arr
