# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused anisotropic-TV value + subgradient kernel.

Single pass over the image, no temporaries; the numpy twin lives in
``_tvkernels_np.py`` and must stay behaviorally identical.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def tv_and_subgradient(cnp.ndarray[cnp.float64_t, ndim=2] x):
    """Return (tv_value, subgradient) for a float64 2D array in one pass."""
    cdef Py_ssize_t n1 = x.shape[0]
    cdef Py_ssize_t n2 = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g = np.zeros((n1, n2), dtype=np.float64)
    cdef double total = 0.0
    cdef double d
    cdef Py_ssize_t i, j

    for i in range(n1 - 1):
        for j in range(n2):
            d = x[i + 1, j] - x[i, j]
            if d > 0.0:
                total += d
                g[i + 1, j] += 1.0
                g[i, j] -= 1.0
            elif d < 0.0:
                total -= d
                g[i + 1, j] -= 1.0
                g[i, j] += 1.0

    for i in range(n1):
        for j in range(n2 - 1):
            d = x[i, j + 1] - x[i, j]
            if d > 0.0:
                total += d
                g[i, j + 1] += 1.0
                g[i, j] -= 1.0
            elif d < 0.0:
                total -= d
                g[i, j + 1] -= 1.0
                g[i, j] += 1.0

    return total, g
