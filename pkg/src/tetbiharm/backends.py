"""Numba-accelerated hot kernels with a pure-numpy fallback.

The two inner loops that dominate assembly at finer levels are the
evaluation of barycentric monomial tables at quadrature points and the
expansion of cached element matrices into COO triplets across all
elements.  Both exist in a numba ``@njit`` version and a vectorized numpy
version; selection is via the environment variable ``TETBIHARM_BACKEND``
(``numba``, ``numpy`` or ``auto``; ``auto`` picks numba when importable).
``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time choice
    numba = None
    HAS_NUMBA = False


def backend_name() -> str:
    choice = os.environ.get("TETBIHARM_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"bad TETBIHARM_BACKEND {choice!r}")
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError("TETBIHARM_BACKEND=numba but numba is not importable")
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    return choice


def monomial_table_numpy(expos: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Values of monomials lambda^expo at barycentric points.

    expos: (n_mono, 4) int64, bary: (n_pts, 4) float64 -> (n_mono, n_pts).
    """
    return np.prod(bary.T[None, :, :] ** expos[:, :, None], axis=1)


def scatter_symmetric_numpy(kcan, gidx, signs):
    """COO triplets of sign-adjusted copies of one cached element matrix.

    kcan: (n, n); gidx: (n_elem, n) int64 global indices; signs: (n_elem, n)
    +-1.  Returns rows, cols, vals flattened in element order.
    """
    n_elem, n = gidx.shape
    vals = (signs[:, :, None] * signs[:, None, :]) * kcan[None, :, :]
    rows = np.repeat(gidx, n, axis=1)
    cols = np.tile(gidx, (1, n))
    return rows.ravel(), cols.ravel(), vals.ravel()


if HAS_NUMBA:

    @numba.njit(cache=True)
    def _monomial_table_numba(expos, bary):  # pragma: no cover - jitted
        n_mono = expos.shape[0]
        n_pts = bary.shape[0]
        out = np.empty((n_mono, n_pts))
        for i in range(n_mono):
            for q in range(n_pts):
                v = 1.0
                for k in range(4):
                    p = expos[i, k]
                    for _ in range(p):
                        v *= bary[q, k]
                out[i, q] = v
        return out

    @numba.njit(cache=True)
    def _scatter_symmetric_numba(kcan, gidx, signs):  # pragma: no cover - jitted
        n_elem, n = gidx.shape
        m = n_elem * n * n
        rows = np.empty(m, dtype=np.int64)
        cols = np.empty(m, dtype=np.int64)
        vals = np.empty(m)
        pos = 0
        for e in range(n_elem):
            for i in range(n):
                si = signs[e, i]
                gi = gidx[e, i]
                for j in range(n):
                    rows[pos] = gi
                    cols[pos] = gidx[e, j]
                    vals[pos] = si * signs[e, j] * kcan[i, j]
                    pos += 1
        return rows, cols, vals

    def monomial_table_numba(expos, bary):
        return _monomial_table_numba(
            np.ascontiguousarray(expos, dtype=np.int64),
            np.ascontiguousarray(bary, dtype=np.float64),
        )

    def scatter_symmetric_numba(kcan, gidx, signs):
        return _scatter_symmetric_numba(
            np.ascontiguousarray(kcan, dtype=np.float64),
            np.ascontiguousarray(gidx, dtype=np.int64),
            np.ascontiguousarray(signs, dtype=np.float64),
        )


def monomial_table(expos: np.ndarray, bary: np.ndarray) -> np.ndarray:
    if backend_name() == "numba":
        return monomial_table_numba(expos, bary)
    return monomial_table_numpy(expos, bary)


def scatter_symmetric(kcan, gidx, signs):
    if backend_name() == "numba":
        return scatter_symmetric_numba(kcan, gidx, signs)
    return scatter_symmetric_numpy(kcan, gidx, signs)
