"""Hot inner loops for collision precomputation and the overlap oracle.

Two implementations of each kernel: a numba ``@njit`` version and a pure
numpy fallback with identical arithmetic order, selected by the
``CODESIGN_BACKEND`` environment variable (``auto`` | ``numba`` |
``numpy``; default ``auto`` uses numba when importable). Both paths
produce bit-identical integer outputs; ``benchmarks/collision_backends.py``
compares their throughput.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
    from numba import njit, prange
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _resolve_backend() -> str:
    choice = os.environ.get("CODESIGN_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"CODESIGN_BACKEND must be auto|numba|numpy, got {choice}")
    if choice == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("CODESIGN_BACKEND=numba but numba is not importable")
    if choice == "auto":
        return "numba" if _HAVE_NUMBA else "numpy"
    return choice


_BACKEND = _resolve_backend()


def active_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    """Override the kernel backend (used by tests and the benchmark)."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be numba|numpy, got {name}")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _BACKEND = name


def set_num_threads(n: int) -> None:
    if _HAVE_NUMBA and n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# dual-cell row classification of transported vertices (CWM assembly)

def _cwm_rows_numpy(verts, Rs, ts, origin, spacing, dims):
    m, n = Rs.shape[0], verts.shape[0]
    d = verts.shape[1]
    rows = np.empty((m, n), dtype=np.int64)
    for k in range(m):
        idx = np.zeros(n, dtype=np.int64)
        ok = np.ones(n, dtype=bool)
        for a in range(d - 1, -1, -1):
            x = Rs[k, a, 0] * verts[:, 0] + Rs[k, a, 1] * verts[:, 1]
            if d == 3:
                x = x + Rs[k, a, 2] * verts[:, 2]
            x = x + ts[k, a]
            u = (x - origin[a]) / spacing
            j = np.ceil(u - 0.5).astype(np.int64)
            ok &= (j >= 0) & (j <= dims[a] - 1)
            idx = idx * dims[a] + j
        rows[k] = np.where(ok, idx, -1)
    return rows


if _HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _cwm_rows_numba(verts, Rs, ts, origin, spacing, dims):  # pragma: no cover
        m, n = Rs.shape[0], verts.shape[0]
        d = verts.shape[1]
        rows = np.empty((m, n), dtype=np.int64)
        for k in prange(m):
            for jv in range(n):
                idx = np.int64(0)
                ok = True
                for a in range(d - 1, -1, -1):
                    x = Rs[k, a, 0] * verts[jv, 0] + Rs[k, a, 1] * verts[jv, 1]
                    if d == 3:
                        x = x + Rs[k, a, 2] * verts[jv, 2]
                    x = x + ts[k, a]
                    u = (x - origin[a]) / spacing
                    j = np.int64(math.ceil(u - 0.5))
                    if j < 0 or j > dims[a] - 1:
                        ok = False
                        break
                    idx = idx * dims[a] + j
                rows[k, jv] = idx if ok else -1
        return rows


def cwm_rows(verts, Rs, ts, origin, spacing, dims) -> np.ndarray:
    """Stationary dual-cell element row for every (step, vertex) pair.

    verts: (n, d) moving-grid vertex coordinates; Rs/ts: (m, d, d), (m, d)
    relative transforms at m time steps. Returns (m, n) int64, -1 where
    the transported vertex leaves dual coverage.
    """
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    Rs = np.ascontiguousarray(Rs, dtype=np.float64)
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    dims = np.asarray(dims, dtype=np.int64)
    if _BACKEND == "numba":
        return _cwm_rows_numba(verts, Rs, ts, origin, float(spacing), dims)
    return _cwm_rows_numpy(verts, Rs, ts, origin, float(spacing), dims)


# ---------------------------------------------------------------------------
# supersampled overlap counting (collision oracle)

def _oracle_counts_numpy(samples, Rs, ts, origin, spacing, dims, solid):
    m = Rs.shape[0]
    d = samples.shape[1]
    counts = np.zeros(m, dtype=np.int64)
    for k in range(m):
        idx = np.zeros(samples.shape[0], dtype=np.int64)
        ok = np.ones(samples.shape[0], dtype=bool)
        for a in range(d - 1, -1, -1):
            x = Rs[k, a, 0] * samples[:, 0] + Rs[k, a, 1] * samples[:, 1]
            if d == 3:
                x = x + Rs[k, a, 2] * samples[:, 2]
            x = x + ts[k, a]
            u = (x - origin[a]) / spacing
            j = np.floor(u).astype(np.int64)
            j[u == dims[a]] = dims[a] - 1
            ok &= (j >= 0) & (j <= dims[a] - 1)
            idx = idx * dims[a] + j
        hit = ok & (solid[np.where(ok, idx, 0)] != 0)
        counts[k] = np.count_nonzero(hit)
    return counts


if _HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _oracle_counts_numba(samples, Rs, ts, origin, spacing, dims,
                             solid):  # pragma: no cover
        m = Rs.shape[0]
        n = samples.shape[0]
        d = samples.shape[1]
        counts = np.zeros(m, dtype=np.int64)
        for k in prange(m):
            c = np.int64(0)
            for p in range(n):
                idx = np.int64(0)
                ok = True
                for a in range(d - 1, -1, -1):
                    x = Rs[k, a, 0] * samples[p, 0] + Rs[k, a, 1] * samples[p, 1]
                    if d == 3:
                        x = x + Rs[k, a, 2] * samples[p, 2]
                    x = x + ts[k, a]
                    u = (x - origin[a]) / spacing
                    j = np.int64(math.floor(u))
                    if u == dims[a]:
                        j = dims[a] - 1
                    if j < 0 or j > dims[a] - 1:
                        ok = False
                        break
                    idx = idx * dims[a] + j
                if ok and solid[idx] != 0:
                    c += 1
            counts[k] = c
        return counts


def oracle_counts(samples, Rs, ts, origin, spacing, dims, solid) -> np.ndarray:
    """Per-step count of sample points landing in solid moving elements.

    samples: (n, d) stationary-frame points; Rs/ts: inverse relative
    transforms carrying them into the moving grid's frame; solid: flat
    int8 element occupancy of the moving grid.
    """
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    Rs = np.ascontiguousarray(Rs, dtype=np.float64)
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    dims = np.asarray(dims, dtype=np.int64)
    solid = np.ascontiguousarray(solid, dtype=np.int8)
    if _BACKEND == "numba":
        return _oracle_counts_numba(samples, Rs, ts, origin, float(spacing),
                                    dims, solid)
    return _oracle_counts_numpy(samples, Rs, ts, origin, float(spacing),
                                dims, solid)
