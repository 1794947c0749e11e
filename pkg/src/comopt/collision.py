"""Collision weight matrices, collision measures, gradients, and oracle.

A collision weight matrix (CWM) couples one stationary part's elements
with one moving part's vertices: entry (e, v) counts the time steps at
which the transported vertex v lies in the dual cell owned by element e,
scaled by eps^d * dt. Counts are kept as int64 and scaled on readout,
so measures and gradients are exact integer arithmetic times one float
factor: flipping a design element changes the measure by exactly the
gradient entry, and results are independent of accumulation order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .grid import ElementField, UniformGrid, VertexField, element_to_vertex
from .motion import RelativeTrajectory

_CHUNK_ENTRIES = 4_000_000  # (steps x vertices) per kernel call, bounds memory


@dataclass
class CollisionWeightMatrix:
    """Sparse nonnegative matrix of motion-only pairwise correlations.

    ``spacing`` is the moving grid's cell edge: each moving vertex is the
    quadrature point of its own dual cell, so one (cell, vertex, step)
    hit carries measure spacing^d * dt. With a shared discretization this
    equals the stationary cell volume; with per-part grids it is the
    moving one that keeps both orderings of a pair consistent.
    """

    stationary: int
    moving: int
    counts: sp.csr_matrix  # int64 step counts, shape (n_e_stationary, n_v_moving)
    steps: int
    spacing: float
    ndim: int

    @property
    def scale(self) -> float:
        """spacing^d * dt: the measure quantum of one hit."""
        return self.spacing ** self.ndim / self.steps

    @property
    def entries(self) -> sp.csr_matrix:
        """Weights in measure units (length^d x time)."""
        return self.counts.astype(np.float64) * self.scale

    def gradient_counts(self, rho_v: np.ndarray) -> np.ndarray:
        """Integer gradient: (counts @ rho_v), one entry per stationary element."""
        return self.counts.dot(rho_v.astype(np.int64))

    def measure_counts(self, rho_e: np.ndarray, rho_v: np.ndarray) -> int:
        return int(rho_e.astype(np.int64).dot(self.gradient_counts(rho_v)))


def assemble_cwm(stationary_grid: UniformGrid, moving_grid: UniformGrid,
                 rel: RelativeTrajectory, K: int) -> CollisionWeightMatrix:
    """Build the CWM by left-endpoint Riemann sampling of the relative motion.

    For each step t_k = (k-1)/K and each moving vertex, transport by the
    relative transform and classify against the stationary dual
    tessellation; out-of-grid vertices contribute nothing. Chunked over
    time steps; counts are integers so the result does not depend on
    chunking or thread count.
    """
    if K < 1:
        raise ValueError(f"step count must be >= 1, got {K}")
    if stationary_grid.ndim != moving_grid.ndim:
        raise ValueError("grids must share one dimension")
    verts = moving_grid.vertex_coords()
    n_v = verts.shape[0]
    n_e = stationary_grid.num_elements
    d = stationary_grid.ndim

    chunk = max(1, _CHUNK_ENTRIES // max(1, n_v))
    code_chunks: list[np.ndarray] = []
    count_chunks: list[np.ndarray] = []
    cols_tile = np.tile(np.arange(n_v, dtype=np.int64), chunk)
    for k0 in range(0, K, chunk):
        ks = np.arange(k0, min(k0 + chunk, K))
        Rs = np.empty((len(ks), d, d))
        ts = np.empty((len(ks), d))
        for i, k in enumerate(ks):
            tf = rel.at(k / K)  # t_k = (k-1) dt with k starting at 1
            Rs[i] = tf.rotation
            ts[i] = tf.translation
        rows = _kernels.cwm_rows(verts, Rs, ts, stationary_grid.origin,
                                 stationary_grid.spacing, stationary_grid.dims)
        rows = rows.reshape(-1)
        inside = rows >= 0
        codes = rows[inside] * n_v + cols_tile[:rows.size][inside]
        uniq, cnt = np.unique(codes, return_counts=True)
        code_chunks.append(uniq)
        count_chunks.append(cnt.astype(np.int64))

    if code_chunks:
        all_codes = np.concatenate(code_chunks)
        all_counts = np.concatenate(count_chunks)
        uniq, inv = np.unique(all_codes, return_inverse=True)
        totals = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(totals, inv, all_counts)
    else:
        uniq = np.empty(0, dtype=np.int64)
        totals = np.empty(0, dtype=np.int64)

    counts = sp.csr_matrix(
        (totals, (uniq // n_v, uniq % n_v)), shape=(n_e, n_v), dtype=np.int64)
    return CollisionWeightMatrix(rel.observer, rel.moving, counts, K,
                                 moving_grid.spacing, d)


def collision_measure(rho_e: ElementField, W: CollisionWeightMatrix,
                      rho_v: VertexField) -> float:
    """Pairwise collision measure [rho_e]^T [W] [rho_v] (length^d x time)."""
    if rho_e.values.shape[0] != W.counts.shape[0]:
        raise ValueError(
            f"element field length {rho_e.values.shape[0]} != CWM rows "
            f"{W.counts.shape[0]}")
    if rho_v.values.shape[0] != W.counts.shape[1]:
        raise ValueError(
            f"vertex field length {rho_v.values.shape[0]} != CWM cols "
            f"{W.counts.shape[1]}")
    return W.measure_counts(rho_e.values, rho_v.values) * W.scale


def collision_gradient(cwms: dict[tuple[int, int], CollisionWeightMatrix],
                       part: int, rho_v: dict[int, VertexField],
                       grid: UniformGrid) -> ElementField:
    """d G_i / d rho_e_i = sum_j W_{i,j} rho_v_j; exact since G is linear."""
    total = np.zeros(grid.num_elements, dtype=np.int64)
    scale = None
    for (i, j), W in cwms.items():
        if i != part or j == part:
            continue
        total += W.gradient_counts(rho_v[j].values)
        scale = W.scale
    if scale is None:
        raise ValueError(f"no collision weight matrices with part {part} stationary")
    return ElementField(grid, total.astype(np.float64) * scale, "scalar")


def collision_sensitivity(grad: ElementField) -> ElementField:
    """T_G = 1 - grad / max(grad): 1 where collision-free, 0 at the worst
    element; the all-ones field when there is no collision anywhere."""
    g = np.asarray(grad.values, dtype=np.float64)
    if (g < 0).any():
        raise ValueError("collision gradient must be nonnegative")
    m = g.max()
    if m <= 0:
        return ElementField(grad.grid, np.ones_like(g), "scalar")
    return ElementField(grad.grid, 1.0 - g / m, "scalar")


@dataclass
class CollisionReport:
    """Pairwise and aggregate measures plus per-part local fields."""

    pairwise: dict[tuple[int, int], float]
    aggregate: dict[int, float]
    local_fields: dict[int, ElementField]

    def max_aggregate(self) -> float:
        return max(self.aggregate.values()) if self.aggregate else 0.0


def aggregate_collision(designs: dict[int, ElementField],
                        cwms: dict[tuple[int, int], CollisionWeightMatrix],
                        vertex_designs: dict[int, VertexField] | None = None,
                        ) -> CollisionReport:
    """Evaluate all pairwise measures G_{i,j}, aggregates G_i, and the
    elementwise local collision fields rho_e * (sum_j W rho_v)."""
    parts = sorted(designs)
    if vertex_designs is None:
        vertex_designs = {i: element_to_vertex(designs[i]) for i in parts}
    pairwise: dict[tuple[int, int], float] = {}
    aggregate: dict[int, float] = {}
    local: dict[int, ElementField] = {}
    for i in parts:
        grad_counts = np.zeros(designs[i].grid.num_elements, dtype=np.int64)
        scale = None
        for j in parts:
            if i == j:
                continue
            if (i, j) not in cwms:
                raise ValueError(f"missing collision weight matrix for pair {(i, j)}")
            W = cwms[(i, j)]
            gc = W.gradient_counts(vertex_designs[j].values)
            pairwise[(i, j)] = int(designs[i].values.astype(np.int64).dot(gc)) \
                * W.scale
            grad_counts += gc
            scale = W.scale
        if scale is None:  # single part: no pairs, measure 0
            aggregate[i] = 0.0
            local[i] = ElementField(designs[i].grid,
                                    np.zeros(designs[i].grid.num_elements))
            continue
        aggregate[i] = sum(pairwise[(i, j)] for j in parts if j != i)
        local[i] = ElementField(
            designs[i].grid,
            designs[i].values * grad_counts.astype(np.float64) * scale, "scalar")
    return CollisionReport(pairwise, aggregate, local)


# ---------------------------------------------------------------------------
# independent continuous-overlap oracle

def oracle_collision(solid_a: ElementField, solid_b: ElementField,
                     rel: RelativeTrajectory, K: int,
                     samples_per_cell: int = 4) -> float:
    """Brute-force Riemann estimate of the time-aggregated overlap volume.

    At each of K left-endpoint steps, the overlap of the stationary solid
    A with the transported solid B is measured by classifying a stratified
    lattice of samples_per_cell^d midpoint samples per solid A cell
    against B's element boxes along the inverse relative transform. Shares
    no code path with assemble_cwm.
    """
    ga, gb = solid_a.grid, solid_b.grid
    d = ga.ndim
    centers = ga.element_centers()[solid_a.values.astype(bool)]
    if centers.shape[0] == 0 or K < 1:
        return 0.0
    s = samples_per_cell
    offs_1d = (np.arange(s) + 0.5) / s - 0.5
    mesh = np.meshgrid(*([offs_1d] * d), indexing="ij")
    offsets = np.stack([m.reshape(-1) for m in mesh], axis=-1) * ga.spacing
    pts = (centers[:, None, :] + offsets[None, :, :]).reshape(-1, d)
    sample_vol = ga.cell_volume / s ** d

    chunk = max(1, _CHUNK_ENTRIES // max(1, pts.shape[0]))
    total = 0
    for k0 in range(0, K, chunk):
        ks = np.arange(k0, min(k0 + chunk, K))
        Rs = np.empty((len(ks), d, d))
        ts = np.empty((len(ks), d))
        for i, k in enumerate(ks):
            inv = rel.at(k / K).inverse()
            Rs[i] = inv.rotation
            ts[i] = inv.translation
        counts = _kernels.oracle_counts(pts, Rs, ts, gb.origin, gb.spacing,
                                        gb.dims, solid_b.values)
        total += int(counts.sum())
    return total * sample_vol / K


# ---------------------------------------------------------------------------
# CWM cache files: binary triplets with integer step counts

_MAGIC = b"CWMB"


def write_cwm(path, W: CollisionWeightMatrix) -> None:
    coo = W.counts.tocoo()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<4i", W.ndim, W.stationary, W.moving, W.steps))
        fh.write(struct.pack("<d", W.spacing))
        fh.write(struct.pack("<3q", W.counts.shape[0], W.counts.shape[1],
                             coo.nnz))
        rec = np.empty((coo.nnz, 3), dtype=np.int64)
        rec[:, 0] = coo.row
        rec[:, 1] = coo.col
        rec[:, 2] = coo.data
        fh.write(rec.tobytes())


def read_cwm(path) -> CollisionWeightMatrix:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a collision weight matrix file")
        ndim, stationary, moving, steps = struct.unpack("<4i", fh.read(16))
        (spacing,) = struct.unpack("<d", fh.read(8))
        n_e, n_v, nnz = struct.unpack("<3q", fh.read(24))
        rec = np.frombuffer(fh.read(nnz * 24), dtype=np.int64).reshape(nnz, 3)
    counts = sp.csr_matrix((rec[:, 2], (rec[:, 0], rec[:, 1])),
                           shape=(n_e, n_v), dtype=np.int64)
    return CollisionWeightMatrix(stationary, moving, counts, steps, spacing, ndim)
