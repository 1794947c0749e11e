"""Uniform grids, element/vertex scalar fields, and level-set extraction.

A grid is a d-dimensional array of congruent cube elements with edge
length ``spacing``. Elements are indexed row-major with x fastest
(2D: ``e = iy * nx + ix``; 3D: ``e = iz * nx * ny + iy * nx + ix``),
vertices likewise on the (dims + 1) lattice.

Each vertex owns a dual cell: the cube of side ``spacing`` centered on
it. Dual cells are keyed by the element whose minimal corner is that
vertex, so dual cells of far-boundary vertices (index == dims on any
axis) carry no element and classify as outside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class UniformGrid:
    """Axis-aligned uniform grid with square (2D) or cube (3D) elements."""

    origin: tuple[float, ...]
    spacing: float
    dims: tuple[int, ...]

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if len(self.dims) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(self.dims)}")
        if len(self.origin) != len(self.dims):
            raise ValueError("origin and dims must have matching length")
        if any(n < 1 for n in self.dims):
            raise ValueError(f"element counts must be >= 1, got {self.dims}")
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def num_elements(self) -> int:
        return int(np.prod(self.dims))

    @property
    def num_vertices(self) -> int:
        return int(np.prod([n + 1 for n in self.dims]))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.ndim

    def vertex_coords(self) -> np.ndarray:
        """All vertex positions, shape (num_vertices, d), x fastest."""
        axes = [self.origin[a] + self.spacing * np.arange(self.dims[a] + 1)
                for a in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        # index = iz*(nx+1)(ny+1) + iy*(nx+1) + ix  -> stack with x fastest
        out = np.stack([m.transpose() for m in mesh], axis=-1)
        return out.reshape(-1, self.ndim)

    def element_centers(self) -> np.ndarray:
        """All element centroids, shape (num_elements, d), x fastest."""
        axes = [self.origin[a] + self.spacing * (np.arange(self.dims[a]) + 0.5)
                for a in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.stack([m.transpose() for m in mesh], axis=-1)
        return out.reshape(-1, self.ndim)

    def element_index(self, multi: tuple[int, ...]) -> int:
        """Linear element index from per-axis indices (ix, iy[, iz])."""
        idx = 0
        for a in reversed(range(self.ndim)):
            idx = idx * self.dims[a] + multi[a]
        return idx

    def vertex_index(self, multi: tuple[int, ...]) -> int:
        idx = 0
        for a in reversed(range(self.ndim)):
            idx = idx * (self.dims[a] + 1) + multi[a]
        return idx

    def locate_cells(self, points: np.ndarray) -> np.ndarray:
        """Dual-cell classification of points, vectorized.

        Returns the element index owning the containing dual cell, or -1
        where the point falls outside dual coverage. Points exactly on a
        shared face resolve to the smaller index (round-half-down per
        axis): the owning vertex index is ``ceil(u - 1/2)`` with
        ``u = (p - origin) / spacing``.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        u = (pts - np.asarray(self.origin)) / self.spacing
        j = np.ceil(u - 0.5).astype(np.int64)
        valid = np.ones(len(pts), dtype=bool)
        for a in range(self.ndim):
            valid &= (j[:, a] >= 0) & (j[:, a] <= self.dims[a] - 1)
        out = np.full(len(pts), -1, dtype=np.int64)
        if valid.any():
            idx = np.zeros(valid.sum(), dtype=np.int64)
            for a in reversed(range(self.ndim)):
                idx = idx * self.dims[a] + j[valid, a]
            out[valid] = idx
        return out

    def locate_cell(self, point) -> int | None:
        """Single-point dual-cell lookup; None when outside coverage."""
        idx = self.locate_cells(np.asarray(point, dtype=np.float64)[None, :])[0]
        return None if idx < 0 else int(idx)

    def elements_at(self, points: np.ndarray) -> np.ndarray:
        """Primal element-box classification (floor), -1 outside.

        Points on a shared element face belong to the higher box, except
        the domain's far faces which are closed. Used by the collision
        oracle; intentionally distinct from the dual-cell rule.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        u = (pts - np.asarray(self.origin)) / self.spacing
        j = np.floor(u).astype(np.int64)
        # close the far boundary so the box union equals the bounding box
        for a in range(self.ndim):
            on_far = u[:, a] == self.dims[a]
            j[on_far, a] = self.dims[a] - 1
        valid = np.ones(len(pts), dtype=bool)
        for a in range(self.ndim):
            valid &= (j[:, a] >= 0) & (j[:, a] <= self.dims[a] - 1)
        out = np.full(len(pts), -1, dtype=np.int64)
        if valid.any():
            idx = np.zeros(valid.sum(), dtype=np.int64)
            for a in reversed(range(self.ndim)):
                idx = idx * self.dims[a] + j[valid, a]
            out[valid] = idx
        return out


@dataclass
class ElementField:
    """Per-element scalar array bound to a grid."""

    grid: UniformGrid
    values: np.ndarray
    kind: str = "scalar"  # "binary-design" | "scalar"

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.num_elements,):
            raise ValueError(
                f"field length {self.values.shape} != element count "
                f"{self.grid.num_elements}")
        if self.kind == "binary-design":
            self.values = self.values.astype(np.int8)
            if not np.isin(self.values, (0, 1)).all():
                raise ValueError("binary-design field must contain only {0, 1}")

    def copy(self) -> "ElementField":
        return ElementField(self.grid, self.values.copy(), self.kind)


@dataclass
class VertexField:
    """Per-vertex scalar array bound to a grid."""

    grid: UniformGrid
    values: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.num_vertices,):
            raise ValueError(
                f"field length {self.values.shape} != vertex count "
                f"{self.grid.num_vertices}")
        if self.kind == "binary-design":
            self.values = self.values.astype(np.int8)
            if not np.isin(self.values, (0, 1)).all():
                raise ValueError("binary-design field must contain only {0, 1}")


def element_to_vertex(f: ElementField) -> VertexField:
    """Vertex density as max over incident elements.

    A vertex is solid iff any adjacent element is solid; the conservative
    rule that makes a zero collision measure a sound termination test.
    """
    g = f.grid
    vals = f.values.reshape(tuple(reversed(g.dims)))  # (..., ny, nx)
    vshape = tuple(n + 1 for n in reversed(g.dims))
    out = np.zeros(vshape, dtype=f.values.dtype)
    # each element pushes its value onto its 2^d corner vertices
    if g.ndim == 2:
        for oy in (0, 1):
            for ox in (0, 1):
                sl = out[oy:oy + g.dims[1], ox:ox + g.dims[0]]
                np.maximum(sl, vals, out=sl)
    else:
        for oz in (0, 1):
            for oy in (0, 1):
                for ox in (0, 1):
                    sl = out[oz:oz + g.dims[2], oy:oy + g.dims[1],
                             ox:ox + g.dims[0]]
                    np.maximum(sl, vals, out=sl)
    return VertexField(g, out.reshape(-1), f.kind)


def volume_fraction(f: ElementField, design_mask: ElementField) -> float:
    """Solid fraction of the design region."""
    mask = design_mask.values.astype(bool)
    n_mask = int(mask.sum())
    if n_mask == 0:
        raise ValueError("degenerate design domain: empty design mask")
    return float(np.count_nonzero(f.values[mask] != 0)) / n_mask


def extract_level_set(sens: ElementField, tau: float,
                      frozen: ElementField | None = None) -> ElementField:
    """Binary design from a sensitivity field: solid iff sens > tau or frozen."""
    vals = np.asarray(sens.values, dtype=np.float64)
    if not np.isfinite(vals).all():
        raise ValueError("sensitivity field must be finite everywhere")
    solid = vals > tau
    if frozen is not None:
        solid |= frozen.values.astype(bool)
    return ElementField(sens.grid, solid.astype(np.int8), "binary-design")


# ---------------------------------------------------------------------------
# field I/O: text grid format and 8-bit PGM (2D)

def write_field_text(path, f: ElementField) -> None:
    """Text export: header `dims spacing origin`, then one line per grid
    row (x across), z-major blocks in 3D. Round-trips bit-identically."""
    g = f.grid
    with open(path, "w") as fh:
        header = [str(n) for n in g.dims] + [repr(g.spacing)] + \
            [repr(x) for x in g.origin]
        fh.write(" ".join(header) + "\n")
        rows = f.values.reshape(tuple(reversed(g.dims)))
        flat_rows = rows.reshape(-1, g.dims[0])
        for row in flat_rows:
            fh.write(" ".join(repr(v) for v in row.tolist()) + "\n")


def read_field_text(path) -> ElementField:
    with open(path) as fh:
        head = fh.readline().split()
        body = [line.split() for line in fh if line.strip()]
    # 2D header: nx ny eps ox oy (5 tokens); 3D: 7 tokens
    d = 2 if len(head) == 5 else 3
    dims = tuple(int(t) for t in head[:d])
    spacing = float(head[d])
    origin = tuple(float(t) for t in head[d + 1:])
    vals = np.array([float(t) for row in body for t in row])
    grid = UniformGrid(origin, spacing, dims)
    kind = "binary-design" if np.isin(vals, (0.0, 1.0)).all() else "scalar"
    return ElementField(grid, vals if kind == "scalar" else vals.astype(np.int8),
                        kind)


def write_field_pgm(path, f: ElementField) -> None:
    """8-bit grayscale PGM (P5) of a 2D field: 0 maps to black, the field
    max to white. Image rows run top-down, so grid row ny-1 is first."""
    g = f.grid
    if g.ndim != 2:
        raise ValueError("PGM export is 2D only")
    vals = np.asarray(f.values, dtype=np.float64).reshape(g.dims[1], g.dims[0])
    vmax = vals.max()
    img = np.zeros_like(vals) if vmax <= 0 else vals / vmax * 255.0
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)[::-1, :]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{g.dims[0]} {g.dims[1]}\n255\n".encode())
        fh.write(img.tobytes())


def read_field_pgm(path) -> np.ndarray:
    """Reload a P5 PGM as a (ny, nx) uint8 array in grid-row order."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"not a binary PGM file: {magic!r}")
        dims = fh.readline().split()
        nx, ny = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError("only 8-bit PGM supported")
        data = np.frombuffer(fh.read(nx * ny), dtype=np.uint8)
    return data.reshape(ny, nx)[::-1, :]
