"""2D plane-stress linear elasticity on uniform grids.

Bilinear quadrilateral elements, unit thickness, 2x2 Gauss quadrature.
Void elements keep an ersatz stiffness factor so the operator stays
positive definite; Dirichlet DOFs are eliminated by partitioning. The
solver contract is the relative residual bound, enforced after every
solve: direct sparse factorization at desk scale, conjugate gradients
beyond ~50k free DOFs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import ElementField, UniformGrid

_RESIDUAL_RTOL = 1e-8
_DIRECT_DOF_LIMIT = 50_000


@dataclass(frozen=True)
class Material:
    """Linear-elastic isotropic material with a void surrogate factor."""

    E: float = 1e9
    nu: float = 0.3
    ersatz: float = 1e-6

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError(f"Young's modulus must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError(f"Poisson's ratio must be in [0, 0.5), got {self.nu}")
        if not 0.0 < self.ersatz < 1.0:
            raise ValueError(f"ersatz factor must be in (0, 1), got {self.ersatz}")

    def constitutive(self) -> np.ndarray:
        """Plane-stress constitutive matrix (3x3, engineering shear)."""
        f = self.E / (1.0 - self.nu ** 2)
        return f * np.array([[1.0, self.nu, 0.0],
                             [self.nu, 1.0, 0.0],
                             [0.0, 0.0, (1.0 - self.nu) / 2.0]])


def resolve_node(grid: UniformGrid, where) -> int:
    """Resolve a node selector to a vertex index.

    Accepts named anchors ("corner:bottom-left", "corner:top-right",
    "edge-mid:top", ...) or a coordinate pair snapped to the nearest
    vertex.
    """
    nx, ny = grid.dims
    if isinstance(where, str):
        kind, _, name = where.partition(":")
        corners = {"bottom-left": (0, 0), "bottom-right": (nx, 0),
                   "top-left": (0, ny), "top-right": (nx, ny)}
        mids = {"bottom": (nx // 2, 0), "top": (nx // 2, ny),
                "left": (0, ny // 2), "right": (nx, ny // 2)}
        if kind == "corner" and name in corners:
            return grid.vertex_index(corners[name])
        if kind == "edge-mid" and name in mids:
            return grid.vertex_index(mids[name])
        raise ValueError(f"unknown node selector {where!r}")
    p = np.asarray(where, dtype=np.float64)
    ij = np.rint((p - np.asarray(grid.origin)) / grid.spacing).astype(int)
    ij = np.clip(ij, 0, np.asarray(grid.dims))
    return grid.vertex_index(tuple(ij))


def nodes_in_disk(grid: UniformGrid, center, radius: float) -> np.ndarray:
    """Vertex indices within a disk; used for fixed cutout boundaries."""
    verts = grid.vertex_coords()
    r = np.linalg.norm(verts - np.asarray(center, dtype=np.float64), axis=1)
    return np.flatnonzero(r <= radius)


@dataclass
class BoundaryConditions:
    """Resolved point constraints and nodal loads.

    fixed: list of (node index, axis, prescribed value); loads: list of
    (node index, force vector). At least 3 independent constrained DOFs
    are required to pin 2D rigid-body modes.
    """

    fixed: list = field(default_factory=list)
    loads: list = field(default_factory=list)

    def fix(self, node: int, axes, value: float = 0.0) -> "BoundaryConditions":
        for ax in axes:
            self.fixed.append((int(node), int(ax), float(value)))
        return self

    def load(self, node: int, vector) -> "BoundaryConditions":
        self.loads.append((int(node), np.asarray(vector, dtype=np.float64)))
        return self

    def validate(self, grid: UniformGrid) -> None:
        pairs = {(n, a) for n, a, _ in self.fixed}
        if len(pairs) < 3:
            raise ValueError(
                f"need at least 3 constrained DOFs to pin rigid-body modes, "
                f"got {len(pairs)}")
        n_v = grid.num_vertices
        for n, a, _ in self.fixed:
            if not (0 <= n < n_v and a in (0, 1)):
                raise ValueError(f"fixed DOF ({n}, {a}) outside grid")
        for n, _ in self.loads:
            if not 0 <= n < n_v:
                raise ValueError(f"load node {n} outside grid")


@dataclass
class FEASolution:
    """Displacements plus derived element-centroid state."""

    displacement: np.ndarray      # (n_vertices, 2)
    compliance: float             # f^T u
    element_stress: np.ndarray    # (n_elements, 3): sxx, syy, sxy
    element_strain: np.ndarray    # (n_elements, 3): exx, eyy, exy (tensor)
    residual: float               # relative residual of the free system

    def max_deformation(self) -> float:
        return float(np.linalg.norm(self.displacement, axis=1).max())

    def von_mises(self) -> np.ndarray:
        s = self.element_stress
        return np.sqrt(s[:, 0] ** 2 - s[:, 0] * s[:, 1] + s[:, 1] ** 2
                       + 3.0 * s[:, 2] ** 2)


_GAUSS = 1.0 / np.sqrt(3.0)
_CORNERS = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])


def _b_matrix(xi: float, eta: float, spacing: float) -> np.ndarray:
    """Strain-displacement matrix at a parent-domain point."""
    dN = np.empty((2, 4))
    for i, (xc, yc) in enumerate(_CORNERS):
        dN[0, i] = 0.25 * xc * (1.0 + yc * eta) * (2.0 / spacing)
        dN[1, i] = 0.25 * yc * (1.0 + xc * xi) * (2.0 / spacing)
    B = np.zeros((3, 8))
    B[0, 0::2] = dN[0]
    B[1, 1::2] = dN[1]
    B[2, 0::2] = dN[1]
    B[2, 1::2] = dN[0]
    return B


def element_stiffness(mat: Material, spacing: float) -> np.ndarray:
    """8x8 bilinear quad plane-stress stiffness (size-independent)."""
    D = mat.constitutive()
    KE = np.zeros((8, 8))
    detJ = spacing ** 2 / 4.0
    for xi in (-_GAUSS, _GAUSS):
        for eta in (-_GAUSS, _GAUSS):
            B = _b_matrix(xi, eta, spacing)
            KE += B.T @ D @ B * detJ
    return 0.5 * (KE + KE.T)


def element_dof_map(grid: UniformGrid) -> np.ndarray:
    """(n_elements, 8) DOF indices, CCW node order from the min corner."""
    nx, ny = grid.dims
    ex, ey = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    n1 = (ey * (nx + 1) + ex).reshape(-1)
    nodes = np.stack([n1, n1 + 1, n1 + nx + 2, n1 + nx + 1], axis=1)
    dofs = np.empty((grid.num_elements, 8), dtype=np.int64)
    dofs[:, 0::2] = 2 * nodes
    dofs[:, 1::2] = 2 * nodes + 1
    return dofs


def _element_scales(rho_e: ElementField, mat: Material) -> np.ndarray:
    rho = rho_e.values.astype(np.float64)
    return rho + mat.ersatz * (1.0 - rho)


def assemble_stiffness(grid: UniformGrid, rho_e: ElementField,
                       mat: Material) -> sp.csr_matrix:
    KE = element_stiffness(mat, grid.spacing)
    edof = element_dof_map(grid)
    scales = _element_scales(rho_e, mat)
    rows = np.repeat(edof, 8, axis=1).reshape(-1)
    cols = np.tile(edof, (1, 8)).reshape(-1)
    data = (scales[:, None, None] * KE[None, :, :]).reshape(-1)
    n_dof = 2 * grid.num_vertices
    K = sp.csr_matrix((data, (rows, cols)), shape=(n_dof, n_dof))
    return K


def assemble_and_solve(grid: UniformGrid, rho_e: ElementField, mat: Material,
                       bc: BoundaryConditions) -> FEASolution:
    """Assemble, apply boundary conditions, solve, and recover state."""
    if grid.ndim != 2:
        raise ValueError("elasticity solver is 2D plane stress only")
    bc.validate(grid)

    n_dof = 2 * grid.num_vertices
    K = assemble_stiffness(grid, rho_e, mat)
    f = np.zeros(n_dof)
    for node, vec in bc.loads:
        f[2 * node] += vec[0]
        f[2 * node + 1] += vec[1]

    u = np.zeros(n_dof)
    fixed_dofs = np.array(sorted({2 * n + a for n, a, _ in bc.fixed}),
                          dtype=np.int64)
    for n, a, v in bc.fixed:
        u[2 * n + a] = v
    free = np.setdiff1d(np.arange(n_dof), fixed_dofs, assume_unique=False)

    K_ff = K[free][:, free].tocsc()
    rhs = f[free] - K[free][:, fixed_dofs] @ u[fixed_dofs]
    u_f = _solve_spd(K_ff, rhs)
    u[free] = u_f

    rhs_norm = float(np.linalg.norm(rhs))
    res = float(np.linalg.norm(K_ff @ u_f - rhs))
    rel = res / rhs_norm if rhs_norm > 0 else res
    if not np.isfinite(rel) or rel > 10 * _RESIDUAL_RTOL:
        raise RuntimeError(
            f"linear solve failed: relative residual {rel:.2e} "
            "(insufficient constraints or load on a void region)")

    compliance = float(f @ u)
    stress, strain = _centroid_state(grid, rho_e, mat, u)
    return FEASolution(u.reshape(-1, 2), compliance, stress, strain, rel)


def _solve_spd(K_ff: sp.csc_matrix, rhs: np.ndarray) -> np.ndarray:
    if K_ff.shape[0] == 0:
        return np.zeros(0)
    if K_ff.shape[0] <= _DIRECT_DOF_LIMIT:
        try:
            lu = spla.splu(K_ff)
        except RuntimeError as exc:
            raise RuntimeError(
                f"stiffness factorization failed ({exc}): the system is "
                "singular — check constraints and solid connectivity") from exc
        return lu.solve(rhs)
    # large systems: Jacobi-preconditioned conjugate gradients
    diag = K_ff.diagonal()
    M = sp.diags(np.where(diag > 0, 1.0 / diag, 1.0))
    u, info = spla.cg(K_ff, rhs, rtol=_RESIDUAL_RTOL / 10, atol=0.0,
                      M=M, maxiter=20 * K_ff.shape[0])
    if info != 0:
        raise RuntimeError(f"conjugate gradient did not converge (info={info})")
    return u


def _centroid_state(grid: UniformGrid, rho_e: ElementField, mat: Material,
                    u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    B0 = _b_matrix(0.0, 0.0, grid.spacing)
    edof = element_dof_map(grid)
    ue = u[edof]                                # (n_e, 8)
    eng = ue @ B0.T                             # (n_e, 3): exx, eyy, gamma
    D = mat.constitutive()
    scales = _element_scales(rho_e, mat)
    stress = (eng @ D.T) * scales[:, None]
    strain = eng.copy()
    strain[:, 2] *= 0.5                         # tensor shear component
    return stress, strain


def recover_centroid_state(sol: FEASolution) -> tuple[np.ndarray, np.ndarray]:
    """Element-centroid (stress, strain) tensors from a solved state."""
    return sol.element_stress, sol.element_strain
