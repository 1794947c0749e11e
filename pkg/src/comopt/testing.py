"""Shared verification helpers used by the CLI checks and the test suite."""

from __future__ import annotations

import numpy as np
from scipy.stats import spearmanr

from .fea import BoundaryConditions, Material, assemble_and_solve, resolve_node
from .grid import ElementField, UniformGrid
from .sensitivity import compliance_tsf


def cantilever(n: int = 10, spacing: float = 0.1):
    """Solid n x n cantilever: left edge clamped, downward tip load."""
    grid = UniformGrid((0.0, 0.0), spacing, (n, n))
    bc = BoundaryConditions()
    for jy in range(n + 1):
        bc.fix(grid.vertex_index((0, jy)), (0, 1))
    bc.load(resolve_node(grid, "corner:bottom-right"), (0.0, -1.0))
    mat = Material(E=1.0, nu=0.3)
    design = ElementField(grid, np.ones(grid.num_elements, dtype=np.int8),
                          "binary-design")
    return grid, design, mat, bc


def interior_elements(grid: UniformGrid) -> np.ndarray:
    """Element indices not on the outermost boundary layer."""
    nx, ny = grid.dims
    ex, ey = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    inner = (ex > 0) & (ex < nx - 1) & (ey > 0) & (ey < ny - 1)
    return np.flatnonzero(inner.reshape(-1))


def tsf_removal_spearman(n: int = 10) -> float:
    """Rank correlation between the closed-form sensitivity and the exact
    compliance increase under single-element removal (interior only)."""
    grid, design, mat, bc = cantilever(n)
    sol = assemble_and_solve(grid, design, mat, bc)
    tsf = compliance_tsf(sol, mat, design).values
    base = sol.compliance
    interior = interior_elements(grid)
    deltas = np.empty(interior.size)
    for k, e in enumerate(interior):
        trial = design.copy()
        trial.values[e] = 0
        deltas[k] = assemble_and_solve(grid, trial, mat, bc).compliance - base
    rho, _ = spearmanr(tsf[interior], deltas)
    return float(rho)
