"""Compliance topological sensitivity and the augmented removal field.

The closed-form plane-stress topological derivative of compliance is
evaluated at element centroids; it is normalized to [0, 1] over the
solid set and combined with the collision sensitivity T_G as
T_hat = T_norm + lambda_g * T_G. Elements with low T_hat are removed
first, so a large collision penalty steers removal into colliding
regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fea import FEASolution, Material
from .grid import ElementField


def compliance_tsf(sol: FEASolution, mat: Material,
                   rho_e: ElementField) -> ElementField:
    """Per-element topological derivative of compliance (plane stress):
    4/(1+nu) * (sigma : eps) - (1-3nu)/(1-nu^2) * tr(sigma) tr(eps).
    Void elements carry 0."""
    s, e = sol.element_stress, sol.element_strain
    contraction = s[:, 0] * e[:, 0] + s[:, 1] * e[:, 1] + 2.0 * s[:, 2] * e[:, 2]
    trace_prod = (s[:, 0] + s[:, 1]) * (e[:, 0] + e[:, 1])
    nu = mat.nu
    t = 4.0 / (1.0 + nu) * contraction \
        - (1.0 - 3.0 * nu) / (1.0 - nu ** 2) * trace_prod
    t = np.where(rho_e.values.astype(bool), t, 0.0)
    return ElementField(rho_e.grid, t, "scalar")


def tsf_value(stress: np.ndarray, strain: np.ndarray, nu: float) -> float:
    """Closed-form sensitivity for one (stress, strain) tensor pair given
    as (xx, yy, xy) components."""
    contraction = stress[0] * strain[0] + stress[1] * strain[1] \
        + 2.0 * stress[2] * strain[2]
    trace_prod = (stress[0] + stress[1]) * (strain[0] + strain[1])
    return 4.0 / (1.0 + nu) * contraction \
        - (1.0 - 3.0 * nu) / (1.0 - nu ** 2) * trace_prod


def normalize(f: ElementField, mask: np.ndarray) -> ElementField:
    """Shift-scale to [0, 1] over the masked (solid) elements; constant
    fields map to all ones. Values off the mask are zeroed."""
    vals = np.asarray(f.values, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    out = np.zeros_like(vals)
    if m.any():
        lo = vals[m].min()
        hi = vals[m].max()
        out[m] = (vals[m] - lo) / (hi - lo) if hi > lo else 1.0
    return ElementField(f.grid, out, "scalar")


def augment(tsf_norm: ElementField, t_g: ElementField,
            lambda_g: float) -> ElementField:
    """T_hat = T_norm + lambda_g * T_G, elementwise on one grid."""
    if lambda_g < 0:
        raise ValueError(f"collision penalty weight must be >= 0, got {lambda_g}")
    if tsf_norm.grid is not t_g.grid and tsf_norm.grid != t_g.grid:
        raise ValueError("augmented fields must share one grid")
    return ElementField(tsf_norm.grid,
                        np.asarray(tsf_norm.values, dtype=np.float64)
                        + lambda_g * np.asarray(t_g.values, dtype=np.float64),
                        "scalar")


@dataclass
class SensitivityBundle:
    """All per-part fields of one inner-loop pass."""

    compliance_raw: ElementField
    compliance_norm: ElementField
    collision: ElementField
    augmented: ElementField
    lambda_g: float
