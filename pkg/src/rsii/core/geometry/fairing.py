from __future__ import annotations

import logging

import numpy as np
from scipy import sparse

from rsii.core.geometry.surface import TriangleSurface

logger = logging.getLogger(__name__)


def fair_surface(
    surface: TriangleSurface,
    iterations: int = 10,
    lam: float = 0.5,
    mu: float = -0.53,
) -> TriangleSurface:
    """
    Taubin lambda/mu smoothing with the uniform umbrella operator.

    Removes marching-cubes staircase noise without the shrinkage of plain Laplacian
    smoothing. Boundary vertices stay where they are; connectivity is unchanged.
    """
    if iterations <= 0:
        return surface
    if not (lam > 0 and mu < -lam):
        raise ValueError(f"Taubin weights need lam > 0 and mu < -lam, got {lam}, {mu}")

    adj = surface.adjacency
    degree = np.asarray(adj.sum(axis=1)).reshape(-1)
    inv_deg = sparse.diags(1.0 / np.where(degree > 0, degree, 1.0))
    averaging = inv_deg @ adj

    free = np.ones(surface.n_vertices, dtype=bool)
    free[surface.boundary_vertices()] = False
    mask = free[:, None].astype(np.float64)

    v = surface.vertices.copy()
    for _ in range(iterations):
        for weight in (lam, mu):
            v = v + weight * mask * (averaging @ v - v)

    shift = np.linalg.norm(v - surface.vertices, axis=1)
    logger.debug(f"fairing moved vertices by at most {shift.max(initial=0.0):.4f} mm")
    return surface.with_vertices(v)
