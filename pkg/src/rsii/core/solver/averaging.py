from __future__ import annotations

import logging

import numpy as np
from scipy import sparse

from rsii.core.solver.elasticity import StressField
from rsii.core.solver.mesh import WallMesh

logger = logging.getLogger(__name__)


def column_weights(mesh: WallMesh) -> sparse.csr_matrix:
    """(n_columns, n_tets) matrix of tet volumes for every tet in a column's prism stack."""
    volumes = mesh.tet_volumes()
    corners = mesh.surface_triangles[mesh.tet_triangle]
    rows = corners.reshape(-1)
    cols = np.repeat(np.arange(mesh.n_tets), 3)
    vals = np.repeat(volumes, 3)
    return sparse.coo_matrix((vals, (rows, cols)), shape=(mesh.n_columns, mesh.n_tets)).tocsr()


def uniform_stress_average(mesh: WallMesh, stresses: StressField) -> StressField:
    """
    Replace the through-thickness stress of each node column by the volume-weighted mean
    over every tet in the prisms that share the column's surface vertex, all layers.

    Under the uniform-stress hypothesis residual stresses level the stress across the
    wall, so the averaged tensor is the corrected stress and the tension integral is
    unchanged.
    """
    element = np.asarray(stresses.element)
    if element.shape != (mesh.n_tets, 3, 3):
        raise ValueError(
            f"stress field has shape {element.shape}, expected ({mesh.n_tets}, 3, 3)"
        )
    if mesh.tet_triangle.shape != (mesh.n_tets,):
        raise ValueError("wall mesh carries no tet-to-column mapping")

    weights = column_weights(mesh)
    total = np.asarray(weights.sum(axis=1)).reshape(-1)
    if np.any(total <= 0):
        raise ValueError(f"{int(np.count_nonzero(total <= 0))} columns own no tetrahedra")
    column = (weights @ element.reshape(mesh.n_tets, 9)) / total[:, None]
    column = column.reshape(-1, 3, 3)
    column = 0.5 * (column + column.transpose(0, 2, 1))
    logger.debug(f"averaged stress over {mesh.n_columns} columns")
    return StressField(element=element, column=column)
