from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from rsii.core.geometry.surface import TriangleSurface
from rsii.core.registration.field import DisplacementField
from rsii.core.volume import sample_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class VertexDisplacements:
    """Displacement vectors (mm) at surface vertices; ``outside`` marks clamped samples."""

    vectors: np.ndarray
    outside: np.ndarray

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def outside_count(self) -> int:
        return int(np.count_nonzero(self.outside))


def interpolate_at_vertices(
    field: DisplacementField, surface: TriangleSurface
) -> VertexDisplacements:
    """
    Trilinear interpolation of each field component at the surface vertices.

    Vertices beyond the voxel-centre lattice take the nearest-edge value and are
    flagged in ``outside``.
    """
    grid = field.geometry_grid()
    idx = grid.physical_to_index(surface.vertices)
    upper = np.asarray(field.dims, dtype=np.float64) - 1.0
    outside = np.any((idx < -1e-9) | (idx > upper + 1e-9), axis=1)

    coords = idx.T
    vectors = np.stack([sample_index(field.vectors[c], coords) for c in range(3)], axis=1)
    if outside.any():
        logger.warning(
            f"{int(outside.sum())}/{surface.n_vertices} vertices lie outside the displacement "
            "field and were clamped to its edge"
        )
    return VertexDisplacements(vectors=vectors, outside=outside)
