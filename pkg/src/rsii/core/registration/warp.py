from __future__ import annotations

from rsii.core.registration.energy import moving_coordinates
from rsii.core.registration.field import DisplacementField
from rsii.core.volume import VoxelGrid, sample_index


def warp(moving: VoxelGrid, field: DisplacementField) -> VoxelGrid:
    """
    Resample ``moving`` through ``field``: ``out(x) = moving(x + u(x))``.

    The output lives on the field's lattice, which must match ``moving``.
    """
    field.require_matches(moving)
    coords = moving_coordinates(moving, moving, field.vectors)
    return moving.with_data(sample_index(moving.data, coords))
