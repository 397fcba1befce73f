"""Gaussian image pyramid and coarse-to-fine field transfer."""
from __future__ import annotations

import logging

import numpy as np
from scipy import ndimage

from rsii.core.volume import VoxelGrid, sample_index

logger = logging.getLogger(__name__)

MIN_LEVEL_DIM = 4


def downsample(grid: VoxelGrid, sigma_voxels: float = 1.0) -> VoxelGrid:
    """Gaussian prefilter (``sigma_voxels``) then keep every second voxel; origin is kept."""
    smoothed = ndimage.gaussian_filter(
        grid.data.astype(np.float64), sigma=sigma_voxels, mode="nearest"
    )
    return VoxelGrid(
        smoothed[::2, ::2, ::2],
        spacing=tuple(2.0 * s for s in grid.spacing),
        origin=grid.origin,
    )


def usable_levels(grid: VoxelGrid, requested: int) -> int:
    """Largest level count <= ``requested`` whose coarsest grid keeps every dim >= MIN_LEVEL_DIM."""
    levels = 1
    dims = np.asarray(grid.dims)
    while levels < requested:
        dims = (dims + 1) // 2
        if dims.min() < MIN_LEVEL_DIM:
            break
        levels += 1
    if levels < requested:
        logger.warning(f"pyramid reduced from {requested} to {levels} levels for dims {grid.dims}")
    return levels


def build_pyramid(grid: VoxelGrid, levels: int) -> list[VoxelGrid]:
    """Finest first."""
    pyramid = [grid]
    for _ in range(levels - 1):
        pyramid.append(downsample(pyramid[-1]))
    return pyramid


def upsample_field(u: np.ndarray, coarse: VoxelGrid, fine: VoxelGrid) -> np.ndarray:
    """Trilinearly resample a (3, ...) field from ``coarse`` onto ``fine`` voxel centres."""
    coords = np.stack(np.meshgrid(*fine.axis_coordinates(), indexing="ij"))
    for axis in range(3):
        coords[axis] = (coords[axis] - coarse.origin[axis]) / coarse.spacing[axis]
    return np.stack([sample_index(u[c], coords) for c in range(3)])
