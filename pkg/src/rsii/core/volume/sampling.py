"""Trilinear sampling with edge clamping, in physical or index coordinates."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from rsii.core.volume.grid import VoxelGrid


def sample_index(array: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """
    Trilinear interpolation of ``array`` at fractional index coordinates.

    :param array: 3D array.
    :param coords: Index coordinates, shape (3, ...). Values outside the lattice are
                   clamped to the nearest edge.
    :return: float64 samples of shape ``coords.shape[1:]``.
    """
    coords = np.asarray(coords, dtype=np.float64)
    out_shape = coords.shape[1:]
    flat = coords.reshape(3, -1)
    vals = ndimage.map_coordinates(
        np.asarray(array, dtype=np.float64), flat, order=1, mode="nearest", prefilter=False
    )
    return vals.reshape(out_shape)


def sample_index_gradient(array: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """
    Gradient of the trilinear interpolant with respect to index coordinates.

    Components along an axis where the coordinate is clamped are zero.

    :return: Array of shape (3, ...) matching ``coords``.
    """
    arr = np.asarray(array, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.float64)
    out_shape = coords.shape[1:]
    c = coords.reshape(3, -1)

    base = []
    frac = []
    inside = []
    for axis in range(3):
        n = arr.shape[axis]
        ci = c[axis]
        inside.append((ci >= 0.0) & (ci <= n - 1))
        cc = np.clip(ci, 0.0, n - 1)
        i0 = np.minimum(np.floor(cc).astype(np.intp), n - 2)
        base.append(i0)
        frac.append(cc - i0)

    (i0, j0, k0), (tx, ty, tz) = base, frac
    v = {}
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                v[di, dj, dk] = arr[i0 + di, j0 + dj, k0 + dk]

    def lerp(a, b, t):
        return a + (b - a) * t

    # d/dx: difference of the two x-faces, bilinear in y, z
    gx = lerp(
        lerp(v[1, 0, 0] - v[0, 0, 0], v[1, 1, 0] - v[0, 1, 0], ty),
        lerp(v[1, 0, 1] - v[0, 0, 1], v[1, 1, 1] - v[0, 1, 1], ty),
        tz,
    )
    gy = lerp(
        lerp(v[0, 1, 0] - v[0, 0, 0], v[1, 1, 0] - v[1, 0, 0], tx),
        lerp(v[0, 1, 1] - v[0, 0, 1], v[1, 1, 1] - v[1, 0, 1], tx),
        tz,
    )
    gz = lerp(
        lerp(v[0, 0, 1] - v[0, 0, 0], v[1, 0, 1] - v[1, 0, 0], tx),
        lerp(v[0, 1, 1] - v[0, 1, 0], v[1, 1, 1] - v[1, 1, 0], tx),
        ty,
    )
    grad = np.stack([gx * inside[0], gy * inside[1], gz * inside[2]])
    return grad.reshape((3,) + out_shape)


def sample_points(grid: VoxelGrid, points: np.ndarray) -> np.ndarray:
    """Sample ``grid`` at physical points of shape (N, 3); returns (N,) float64."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    idx = grid.physical_to_index(pts).T
    return sample_index(grid.data, idx)


def sample_trilinear(grid: VoxelGrid, point: np.ndarray) -> float:
    """
    Trilinear value of ``grid`` at one physical point (mm).

    Out-of-bounds points take the value at the nearest edge.
    """
    return float(sample_points(grid, np.asarray(point, dtype=np.float64).reshape(1, 3))[0])
