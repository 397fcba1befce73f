"""
Per-vertex local frames from k-nearest-neighbour PCA.

The normal is the covariance eigenvector with the smallest eigenvalue (local plane fit).
Its sign follows the area-weighted triangle normal, which is outward because extracted
surfaces are oriented consistently.
"""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from rsii.core.errors import ConfigError, DegenerateNeighborhoodError
from rsii.core.geometry.surface import LocalFrame, TriangleSurface

logger = logging.getLogger(__name__)

_RANK_TOL = 1e-10
_AXIS_PARALLEL_TOL = 0.1


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def pca_normals(
    points: np.ndarray, k: int, sign_reference: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Plane-fit normals of a point cloud.

    :return: ``(normals, major_axis, eigenvalues)``; eigenvalues ascending, shape (N, 3).
    """
    k = min(k, len(points))
    tree = cKDTree(points)
    _, idx = tree.query(points, k=k)
    neighbours = points[idx]
    centred = neighbours - neighbours.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centred, centred) / max(k - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)

    scale = np.maximum(eigvals[:, 2], np.finfo(float).tiny)
    degenerate = eigvals[:, 1] <= _RANK_TOL * scale
    if degenerate.any():
        bad = np.flatnonzero(degenerate)
        raise DegenerateNeighborhoodError(
            f"rank-deficient neighbourhood covariance at {len(bad)} vertices "
            f"(first: {bad[:5].tolist()})"
        )

    normals = eigvecs[:, :, 0]
    major = eigvecs[:, :, 2]
    if sign_reference is not None:
        flip = np.einsum("ij,ij->i", normals, sign_reference) < 0
        normals = np.where(flip[:, None], -normals, normals)
    return normals, major, eigvals


def local_frames(
    surface: TriangleSurface,
    neighborhood_k: int = 16,
    axis: Sequence[float] | None = None,
) -> TriangleSurface:
    """
    Populate ``surface.frames``.

    :param neighborhood_k: Neighbours used for the plane fit (>= 6).
    :param axis: Optional vessel axis. When given, ``tangent1`` is the circumferential
                 direction ``axis x n`` wherever that is well defined; elsewhere it is the
                 in-plane principal direction of the neighbourhood.
    :return: A new surface carrying the frames.
    """
    if neighborhood_k < 6:
        raise ConfigError(f"neighborhood_k must be >= 6, got {neighborhood_k}")
    if surface.n_vertices < neighborhood_k:
        raise DegenerateNeighborhoodError(
            f"surface has {surface.n_vertices} vertices, fewer than neighborhood_k={neighborhood_k}"
        )

    reference = surface.vertex_normals()
    normals, major, _ = pca_normals(surface.vertices, neighborhood_k, sign_reference=reference)
    normals = _normalize(normals)

    t1 = major - np.einsum("ij,ij->i", major, normals)[:, None] * normals
    if axis is not None:
        a = np.asarray(axis, dtype=np.float64)
        a = a / np.linalg.norm(a)
        circ = np.cross(a[None, :], normals)
        usable = np.linalg.norm(circ, axis=1) > _AXIS_PARALLEL_TOL
        t1 = np.where(usable[:, None], circ, t1)
    t1 = _normalize(t1 - np.einsum("ij,ij->i", t1, normals)[:, None] * normals)
    t2 = np.cross(normals, t1)

    frames = LocalFrame(normal=normals, tangent1=t1, tangent2=t2)
    logger.debug(
        f"frames for {surface.n_vertices} vertices (k={neighborhood_k}); "
        f"orthonormality error {frames.orthonormality_error():.2e}"
    )
    return surface.with_frames(frames)
