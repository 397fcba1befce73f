from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from rsii.core.errors import DegenerateFieldError
from rsii.core.geometry.surface import LocalFrame, SurfaceField

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WallDisplacement:
    """Signed normal component (outward positive) and tangential magnitude, in mm."""

    normal: SurfaceField
    tangential: SurfaceField


def normal_displacement(
    vertex_vectors: np.ndarray,
    frames: LocalFrame,
    valid: np.ndarray | None = None,
) -> WallDisplacement:
    """
    Split per-vertex displacement vectors into ``u_n = u . n`` and ``|u - u_n n|``.

    :param vertex_vectors: (N, 3) displacements in mm.
    :param valid: Optional mask carried onto both fields.
    """
    u = np.asarray(vertex_vectors, dtype=np.float64)
    if u.shape != (len(frames), 3):
        raise ValueError(
            f"displacements have shape {u.shape}, expected ({len(frames)}, 3) to match frames"
        )
    n = frames.normal
    u_n = np.einsum("ij,ij->i", u, n)
    u_t = np.linalg.norm(u - u_n[:, None] * n, axis=1)
    return WallDisplacement(
        normal=SurfaceField("displacement_normal", u_n, "mm", valid),
        tangential=SurfaceField("displacement_tangential", u_t, "mm", valid),
    )


def circumferential_strain(
    u_n: SurfaceField,
    radius: np.ndarray,
    radius_valid: np.ndarray | None = None,
) -> SurfaceField:
    """
    Hoop strain ``u_n / R`` per vertex; negative values are compressive.

    Vertices whose radius estimate is flagged (``radius_valid`` False) are masked.

    :raises DegenerateFieldError: If any radius is zero, negative or not finite.
    """
    r = np.asarray(radius, dtype=np.float64).reshape(-1)
    if r.shape != u_n.values.shape:
        raise ValueError(f"radius has {r.size} entries but u_n has {len(u_n)}")
    bad = ~np.isfinite(r) | (r <= 0)
    if bad.any():
        raise DegenerateFieldError(
            f"curvature radius must be positive; {int(bad.sum())} vertices are not"
        )
    valid = u_n.valid.copy()
    if radius_valid is not None:
        valid &= np.asarray(radius_valid, dtype=bool).reshape(-1)
    eps = u_n.values / r
    logger.debug(f"strain: median {np.median(eps[valid]) if valid.any() else 0.0:.4%}")
    return SurfaceField("strain_circ", eps, "1", valid)
