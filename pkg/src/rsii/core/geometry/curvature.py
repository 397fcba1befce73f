"""
Robust local radius of curvature by MLESAC model fitting.

Two models are available:

``sphere``
    4-point circumsphere samples in the neighbourhood ball. On a tube this measures the
    mean-curvature radius (about twice the tube radius).
``circumferential``
    3-point circle samples among neighbours in the thin slab spanned by the normal and
    the circumferential direction ``axis x n``; this is the hoop radius of a vessel.

Both score samples by the truncated squared residual ``sum(min(e^2, tol^2))``, refine
the best sample by algebraic least squares on its inliers, and clamp the radius to
``[0.5, 100] * neighborhood_radius``. Sampling uses ``default_rng([seed, vertex])`` on
index-sorted neighbours, so results do not depend on vertex traversal order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from rsii.core.errors import ConfigError, DegenerateNeighborhoodError
from rsii.core.geometry.surface import TriangleSurface

logger = logging.getLogger(__name__)

MIN_NEIGHBOURS = 10
MIN_SLAB_POINTS = 5
CLAMP_LOW = 0.5
CLAMP_HIGH = 100.0
DEFAULT_RADIUS_FACTOR = 8.0
MODELS = ("sphere", "circumferential")


# ---------------------------------------------------------------------------
# Public model
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MlesacParams:
    trials: int = 200
    inlier_tol: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"mlesac trials must be >= 1, got {self.trials}")
        if self.inlier_tol <= 0:
            raise ConfigError(f"mlesac inlier_tol must be > 0, got {self.inlier_tol}")


@dataclass(frozen=True)
class CurvatureEstimate:
    radius: float
    near_flat: bool = False
    clamped: bool = False
    n_neighbours: int = 0
    n_inliers: int = 0

    @property
    def valid(self) -> bool:
        return not (self.near_flat or self.clamped)


# ---------------------------------------------------------------------------
# Model fits (points are centred on the query vertex)
# ---------------------------------------------------------------------------
def fit_sphere_lsq(points: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Algebraic least-squares sphere ``|p|^2 = 2 p.c + d``; None if rank-deficient."""
    a = np.hstack([2.0 * points, np.ones((len(points), 1))])
    b = np.sum(points**2, axis=1)
    sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 4:
        return None
    centre = sol[:3]
    r2 = sol[3] + centre @ centre
    if r2 <= 0:
        return None
    return centre, float(np.sqrt(r2))


def fit_circle_lsq(points: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Algebraic least-squares (Kasa) circle in 2D; None if rank-deficient."""
    a = np.hstack([2.0 * points, np.ones((len(points), 1))])
    b = np.sum(points**2, axis=1)
    sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 3:
        return None
    centre = sol[:2]
    r2 = sol[2] + centre @ centre
    if r2 <= 0:
        return None
    return centre, float(np.sqrt(r2))


def _sample_models(
    points: np.ndarray, samples: np.ndarray, cond_tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """
    Exact sphere/circle through each sample (rows of ``samples`` index ``points``).

    :return: ``(centres, radii)`` for the non-degenerate samples only.
    """
    dim = points.shape[1]
    sel = points[samples]
    a = np.concatenate([2.0 * sel, np.ones(sel.shape[:2] + (1,))], axis=2)
    b = np.sum(sel**2, axis=2)
    det = np.abs(np.linalg.det(a))
    ok = det > cond_tol
    if not ok.any():
        return np.zeros((0, dim)), np.zeros(0)
    sol = np.linalg.solve(a[ok], b[ok][..., None])[..., 0]
    centres = sol[:, :dim]
    r2 = sol[:, dim] + np.sum(centres**2, axis=1)
    good = r2 > 0
    return centres[good], np.sqrt(r2[good])


def mlesac_fit(
    points: np.ndarray,
    sample_size: int,
    params: MlesacParams,
    rng: np.random.Generator,
    scale: float,
) -> tuple[float | None, int]:
    """
    MLESAC sphere (3D points) or circle (2D points) radius.

    :param scale: Length scale of the neighbourhood, used for the degeneracy threshold.
    :return: ``(radius or None if every sample was degenerate, inlier count)``.
    """
    m = len(points)
    samples = np.argsort(rng.random((params.trials, m)), axis=1)[:, :sample_size]
    dim = points.shape[1]
    # |det| is 48 * tetrahedron volume (3D) or 8 * triangle area (2D)
    cond_tol = (48.0 if dim == 3 else 8.0) * 1e-9 * scale**dim
    centres, radii = _sample_models(points, samples, cond_tol)
    if len(radii) == 0:
        return None, 0

    tol2 = params.inlier_tol**2
    dist = np.linalg.norm(points[None, :, :] - centres[:, None, :], axis=2)
    resid2 = (dist - radii[:, None]) ** 2
    cost = np.minimum(resid2, tol2).sum(axis=1)
    best = int(np.argmin(cost))
    inliers = resid2[best] < tol2

    fit = fit_sphere_lsq if dim == 3 else fit_circle_lsq
    refined = fit(points[inliers]) if inliers.sum() > sample_size else None
    if refined is None:
        return float(radii[best]), int(inliers.sum())
    return refined[1], int(inliers.sum())


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------
def default_neighborhood_radius(surface: TriangleSurface) -> float:
    return DEFAULT_RADIUS_FACTOR * surface.mean_edge_length()


def _circumferential_points(
    local: np.ndarray, normal: np.ndarray, axis: np.ndarray, slab: float
) -> np.ndarray | None:
    circ = np.cross(axis, normal)
    norm = np.linalg.norm(circ)
    if norm < 0.1:
        return None
    circ /= norm
    binormal = np.cross(normal, circ)
    in_slab = np.abs(local @ binormal) <= slab
    return np.stack([local[in_slab] @ circ, local[in_slab] @ normal], axis=1)


def curvature_radius(
    surface: TriangleSurface,
    vertex: int,
    neighborhood_radius: float,
    mlesac: MlesacParams | None = None,
    model: str = "sphere",
    axis: Sequence[float] | None = None,
    neighbours: Sequence[int] | None = None,
    slab_half_width: float | None = None,
) -> CurvatureEstimate:
    """
    Local radius of curvature (mm, always positive) at ``vertex``.

    :param neighborhood_radius: Ball radius (mm) of the fitted neighbourhood.
    :param mlesac: Trials, inlier tolerance (mm) and seed.
    :param model: ``"sphere"`` or ``"circumferential"`` (needs ``axis`` and frames).
    :param neighbours: Precomputed ball query result for ``vertex``.
    :param slab_half_width: Half width (mm) of the circumferential slab; defaults to
                            0.75 x the mean edge length.
    """
    if model not in MODELS:
        raise ConfigError(f"unknown curvature model {model!r}; expected one of {MODELS}")
    if neighborhood_radius <= 0:
        raise ConfigError(f"neighborhood_radius must be > 0, got {neighborhood_radius}")
    params = mlesac or MlesacParams()

    if neighbours is None:
        tree = cKDTree(surface.vertices)
        neighbours = tree.query_ball_point(surface.vertices[vertex], neighborhood_radius)
    idx = np.sort(np.asarray(neighbours, dtype=np.int64))
    if len(idx) < MIN_NEIGHBOURS:
        raise DegenerateNeighborhoodError(
            f"vertex {vertex}: {len(idx)} neighbours within {neighborhood_radius:.3f} mm "
            f"(need >= {MIN_NEIGHBOURS})"
        )

    local = surface.vertices[idx] - surface.vertices[vertex]
    rng = np.random.default_rng([params.seed, int(vertex)])
    lo, hi = CLAMP_LOW * neighborhood_radius, CLAMP_HIGH * neighborhood_radius

    points, sample_size = local, 4
    if model == "circumferential":
        if surface.frames is None or axis is None:
            raise ConfigError("circumferential curvature needs frames and an axis")
        a = np.asarray(axis, dtype=np.float64)
        a = a / np.linalg.norm(a)
        slab = slab_half_width or 0.75 * surface.mean_edge_length()
        planar = _circumferential_points(local, surface.frames.normal[vertex], a, slab)
        if planar is not None and len(planar) >= MIN_SLAB_POINTS:
            points, sample_size = planar, 3

    radius, inliers = mlesac_fit(points, sample_size, params, rng, neighborhood_radius)
    if radius is None or radius > hi:
        return CurvatureEstimate(hi, near_flat=True, clamped=True, n_neighbours=len(idx))
    if radius < lo:
        return CurvatureEstimate(lo, clamped=True, n_neighbours=len(idx), n_inliers=inliers)
    return CurvatureEstimate(radius, n_neighbours=len(idx), n_inliers=inliers)


def estimate_curvature(
    surface: TriangleSurface,
    neighborhood_radius: float | None = None,
    mlesac: MlesacParams | None = None,
    model: str = "sphere",
    axis: Sequence[float] | None = None,
) -> TriangleSurface:
    """
    Run :func:`curvature_radius` at every vertex.

    Vertices whose estimate is clamped, near-flat or lacks neighbours are flagged invalid
    in ``curvature_valid`` (their radius is the clamp value or the neighbourhood radius).
    """
    radius_mm = neighborhood_radius or default_neighborhood_radius(surface)
    tree = cKDTree(surface.vertices)
    balls = tree.query_ball_point(surface.vertices, radius_mm)
    slab = 0.75 * surface.mean_edge_length()

    radii = np.empty(surface.n_vertices)
    valid = np.ones(surface.n_vertices, dtype=bool)
    for v in range(surface.n_vertices):
        try:
            est = curvature_radius(
                surface,
                v,
                radius_mm,
                mlesac,
                model=model,
                axis=axis,
                neighbours=balls[v],
                slab_half_width=slab,
            )
        except DegenerateNeighborhoodError as exc:
            logger.debug(str(exc))
            radii[v] = radius_mm
            valid[v] = False
            continue
        radii[v] = est.radius
        valid[v] = est.valid

    n_bad = int(np.count_nonzero(~valid))
    if n_bad:
        logger.warning(f"curvature flagged at {n_bad}/{surface.n_vertices} vertices")
    median = float(np.median(radii[valid])) if valid.any() else float("nan")
    logger.info(f"curvature ({model}, r={radius_mm:.2f} mm): median radius {median:.3f} mm")
    return surface.with_curvature(radii, valid)
