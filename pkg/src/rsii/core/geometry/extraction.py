"""Label map to triangulated wall surface."""
from __future__ import annotations

import logging
from collections import deque

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph
from skimage import measure

from rsii.core.errors import SurfaceExtractionError
from rsii.core.geometry.surface import TriangleSurface
from rsii.core.volume import LabelMap

logger = logging.getLogger(__name__)

WELD_TOLERANCE_MM = 1e-6


# ---------------------------------------------------------------------------
# Mesh clean-up helpers
# ---------------------------------------------------------------------------
def weld_vertices(
    vertices: np.ndarray, triangles: np.ndarray, tol: float = WELD_TOLERANCE_MM
) -> tuple[np.ndarray, np.ndarray]:
    """Merge vertices closer than ``tol`` (grid-snapped), drop degenerate and repeated faces."""
    keys = np.round(vertices / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    welded = vertices[first[order]]
    tris = rank[inverse[triangles]]

    ok = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tris = tris[ok]
    _, keep = np.unique(np.sort(tris, axis=1), axis=0, return_index=True)
    tris = tris[np.sort(keep)]

    used = np.unique(tris)
    remap = -np.ones(len(welded), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return welded[used], remap[tris]


def largest_component(
    vertices: np.ndarray, triangles: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    n = len(vertices)
    rows = np.concatenate([triangles[:, 0], triangles[:, 1], triangles[:, 2]])
    cols = np.concatenate([triangles[:, 1], triangles[:, 2], triangles[:, 0]])
    graph = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    count, labels = csgraph.connected_components(graph, directed=False)
    if count == 1:
        return vertices, triangles
    sizes = np.bincount(labels[triangles[:, 0]], minlength=count)
    keep_label = int(np.argmax(sizes))
    logger.warning(
        f"surface has {count} components; keeping the largest ({sizes[keep_label]} faces)"
    )
    tris = triangles[labels[triangles[:, 0]] == keep_label]
    used = np.unique(tris)
    remap = -np.ones(n, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return vertices[used], remap[tris]


def _check_manifold(triangles: np.ndarray) -> None:
    half = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    _, counts = np.unique(np.sort(half, axis=1), axis=0, return_counts=True)
    bad = int(np.count_nonzero(counts > 2))
    if bad:
        raise SurfaceExtractionError(f"non-manifold surface: {bad} edges shared by > 2 triangles")


def orient_consistently(triangles: np.ndarray) -> np.ndarray:
    """Flip triangles so that every interior edge is traversed once in each direction."""
    half = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    if len(np.unique(half, axis=0)) == len(half):
        return triangles

    tris = triangles.copy()
    m = len(tris)
    face_of_half = np.tile(np.arange(m), 3)
    undirected = np.sort(half, axis=1)
    order = np.lexsort((undirected[:, 1], undirected[:, 0]))
    neighbours: list[list[int]] = [[] for _ in range(m)]
    for a, b in zip(order[:-1], order[1:]):
        if np.array_equal(undirected[a], undirected[b]):
            fa, fb = int(face_of_half[a]), int(face_of_half[b])
            neighbours[fa].append(fb)
            neighbours[fb].append(fa)

    def directed(t: np.ndarray) -> set[tuple[int, int]]:
        return {(int(t[0]), int(t[1])), (int(t[1]), int(t[2])), (int(t[2]), int(t[0]))}

    seen = np.zeros(m, dtype=bool)
    flipped = 0
    for start in range(m):
        if seen[start]:
            continue
        seen[start] = True
        queue = deque([start])
        while queue:
            f = queue.popleft()
            mine = directed(tris[f])
            for g in neighbours[f]:
                if seen[g]:
                    continue
                if mine & directed(tris[g]):
                    tris[g] = tris[g][::-1]
                    flipped += 1
                seen[g] = True
                queue.append(g)
    logger.debug(f"re-oriented {flipped} triangles")
    return tris


def orient_outward(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Flip all triangles if their normals point towards the vertex centroid on balance."""
    v = vertices[triangles]
    area_vec = 0.5 * np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    offset = v.mean(axis=1) - vertices.mean(axis=0)
    if float(np.einsum("ij,ij->", area_vec, offset)) < 0:
        return triangles[:, ::-1].copy()
    return triangles


def detect_end_rings(
    vertices: np.ndarray, boundary: np.ndarray, axis: int, tolerance: float
) -> tuple[np.ndarray, ...]:
    """Boundary vertices within ``tolerance`` of the lowest / highest coordinate along ``axis``."""
    if boundary.size == 0:
        return ()
    coord = vertices[:, axis]
    lo, hi = coord.min(), coord.max()
    bottom = boundary[coord[boundary] <= lo + tolerance]
    top = boundary[coord[boundary] >= hi - tolerance]
    stray = len(boundary) - len(bottom) - len(top)
    if stray > 0:
        logger.warning(f"{stray} boundary vertices lie away from the end slabs")
    return (np.sort(bottom), np.sort(top))


# ---------------------------------------------------------------------------
# Public operation
# ---------------------------------------------------------------------------
def extract_surface(
    labels: LabelMap,
    label_code: int = 1,
    iso: float = 0.5,
    smoothing_sigma_voxels: float = 1.0,
    axis: int = 2,
) -> TriangleSurface:
    """
    Marching-cubes surface of the region ``labels >= label_code``.

    Codes are nested (lumen inside wall), so ``label_code=1`` yields the outer vessel
    boundary and ``label_code=2`` the lumen boundary. The indicator is Gaussian-smoothed
    (``smoothing_sigma_voxels``) before extraction at ``iso``. Vertices are returned in
    physical mm, welded, oriented outward, with end rings detected along ``axis``.
    """
    codes = labels.codes
    indicator = (codes >= label_code).astype(np.float64)
    if not indicator.any():
        raise SurfaceExtractionError(f"label code {label_code} is absent from the label map")
    if indicator.all():
        raise SurfaceExtractionError(f"label code {label_code} fills the whole grid")

    if smoothing_sigma_voxels > 0:
        indicator = ndimage.gaussian_filter(indicator, sigma=smoothing_sigma_voxels, mode="nearest")

    try:
        verts, faces, _normals, _values = measure.marching_cubes(
            indicator, level=iso, spacing=labels.spacing, allow_degenerate=False
        )
    except (ValueError, RuntimeError) as exc:
        raise SurfaceExtractionError(f"marching cubes failed: {exc}") from exc
    verts = verts.astype(np.float64) + np.asarray(labels.origin)
    faces = faces.astype(np.int64)

    verts, faces = weld_vertices(verts, faces)
    if len(faces) == 0:
        raise SurfaceExtractionError("isosurface is empty after welding")
    _check_manifold(faces)
    verts, faces = largest_component(verts, faces)
    faces = orient_consistently(faces)
    faces = orient_outward(verts, faces)

    surface = TriangleSurface(verts, faces)
    rings = detect_end_rings(
        verts, surface.boundary_vertices(), axis, tolerance=0.5 * labels.spacing[axis]
    )
    surface = TriangleSurface(verts, faces, end_rings=rings)
    logger.info(
        f"extracted surface for code {label_code}: {surface.n_vertices} vertices, "
        f"{surface.n_triangles} triangles, {len(surface.boundary_loops())} boundary loops"
    )
    return surface
