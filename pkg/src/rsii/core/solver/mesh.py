"""
Layered tetrahedral wall mesh grown inward from a surface.

Node ``k * n_vertices + v`` is surface vertex ``v`` offset by
``thickness * (layers - k) / layers`` along the inward normal, so level 0 is the inner
(lumen) skin and level ``layers`` is the surface itself. Each prism between two levels is
split into three tetrahedra by sorting its triangle's vertex ids: on every side quad
between vertices ``i < j`` the diagonal joins the upper copy of ``i`` to the lower copy of
``j``. Neighbouring prisms therefore pick the same diagonal and the mesh is conforming.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rsii.core.errors import ConfigError, MeshInversionError
from rsii.core.geometry.surface import TriangleSurface
from rsii.core.solver.materials import REGION_ILT, REGION_WALL, REGIONS

logger = logging.getLogger(__name__)

DEFAULT_CAP_ANGLE_DEG = 10.0
_INVERSION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WallMesh:
    """
    :param nodes: (n_nodes, 3) positions in mm.
    :param tets: (n_tets, 4) node ids, positive orientation.
    :param node_columns: (n_vertices, layers + 1) node ids, inner skin first.
    :param inner_faces: (n_faces, 3) node ids on the lumen-side skin; their right-hand
                        normal points into the lumen.
    :param fixed_nodes: Sorted ids of clamped nodes.
    :param region_of_tet: Region code per tet (index into ``REGIONS``).
    :param tet_triangle: Surface triangle each tet's prism sits on.
    :param tet_layer: Layer (0 = innermost) of each tet.
    :param thickness: Wall thickness in mm.
    """

    nodes: np.ndarray
    tets: np.ndarray
    node_columns: np.ndarray
    inner_faces: np.ndarray
    fixed_nodes: np.ndarray
    region_of_tet: np.ndarray
    tet_triangle: np.ndarray
    tet_layer: np.ndarray
    surface_triangles: np.ndarray
    thickness: float
    layers: int

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def n_tets(self) -> int:
        return int(self.tets.shape[0])

    @property
    def n_columns(self) -> int:
        return int(self.node_columns.shape[0])

    def region_names(self) -> list[str]:
        return [REGIONS[int(c)] for c in self.region_of_tet]

    def tet_volumes(self) -> np.ndarray:
        """Signed volumes (mm^3)."""
        return tet_signed_volumes(self.nodes, self.tets)

    def total_volume(self) -> float:
        return float(self.tet_volumes().sum())

    def inner_face_area_vectors(self) -> np.ndarray:
        """Area vectors (mm^2) of ``inner_faces``, pointing into the lumen."""
        v = self.nodes[self.inner_faces]
        return 0.5 * np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    def face_use_counts(self) -> np.ndarray:
        """How many tets share each distinct triangular face (1 = skin, 2 = interior)."""
        t = self.tets
        faces = np.concatenate([t[:, [1, 2, 3]], t[:, [0, 2, 3]], t[:, [0, 1, 3]], t[:, [0, 1, 2]]])
        _, counts = np.unique(np.sort(faces, axis=1), axis=0, return_counts=True)
        return counts


def tet_signed_volumes(nodes: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = nodes[tets]
    d1, d2, d3 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]
    return np.einsum("ij,ij->i", np.cross(d1, d2), d3) / 6.0


# ---------------------------------------------------------------------------
# Construction helpers
# ---------------------------------------------------------------------------
def _prism_split(triangles: np.ndarray, n_vertices: int, level: int) -> np.ndarray:
    """Three tets per prism between ``level`` and ``level + 1``; shape (3 * M, 4)."""
    lo = level * n_vertices
    hi = (level + 1) * n_vertices
    s = np.sort(triangles, axis=1)
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    tets = np.stack(
        [
            np.stack([a + lo, b + lo, c + lo, a + hi], axis=1),
            np.stack([b + lo, c + lo, a + hi, b + hi], axis=1),
            np.stack([c + lo, a + hi, b + hi, c + hi], axis=1),
        ],
        axis=1,
    )
    # sorting an odd permutation of an outward triangle flips every tet
    first = np.argmin(triangles, axis=1)
    rows = np.arange(len(triangles))
    odd = triangles[rows, (first + 1) % 3] > triangles[rows, (first + 2) % 3]
    tets[odd] = tets[odd][:, :, [1, 0, 2, 3]]
    return tets.reshape(-1, 4)


def _cap_vertices(
    vertices: np.ndarray, axis: np.ndarray, cap_angle_deg: float
) -> np.ndarray:
    """Vertices within ``cap_angle_deg`` of either pole along ``axis`` (about the centroid)."""
    rel = vertices - vertices.mean(axis=0)
    dist = np.linalg.norm(rel, axis=1)
    cosang = np.abs(rel @ axis) / np.where(dist > 0, dist, 1.0)
    return np.flatnonzero(cosang >= math.cos(math.radians(cap_angle_deg)))


# ---------------------------------------------------------------------------
# Public operation
# ---------------------------------------------------------------------------
def build_wall_mesh(
    surface: TriangleSurface,
    thickness: float,
    layers: int,
    ilt_layers: int = 0,
    cap_angle_deg: float = DEFAULT_CAP_ANGLE_DEG,
    axis: Sequence[float] = (0.0, 0.0, 1.0),
) -> WallMesh:
    """
    Offset ``surface`` inward along its frame normals into ``layers`` prism layers.

    :param thickness: Wall thickness (mm).
    :param layers: Number of element layers through the thickness (>= 2).
    :param ilt_layers: Innermost layers tagged as thrombus.
    :param cap_angle_deg: Polar cap half-angle clamped on closed surfaces.
    :param axis: Pole direction for the caps.
    :raises MeshInversionError: If any tet has non-positive volume after the offset.
    """
    if layers < 2:
        raise ConfigError(f"layers must be >= 2, got {layers}")
    if not thickness > 0:
        raise ConfigError(f"thickness must be > 0, got {thickness}")
    if not 0 <= ilt_layers < layers:
        raise ConfigError(f"ilt_layers must lie in [0, {layers}), got {ilt_layers}")
    if surface.frames is None:
        raise ConfigError("build_wall_mesh needs a surface with local frames")

    nv = surface.n_vertices
    normal = surface.frames.normal
    depth = thickness * (layers - np.arange(layers + 1)) / layers
    nodes = (surface.vertices[None, :, :] - depth[:, None, None] * normal[None, :, :]).reshape(
        -1, 3
    )
    node_columns = np.arange(layers + 1)[None, :] * nv + np.arange(nv)[:, None]

    tris = surface.triangles
    tets = np.concatenate([_prism_split(tris, nv, k) for k in range(layers)])
    tet_triangle = np.tile(np.repeat(np.arange(len(tris)), 3), layers)
    tet_layer = np.repeat(np.arange(layers), 3 * len(tris))
    region = np.where(tet_layer < ilt_layers, REGION_ILT, REGION_WALL).astype(np.uint8)

    volumes = tet_signed_volumes(nodes, tets)
    reference = surface.mean_edge_length() ** 2 * thickness / layers
    bad = volumes <= _INVERSION_TOL * reference
    if bad.any():
        offending = np.unique(tets[bad] % nv)
        raise MeshInversionError(
            f"{int(bad.sum())} inverted tetrahedra after offsetting by {thickness} mm "
            f"({len(offending)} surface vertices affected)",
            offending,
        )

    if surface.end_rings:
        anchor = surface.ring_vertices()
    else:
        a = np.asarray(axis, dtype=np.float64)
        anchor = _cap_vertices(surface.vertices, a / np.linalg.norm(a), cap_angle_deg)
    fixed = np.sort(node_columns[anchor].reshape(-1))
    if fixed.size == 0:
        logger.warning("wall mesh has no fixed nodes; the elasticity solve will be singular")

    mesh = WallMesh(
        nodes=nodes,
        tets=tets,
        node_columns=node_columns,
        inner_faces=tris[:, ::-1].copy(),
        fixed_nodes=fixed,
        region_of_tet=region,
        tet_triangle=tet_triangle,
        tet_layer=tet_layer,
        surface_triangles=tris.copy(),
        thickness=float(thickness),
        layers=int(layers),
    )
    logger.info(
        f"wall mesh: {mesh.n_nodes} nodes, {mesh.n_tets} tets, {len(fixed)} fixed nodes, "
        f"volume {volumes.sum():.1f} mm^3"
    )
    return mesh
