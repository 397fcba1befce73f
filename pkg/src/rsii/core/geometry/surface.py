from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# LocalFrame
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LocalFrame:
    """Per-vertex orthonormal frames; each array has shape (N, 3)."""

    normal: np.ndarray
    tangent1: np.ndarray
    tangent2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("normal", "tangent1", "tangent2"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValueError(f"{name} must have shape (N, 3), got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.normal.shape == self.tangent1.shape == self.tangent2.shape):
            raise ValueError("frame arrays must share one shape")

    def __len__(self) -> int:
        return self.normal.shape[0]

    def at(self, vertex: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.normal[vertex], self.tangent1[vertex], self.tangent2[vertex]

    def orthonormality_error(self) -> float:
        """Largest deviation from unit length or mutual orthogonality over all vertices."""
        n, a, b = self.normal, self.tangent1, self.tangent2
        errs = [
            np.abs(np.linalg.norm(n, axis=1) - 1.0),
            np.abs(np.linalg.norm(a, axis=1) - 1.0),
            np.abs(np.linalg.norm(b, axis=1) - 1.0),
            np.abs(np.einsum("ij,ij->i", n, a)),
            np.abs(np.einsum("ij,ij->i", n, b)),
            np.abs(np.einsum("ij,ij->i", a, b)),
        ]
        return float(max(e.max(initial=0.0) for e in errs))

    def handedness(self) -> np.ndarray:
        """``(t1 x t2) . n`` per vertex; +1 for right-handed frames."""
        return np.einsum("ij,ij->i", np.cross(self.tangent1, self.tangent2), self.normal)


# ---------------------------------------------------------------------------
# SurfaceField
# ---------------------------------------------------------------------------
UNITS = ("N/m", "1", "m/N", "mm", "Pa", "mm^2")


@dataclass(frozen=True, eq=False)
class SurfaceField:
    """
    Per-vertex scalar with a units tag.

    ``valid`` marks vertices that carry a meaningful value; masked vertices still hold a
    finite placeholder so that the values array never contains NaN.
    """

    name: str
    values: np.ndarray
    units: str
    valid: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"field {self.name!r} contains non-finite values")
        valid = (
            np.ones(vals.shape, dtype=bool)
            if self.valid is None
            else np.array(self.valid, dtype=bool).reshape(-1)
        )
        if valid.shape != vals.shape:
            raise ValueError(f"field {self.name!r}: valid mask length does not match values")
        if self.units not in UNITS:
            raise ValueError(f"field {self.name!r}: unknown units {self.units!r}")
        vals.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid", valid)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def masked_count(self) -> int:
        return int(np.count_nonzero(~self.valid))  # type: ignore[operator]

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid]

    def renamed(self, name: str) -> "SurfaceField":
        return dataclasses.replace(self, name=name)


# ---------------------------------------------------------------------------
# TriangleSurface
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class TriangleSurface:
    """
    Triangulated surface in mm.

    Triangles are counterclockwise seen from outside. ``end_rings`` holds the vertex
    indices of the two boundary loops (bottom, top) of an open tube and is empty for a
    closed surface.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    frames: LocalFrame | None = None
    curvature_radius: np.ndarray | None = None
    curvature_valid: np.ndarray | None = None
    end_rings: tuple[np.ndarray, ...] = ()

    def __post_init__(self) -> None:
        verts = np.array(self.vertices, dtype=np.float64)
        tris = np.array(self.triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError(f"vertices must have shape (N, 3), got {verts.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError(f"triangles must have shape (M, 3), got {tris.shape}")
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise ValueError("triangle indices out of range")
        verts.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(
            self, "end_rings", tuple(np.asarray(r, dtype=np.int64) for r in self.end_rings)
        )
        if self.frames is not None and len(self.frames) != len(verts):
            raise ValueError("frames do not match the vertex count")
        if self.curvature_radius is not None:
            radius = np.asarray(self.curvature_radius, dtype=np.float64)
            if radius.shape != (len(verts),):
                raise ValueError("curvature_radius does not match the vertex count")
            object.__setattr__(self, "curvature_radius", radius)
            valid = (
                np.ones(len(verts), dtype=bool)
                if self.curvature_valid is None
                else np.asarray(self.curvature_valid, dtype=bool)
            )
            object.__setattr__(self, "curvature_valid", valid)

    # -- construction helpers ---------------------------------------------------
    def with_frames(self, frames: LocalFrame) -> "TriangleSurface":
        return dataclasses.replace(self, frames=frames)

    def with_curvature(
        self, radius: np.ndarray, valid: np.ndarray | None = None
    ) -> "TriangleSurface":
        return dataclasses.replace(self, curvature_radius=radius, curvature_valid=valid)

    def with_vertices(self, vertices: np.ndarray) -> "TriangleSurface":
        """Same connectivity and rings with new positions; derived data is dropped."""
        return TriangleSurface(vertices, self.triangles, end_rings=self.end_rings)

    # -- counts -----------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    # -- topology ---------------------------------------------------------------
    @cached_property
    def _edge_data(self) -> tuple[np.ndarray, np.ndarray]:
        t = self.triangles
        half = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        undirected = np.sort(half, axis=1)
        edges, counts = np.unique(undirected, axis=0, return_counts=True)
        return edges, counts

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def edge_face_counts(self) -> np.ndarray:
        return self._edge_data[1]

    @property
    def boundary_edges(self) -> np.ndarray:
        edges, counts = self._edge_data
        return edges[counts == 1]

    @property
    def is_closed(self) -> bool:
        return self.boundary_edges.shape[0] == 0

    def euler_characteristic(self) -> int:
        return self.n_vertices - int(self.edges.shape[0]) + self.n_triangles

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def boundary_loops(self) -> list[np.ndarray]:
        """Connected components of the boundary-edge graph, as sorted vertex arrays."""
        bedges = self.boundary_edges
        if bedges.size == 0:
            return []
        graph = sparse.coo_matrix(
            (np.ones(len(bedges)), (bedges[:, 0], bedges[:, 1])),
            shape=(self.n_vertices, self.n_vertices),
        )
        _, labels = csgraph.connected_components(graph, directed=False)
        verts = np.unique(bedges)
        return [np.sort(verts[labels[verts] == lab]) for lab in np.unique(labels[verts])]

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric vertex adjacency (unit weights)."""
        e = self.edges
        n = self.n_vertices
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    # -- metrics ----------------------------------------------------------------
    def face_area_vectors(self) -> np.ndarray:
        """Per-triangle ``0.5 * (b - a) x (c - a)``: outward normal times area."""
        v = self.vertices[self.triangles]
        return 0.5 * np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    def face_areas(self) -> np.ndarray:
        return np.linalg.norm(self.face_area_vectors(), axis=1)

    def face_centers(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def vertex_areas(self) -> np.ndarray:
        """Barycentric vertex areas: one third of every incident triangle's area."""
        areas = np.repeat(self.face_areas() / 3.0, 3)
        return np.bincount(self.triangles.reshape(-1), weights=areas, minlength=self.n_vertices)

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted unit vertex normals from the triangle orientation."""
        acc = np.zeros((self.n_vertices, 3))
        fav = self.face_area_vectors()
        for corner in range(3):
            np.add.at(acc, self.triangles[:, corner], fav)
        norm = np.linalg.norm(acc, axis=1, keepdims=True)
        return acc / np.where(norm > 0, norm, 1.0)

    def signed_volume(self) -> float:
        """Enclosed volume by the divergence theorem (meaningful for closed surfaces)."""
        v = self.vertices[self.triangles]
        return float(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0)

    def mean_edge_length(self) -> float:
        e = self.edges
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean())

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def ring_vertices(self) -> np.ndarray:
        if not self.end_rings:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(self.end_rings))

    def check_field(self, values: Sequence[float] | np.ndarray, name: str = "field") -> None:
        if len(values) != self.n_vertices:
            raise ValueError(
                f"{name} has {len(values)} entries but the surface has {self.n_vertices} vertices"
            )
