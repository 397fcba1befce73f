"""
Legacy ASCII VTK PolyData for surfaces and their per-vertex maps.

Floats are written with ``repr`` (shortest round-trip form), so reading a file back
restores every value exactly. Layout::

    # vtk DataFile Version 3.0
    <title>
    ASCII
    DATASET POLYDATA
    POINTS n double
    POLYGONS m 4m
    POINT_DATA n
    NORMALS normals double          (frames only)
    VECTORS tangent1 double         (frames only)
    SCALARS <name> double 1         (curvature, end rings, fields, masks)
    LOOKUP_TABLE default
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from rsii.core.geometry.surface import LocalFrame, SurfaceField, TriangleSurface

logger = logging.getLogger(__name__)

VTK_HEADER = "# vtk DataFile Version 3.0"
VALID_SUFFIX = "_valid"
_RESERVED = ("curvature_radius", "curvature_valid", "end_ring")


def _fmt(values: Iterable[float]) -> str:
    return " ".join(repr(float(v)) for v in values)


# ---------------------------------------------------------------------------
# Writer
# ---------------------------------------------------------------------------
def _scalar_block(name: str, values: np.ndarray) -> list[str]:
    lines = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines.extend(repr(float(v)) for v in values)
    return lines


def export_vtk(
    surface: TriangleSurface,
    fields: Sequence[SurfaceField],
    path: str | Path,
    title: str = "rsii surface",
) -> Path:
    """
    Write ``surface`` with its frames, curvature, end rings and ``fields`` as POINT_DATA.

    A field with masked vertices gets a companion ``<name>_valid`` 0/1 scalar.

    :raises ValueError: If a field does not have one value per vertex or names clash.
    """
    path = Path(path)
    names = [f.name for f in fields]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate field names in {names}")
    for f in fields:
        surface.check_field(f.values, f.name)
        if f.name in _RESERVED:
            raise ValueError(f"field name {f.name!r} is reserved")

    n = surface.n_vertices
    lines = [VTK_HEADER, title.replace("\n", " "), "ASCII", "DATASET POLYDATA"]
    lines.append(f"POINTS {n} double")
    lines.extend(_fmt(p) for p in surface.vertices)
    m = surface.n_triangles
    lines.append(f"POLYGONS {m} {4 * m}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in surface.triangles.tolist())
    lines.append(f"POINT_DATA {n}")

    if surface.frames is not None:
        lines.append("NORMALS normals double")
        lines.extend(_fmt(v) for v in surface.frames.normal)
        lines.append("VECTORS tangent1 double")
        lines.extend(_fmt(v) for v in surface.frames.tangent1)
    if surface.curvature_radius is not None:
        lines.extend(_scalar_block("curvature_radius", surface.curvature_radius))
        lines.extend(
            _scalar_block("curvature_valid", np.asarray(surface.curvature_valid, dtype=float))
        )
    if surface.end_rings:
        ring = np.zeros(n)
        for label, members in enumerate(surface.end_rings, start=1):
            ring[members] = label
        lines.extend(_scalar_block("end_ring", ring))
    for f in fields:
        lines.extend(_scalar_block(f.name, f.values))
        if f.masked_count:
            lines.extend(_scalar_block(f.name + VALID_SUFFIX, f.valid.astype(float)))

    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    logger.debug(f"wrote {path} ({n} points, {len(fields)} fields)")
    return path


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class VtkSurface:
    """A surface read back from :func:`export_vtk` plus its remaining scalar arrays."""

    surface: TriangleSurface
    point_data: dict[str, np.ndarray] = field(default_factory=dict)

    def surface_field(self, name: str, units: str) -> SurfaceField:
        if name not in self.point_data:
            raise KeyError(f"no point data named {name!r}; have {sorted(self.point_data)}")
        valid = self.point_data.get(name + VALID_SUFFIX)
        mask = None if valid is None else valid > 0.5
        return SurfaceField(name, self.point_data[name], units, mask)


def _take(tokens: list[str], pos: int, count: int) -> tuple[list[str], int]:
    if pos + count > len(tokens):
        raise ValueError("unexpected end of VTK file")
    return tokens[pos : pos + count], pos + count


def read_vtk(path: str | Path) -> VtkSurface:
    """Parse the subset of legacy VTK written by :func:`export_vtk`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"VTK file not found: {path}")
    lines = path.read_text(encoding="ascii").splitlines()
    if len(lines) < 4 or not lines[0].startswith("# vtk DataFile"):
        raise ValueError(f"{path} is not a legacy VTK file")
    if lines[2].strip() != "ASCII" or lines[3].strip() != "DATASET POLYDATA":
        raise ValueError(f"{path}: only ASCII POLYDATA is supported")

    tokens = " ".join(lines[4:]).split()
    pos = 0
    vertices = np.zeros((0, 3))
    triangles = np.zeros((0, 3), dtype=np.int64)
    vectors: dict[str, np.ndarray] = {}
    scalars: dict[str, np.ndarray] = {}
    n_points = 0
    while pos < len(tokens):
        key = tokens[pos]
        if key == "POINTS":
            n_points = int(tokens[pos + 1])
            raw, pos = _take(tokens, pos + 3, 3 * n_points)
            vertices = np.array(raw, dtype=np.float64).reshape(n_points, 3)
        elif key == "POLYGONS":
            count, size = int(tokens[pos + 1]), int(tokens[pos + 2])
            raw, pos = _take(tokens, pos + 3, size)
            cells = np.array(raw, dtype=np.int64).reshape(count, -1)
            if cells.shape[1] != 4 or np.any(cells[:, 0] != 3):
                raise ValueError(f"{path}: only triangle polygons are supported")
            triangles = cells[:, 1:]
        elif key == "POINT_DATA":
            if int(tokens[pos + 1]) != n_points:
                raise ValueError(f"{path}: POINT_DATA count does not match POINTS")
            pos += 2
        elif key in ("NORMALS", "VECTORS"):
            name = tokens[pos + 1]
            raw, pos = _take(tokens, pos + 3, 3 * n_points)
            vectors[name] = np.array(raw, dtype=np.float64).reshape(n_points, 3)
        elif key == "SCALARS":
            name = tokens[pos + 1]
            pos += 4 if tokens[pos + 3] == "1" else 3
            if tokens[pos] == "LOOKUP_TABLE":
                pos += 2
            raw, pos = _take(tokens, pos, n_points)
            scalars[name] = np.array(raw, dtype=np.float64)
        else:
            raise ValueError(f"{path}: unsupported VTK keyword {key!r}")

    frames = None
    if "normals" in vectors and "tangent1" in vectors:
        normal, t1 = vectors["normals"], vectors["tangent1"]
        frames = LocalFrame(normal=normal, tangent1=t1, tangent2=np.cross(normal, t1))
    rings: tuple[np.ndarray, ...] = ()
    ring = scalars.pop("end_ring", None)
    if ring is not None:
        rings = tuple(np.flatnonzero(ring == label) for label in (1.0, 2.0))
    radius = scalars.pop("curvature_radius", None)
    radius_valid = scalars.pop("curvature_valid", None)
    surface = TriangleSurface(
        vertices,
        triangles,
        frames=frames,
        curvature_radius=radius,
        curvature_valid=None if radius_valid is None else radius_valid > 0.5,
        end_rings=rings,
    )
    return VtkSurface(surface=surface, point_data=scalars)
