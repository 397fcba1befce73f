from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from rsii.core.errors import GeometryMismatchError, InvalidLabelError, VolumeFormatError

logger = logging.getLogger(__name__)

LABEL_BACKGROUND = 0
LABEL_WALL = 1
LABEL_LUMEN = 2
LABEL_CODES = (LABEL_BACKGROUND, LABEL_WALL, LABEL_LUMEN)


def _as_triple(values: Sequence[float], name: str) -> tuple[float, float, float]:
    vals = tuple(float(v) for v in values)
    if len(vals) != 3:
        raise VolumeFormatError(f"{name} must have 3 components, got {len(vals)}")
    return vals  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# VoxelGrid
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """
    Scalar 3D image with physical geometry.

    ``data`` is indexed ``[i, j, k]`` along x, y, z. Voxel ``(i, j, k)`` has its
    centre at ``origin + (i, j, k) * spacing`` (mm). On disk the layout is x-fastest.
    The array is stored read-only as float32.
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise VolumeFormatError(f"VoxelGrid data must be 3D, got shape {arr.shape}")
        if min(arr.shape) < 2:
            raise VolumeFormatError(f"every dimension must be >= 2, got {arr.shape}")
        spacing = _as_triple(self.spacing, "spacing")
        origin = _as_triple(self.origin, "origin")
        if min(spacing) <= 0:
            raise VolumeFormatError(f"spacing must be positive, got {spacing}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    # -- geometry -----------------------------------------------------------
    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.data.shape)  # type: ignore[return-value]

    @property
    def voxel_volume(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    @property
    def extent(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical (min, max) corner of the voxel-centre lattice."""
        lo = np.asarray(self.origin)
        hi = lo + (np.asarray(self.dims) - 1) * np.asarray(self.spacing)
        return lo, hi

    def axis_coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """1D physical coordinates of voxel centres along x, y, z."""
        return tuple(  # type: ignore[return-value]
            o + s * np.arange(n, dtype=np.float64)
            for o, s, n in zip(self.origin, self.spacing, self.dims)
        )

    def physical_mesh(self) -> np.ndarray:
        """Voxel-centre coordinates, shape (3, nx, ny, nz)."""
        return np.stack(np.meshgrid(*self.axis_coordinates(), indexing="ij"))

    def index_to_physical(self, ijk: np.ndarray) -> np.ndarray:
        ijk = np.asarray(ijk, dtype=np.float64)
        return np.asarray(self.origin) + ijk * np.asarray(self.spacing)

    def physical_to_index(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return (points - np.asarray(self.origin)) / np.asarray(self.spacing)

    def same_geometry(self, other: "VoxelGrid | object", atol: float = 0.0) -> bool:
        dims = getattr(other, "dims", None)
        spacing = getattr(other, "spacing", None)
        origin = getattr(other, "origin", None)
        if dims is None or tuple(dims) != self.dims:
            return False
        return bool(
            np.allclose(spacing, self.spacing, rtol=0.0, atol=atol)
            and np.allclose(origin, self.origin, rtol=0.0, atol=atol)
        )

    def require_same_geometry(self, other: object, what: str = "grid") -> None:
        if not self.same_geometry(other, atol=1e-9):
            raise GeometryMismatchError(
                f"{what} geometry {getattr(other, 'dims', None)}/"
                f"{getattr(other, 'spacing', None)}/{getattr(other, 'origin', None)} "
                f"does not match {self.dims}/{self.spacing}/{self.origin}"
            )

    def with_data(self, data: np.ndarray) -> "VoxelGrid":
        return VoxelGrid(data=data, spacing=self.spacing, origin=self.origin)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.origin == other.origin
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None  # type: ignore[assignment]


# ---------------------------------------------------------------------------
# LabelMap
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class LabelMap:
    """Label volume with codes 0 = background, 1 = wall, 2 = lumen."""

    grid: VoxelGrid

    def __post_init__(self) -> None:
        values = np.unique(self.grid.data)
        bad = values[~np.isin(values, LABEL_CODES)]
        if bad.size:
            raise InvalidLabelError(
                f"invalid label code(s) {bad.tolist()}; expected values in {list(LABEL_CODES)}"
            )

    @classmethod
    def from_codes(
        cls,
        codes: np.ndarray,
        spacing: Sequence[float] = (1.0, 1.0, 1.0),
        origin: Sequence[float] = (0.0, 0.0, 0.0),
    ) -> "LabelMap":
        return cls(VoxelGrid(np.asarray(codes, dtype=np.float32), tuple(spacing), tuple(origin)))

    @property
    def codes(self) -> np.ndarray:
        return self.grid.data.astype(np.uint8)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self.grid.spacing

    @property
    def origin(self) -> tuple[float, float, float]:
        return self.grid.origin

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.grid.dims

    def count(self, code: int) -> int:
        return int(np.count_nonzero(self.codes == code))

    def is_lumen_enclosed(self, open_axes: Sequence[int] = ()) -> bool:
        """
        Flood fill through non-wall voxels from the grid boundary and report whether the
        lumen stays unreached.

        :param open_axes: Axes whose two end faces are *not* used as flood seeds. Tubes cut
                          by the grid along their axis pass ``(2,)``.
        """
        codes = self.codes
        passable = codes != LABEL_WALL
        seeds = np.zeros_like(passable)
        for axis in range(3):
            if axis in open_axes:
                continue
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis] = 0
            hi[axis] = -1
            seeds[tuple(lo)] = True
            seeds[tuple(hi)] = True
        seeds &= passable
        structure = ndimage.generate_binary_structure(3, 1)
        components, _ = ndimage.label(passable, structure=structure)
        reached = np.unique(components[seeds])
        reached = reached[reached > 0]
        leaked = np.isin(components, reached) & (codes == LABEL_LUMEN)
        if leaked.any():
            logger.warning(f"lumen reachable from boundary at {int(leaked.sum())} voxels")
            return False
        return True

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.grid == other.grid

    __hash__ = None  # type: ignore[assignment]
