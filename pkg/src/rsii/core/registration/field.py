from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from rsii.core.errors import ConfigError, GeometryMismatchError
from rsii.core.volume import VoxelGrid, load_volume, save_volume

logger = logging.getLogger(__name__)

COMPONENT_NAMES = ("ux", "uy", "uz")


# ---------------------------------------------------------------------------
# DisplacementField
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class DisplacementField:
    """
    Dense per-voxel displacement (mm) on a fixed-image lattice.

    A fixed-space point ``x`` maps to the moving-space point ``x + u(x)``.
    ``vectors`` has shape (3, nx, ny, nz).
    """

    vectors: np.ndarray
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float]

    def __post_init__(self) -> None:
        vec = np.array(self.vectors, dtype=np.float64)
        if vec.ndim != 4 or vec.shape[0] != 3:
            raise GeometryMismatchError(f"vectors must have shape (3, nx, ny, nz), got {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise ValueError("displacement field contains non-finite values")
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def zeros_like(cls, grid: VoxelGrid) -> "DisplacementField":
        return cls(np.zeros((3,) + grid.dims), grid.spacing, grid.origin)

    @classmethod
    def constant(cls, grid: VoxelGrid, vector: Sequence[float]) -> "DisplacementField":
        vec = np.broadcast_to(
            np.asarray(vector, dtype=np.float64).reshape(3, 1, 1, 1), (3,) + grid.dims
        )
        return cls(vec, grid.spacing, grid.origin)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.vectors.shape[1:])  # type: ignore[return-value]

    def component(self, axis: int) -> VoxelGrid:
        return VoxelGrid(self.vectors[axis], self.spacing, self.origin)

    def geometry_grid(self) -> VoxelGrid:
        """A zero-valued grid carrying this field's geometry."""
        return VoxelGrid(np.zeros(self.dims, dtype=np.float32), self.spacing, self.origin)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.vectors**2, axis=0))

    def rms(self) -> float:
        return float(np.sqrt(np.mean(np.sum(self.vectors**2, axis=0))))

    def require_matches(self, grid: VoxelGrid) -> None:
        if not grid.same_geometry(self, atol=1e-9):
            raise GeometryMismatchError(
                f"displacement field {self.dims}/{self.spacing}/{self.origin} does not match "
                f"grid {grid.dims}/{grid.spacing}/{grid.origin}"
            )

    # -- persistence ----------------------------------------------------------
    def save(self, directory: str | Path, prefix: str = "displacement") -> list[Path]:
        """Write three float32 MetaImage volumes ``<prefix>_ux.mhd`` etc."""
        directory = Path(directory)
        return [
            save_volume(self.component(axis), directory / f"{prefix}_{name}.mhd")
            for axis, name in enumerate(COMPONENT_NAMES)
        ]

    @classmethod
    def load(cls, directory: str | Path, prefix: str = "displacement") -> "DisplacementField":
        directory = Path(directory)
        grids = [load_volume(directory / f"{prefix}_{name}.mhd") for name in COMPONENT_NAMES]
        first = grids[0]
        for g in grids[1:]:
            first.require_same_geometry(g, what="displacement component")
        vec = np.stack([g.data.astype(np.float64) for g in grids])
        return cls(vec, first.spacing, first.origin)


# ---------------------------------------------------------------------------
# RegConfig
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RegConfig:
    """
    Registration parameters.

    :param lambda_tv: TV weight (intensity^2 / mm).
    :param pyramid_levels: Number of resolution levels (>= 1).
    :param iterations_per_level: ADMM outer-iteration cap per level.
    :param admm_penalty: ADMM penalty rho (> 0).
    :param convergence_tol: Stop when the relative energy decrease drops below this.
    :param seed: Recorded for reproducibility; the optimizer itself is deterministic.
    :param inner_steps: Preconditioned gradient steps per data-fidelity subproblem.
    :param max_rejections: Consecutive rejected ADMM iterates before a level stops.
    """

    lambda_tv: float = 2.0
    pyramid_levels: int = 3
    iterations_per_level: int = 40
    admm_penalty: float = 20.0
    convergence_tol: float = 1e-5
    seed: int = 0
    inner_steps: int = 5
    max_rejections: int = 3

    def __post_init__(self) -> None:
        if self.lambda_tv < 0:
            raise ConfigError(f"lambda_tv must be >= 0, got {self.lambda_tv}")
        if self.pyramid_levels < 1:
            raise ConfigError(f"pyramid_levels must be >= 1, got {self.pyramid_levels}")
        if self.iterations_per_level < 1:
            raise ConfigError(f"iterations_per_level must be >= 1, got {self.iterations_per_level}")
        if self.admm_penalty <= 0:
            raise ConfigError(f"admm_penalty must be > 0, got {self.admm_penalty}")
        if self.convergence_tol < 0:
            raise ConfigError(f"convergence_tol must be >= 0, got {self.convergence_tol}")
        if self.inner_steps < 1:
            raise ConfigError(f"inner_steps must be >= 1, got {self.inner_steps}")
        if self.max_rejections < 1:
            raise ConfigError(f"max_rejections must be >= 1, got {self.max_rejections}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RegConfig":
        known = {
            "lambda_tv",
            "pyramid_levels",
            "iterations_per_level",
            "admm_penalty",
            "convergence_tol",
            "seed",
            "inner_steps",
            "max_rejections",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown registration keys: {sorted(unknown)}")
        try:
            return cls(
                lambda_tv=float(data.get("lambda_tv", cls.lambda_tv)),
                pyramid_levels=int(data.get("pyramid_levels", cls.pyramid_levels)),
                iterations_per_level=int(
                    data.get("iterations_per_level", cls.iterations_per_level)
                ),
                admm_penalty=float(data.get("admm_penalty", cls.admm_penalty)),
                convergence_tol=float(data.get("convergence_tol", cls.convergence_tol)),
                seed=int(data.get("seed", cls.seed)),
                inner_steps=int(data.get("inner_steps", cls.inner_steps)),
                max_rejections=int(data.get("max_rejections", cls.max_rejections)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid registration value: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda_tv": self.lambda_tv,
            "pyramid_levels": self.pyramid_levels,
            "iterations_per_level": self.iterations_per_level,
            "admm_penalty": self.admm_penalty,
            "convergence_tol": self.convergence_tol,
            "seed": self.seed,
            "inner_steps": self.inner_steps,
            "max_rejections": self.max_rejections,
        }
