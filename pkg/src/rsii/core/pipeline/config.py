"""
Typed pipeline configuration built from the merged JSON dictionary.

Units follow the clinical convention at this boundary: pressure in kPa, lengths in mm.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from rsii.core.errors import ConfigError
from rsii.core.geometry.curvature import MODELS, MlesacParams
from rsii.core.registration.field import RegConfig
from rsii.core.solver.materials import Material, default_materials

PHANTOM_SHAPES = ("cylinder", "sphere", "fusiform")


def _check_keys(section: str, data: Mapping[str, Any], known: set[str]) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{section} must be a JSON object, got {type(data).__name__}")
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")


def _flag(section: str, data: Mapping[str, Any], key: str, default: bool) -> bool:
    value = data.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{section}.{key} must be true or false, got {value!r}")
    return value


def _positive(section: str, **values: float | None) -> None:
    for name, value in values.items():
        if value is None:
            continue
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ConfigError(f"{section}.{name} must be positive, got {value!r}")


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class InputPaths:
    fixed: str | None = None
    moving: str | None = None
    labels: str | None = None

    @property
    def complete(self) -> bool:
        return all((self.fixed, self.moving, self.labels))

    @property
    def any(self) -> bool:
        return any((self.fixed, self.moving, self.labels))

    def missing_files(self) -> list[str]:
        return [p for p in (self.fixed, self.moving, self.labels) if p and not Path(p).exists()]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "InputPaths":
        _check_keys("inputs", data, {"fixed", "moving", "labels"})
        return cls(**{k: (None if v is None else str(v)) for k, v in data.items()})


@dataclass(frozen=True)
class PhantomSpec:
    """Phantom shape plus the keyword arguments of its generator."""

    shape: str = "cylinder"
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.shape not in PHANTOM_SHAPES:
            raise ConfigError(f"unknown phantom shape {self.shape!r}; expected {PHANTOM_SHAPES}")

    def to_dict(self) -> dict[str, Any]:
        return {"shape": self.shape, **self.params}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PhantomSpec":
        data = dict(data)
        shape = data.pop("shape", "cylinder")
        return cls(shape=shape, params=data)


@dataclass(frozen=True)
class GeometryParams:
    label_code: int = 1
    iso: float = 0.5
    smoothing_sigma_voxels: float = 1.0
    fairing_iterations: int = 10
    neighborhood_k: int = 16
    neighborhood_radius_mm: float | None = None
    curvature_model: str = "circumferential"
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    mlesac: MlesacParams = field(default_factory=MlesacParams)

    def __post_init__(self) -> None:
        if self.label_code not in (1, 2):
            raise ConfigError(f"geometry.label_code must be 1 or 2, got {self.label_code}")
        if not 0.0 < self.iso < 1.0:
            raise ConfigError(f"geometry.iso must lie in (0, 1), got {self.iso}")
        if self.fairing_iterations < 0:
            raise ConfigError("geometry.fairing_iterations must be >= 0")
        if self.neighborhood_k < 6:
            raise ConfigError(f"geometry.neighborhood_k must be >= 6, got {self.neighborhood_k}")
        if self.curvature_model not in MODELS:
            raise ConfigError(f"geometry.curvature_model must be one of {MODELS}")
        _positive("geometry", neighborhood_radius_mm=self.neighborhood_radius_mm)
        if len(self.axis) != 3 or not any(self.axis):
            raise ConfigError(f"geometry.axis must be a non-zero 3-vector, got {self.axis}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "label_code": self.label_code,
            "iso": self.iso,
            "smoothing_sigma_voxels": self.smoothing_sigma_voxels,
            "fairing_iterations": self.fairing_iterations,
            "neighborhood_k": self.neighborhood_k,
            "neighborhood_radius_mm": self.neighborhood_radius_mm,
            "curvature_model": self.curvature_model,
            "axis": list(self.axis),
            "mlesac": {
                "trials": self.mlesac.trials,
                "inlier_tol": self.mlesac.inlier_tol,
                "seed": self.mlesac.seed,
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeometryParams":
        _check_keys("geometry", data, set(cls().to_dict()))
        mlesac = dict(data.get("mlesac") or {})
        _check_keys("geometry.mlesac", mlesac, {"trials", "inlier_tol", "seed"})
        radius = data.get("neighborhood_radius_mm")
        try:
            values = {
                "label_code": int(data.get("label_code", 1)),
                "iso": float(data.get("iso", 0.5)),
                "smoothing_sigma_voxels": float(data.get("smoothing_sigma_voxels", 1.0)),
                "fairing_iterations": int(data.get("fairing_iterations", 10)),
                "neighborhood_k": int(data.get("neighborhood_k", 16)),
                "neighborhood_radius_mm": None if radius is None else float(radius),
                "curvature_model": str(data.get("curvature_model", "circumferential")),
                "axis": tuple(float(a) for a in data.get("axis", (0.0, 0.0, 1.0))),
            }
            mlesac_params = MlesacParams(
                trials=int(mlesac.get("trials", 200)),
                inlier_tol=float(mlesac.get("inlier_tol", 0.3)),
                seed=int(mlesac.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid geometry value: {exc}") from exc
        return cls(mlesac=mlesac_params, **values)


@dataclass(frozen=True)
class SolverParams:
    pressure_kpa: float = 13.0
    wall_thickness_mm: float = 1.5
    layers: int = 2
    youngs_modulus_pa: float = 100e9
    poisson_ratio: float = 0.3
    ilt_layers: int = 0
    ilt_compliance_ratio: float = 20.0
    cap_angle_deg: float = 10.0

    def __post_init__(self) -> None:
        _positive(
            "solver",
            pressure_kpa=self.pressure_kpa,
            wall_thickness_mm=self.wall_thickness_mm,
            youngs_modulus_pa=self.youngs_modulus_pa,
            ilt_compliance_ratio=self.ilt_compliance_ratio,
            cap_angle_deg=self.cap_angle_deg,
        )
        if self.layers < 2:
            raise ConfigError(f"solver.layers must be >= 2, got {self.layers}")
        if not 0 <= self.ilt_layers < self.layers:
            raise ConfigError(f"solver.ilt_layers must lie in [0, layers), got {self.ilt_layers}")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ConfigError(
                f"solver.poisson_ratio must lie in [0, 0.5), got {self.poisson_ratio}"
            )

    @property
    def pressure_pa(self) -> float:
        return self.pressure_kpa * 1e3

    def materials(self) -> dict[str, Material]:
        return default_materials(
            self.youngs_modulus_pa, self.poisson_ratio, self.ilt_compliance_ratio
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "pressure_kpa": self.pressure_kpa,
            "wall_thickness_mm": self.wall_thickness_mm,
            "layers": self.layers,
            "youngs_modulus_pa": self.youngs_modulus_pa,
            "poisson_ratio": self.poisson_ratio,
            "ilt_layers": self.ilt_layers,
            "ilt_compliance_ratio": self.ilt_compliance_ratio,
            "cap_angle_deg": self.cap_angle_deg,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SolverParams":
        _check_keys("solver", data, set(cls().to_dict()))
        ints = {"layers", "ilt_layers"}
        try:
            values = {k: (int(v) if k in ints else float(v)) for k, v in data.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid solver value: {exc}") from exc
        return cls(**values)


@dataclass(frozen=True)
class RegionSpec:
    axis: int = 2
    axis_range_mm: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.axis not in (0, 1, 2):
            raise ConfigError(f"indices.region.axis must be 0, 1 or 2, got {self.axis}")
        lo, hi = self.axis_range_mm
        if not lo < hi:
            raise ConfigError(f"indices.region.axis_range_mm must be increasing, got {[lo, hi]}")


@dataclass(frozen=True)
class IndexParams:
    absolute_rsii: bool = True
    area_weighted_mean: bool = False
    degenerate_strain: float = 1e-3
    region: RegionSpec | None = None

    def __post_init__(self) -> None:
        if self.degenerate_strain < 0:
            raise ConfigError("indices.degenerate_strain must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        region = None
        if self.region is not None:
            region = {"axis": self.region.axis, "axis_range_mm": list(self.region.axis_range_mm)}
        return {
            "absolute_rsii": self.absolute_rsii,
            "area_weighted_mean": self.area_weighted_mean,
            "degenerate_strain": self.degenerate_strain,
            "region": region,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "IndexParams":
        _check_keys("indices", data, set(cls().to_dict()))
        region_data = data.get("region")
        region = None
        if region_data is not None:
            _check_keys("indices.region", region_data, {"axis", "axis_range_mm"})
            rng = region_data.get("axis_range_mm")
            if rng is None or len(rng) != 2:
                raise ConfigError("indices.region.axis_range_mm needs two values")
            region = RegionSpec(
                axis=int(region_data.get("axis", 2)),
                axis_range_mm=(float(rng[0]), float(rng[1])),
            )
        return cls(
            absolute_rsii=_flag("indices", data, "absolute_rsii", True),
            area_weighted_mean=_flag("indices", data, "area_weighted_mean", False),
            degenerate_strain=float(data.get("degenerate_strain", 1e-3)),
            region=region,
        )


# ---------------------------------------------------------------------------
# PipelineConfig
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PipelineConfig:
    output_dir: str = "rsii_output"
    inputs: InputPaths = field(default_factory=InputPaths)
    phantom: PhantomSpec | None = field(default_factory=PhantomSpec)
    registration: RegConfig = field(default_factory=RegConfig)
    geometry: GeometryParams = field(default_factory=GeometryParams)
    solver: SolverParams = field(default_factory=SolverParams)
    indices: IndexParams = field(default_factory=IndexParams)

    def __post_init__(self) -> None:
        if self.inputs.any and not self.inputs.complete:
            raise ConfigError("inputs need all of fixed, moving and labels (or none of them)")
        if not self.inputs.complete and self.phantom is None:
            raise ConfigError("configure either inputs (fixed, moving, labels) or a phantom")

    @property
    def uses_phantom(self) -> bool:
        return not self.inputs.complete

    def to_dict(self) -> dict[str, Any]:
        return {
            "output_dir": self.output_dir,
            "inputs": {
                "fixed": self.inputs.fixed,
                "moving": self.inputs.moving,
                "labels": self.inputs.labels,
            },
            "phantom": None if self.phantom is None else self.phantom.to_dict(),
            "registration": self.registration.to_dict(),
            "geometry": self.geometry.to_dict(),
            "solver": self.solver.to_dict(),
            "indices": self.indices.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        """Build from a complete (defaults-merged) configuration dictionary."""
        _check_keys(
            "config",
            data,
            {"output_dir", "inputs", "phantom", "registration", "geometry", "solver", "indices"},
        )
        phantom = data.get("phantom")
        return cls(
            output_dir=str(data.get("output_dir", "rsii_output")),
            inputs=InputPaths.from_dict(data.get("inputs") or {}),
            phantom=None if phantom is None else PhantomSpec.from_dict(phantom),
            registration=RegConfig.from_dict(data.get("registration") or {}),
            geometry=GeometryParams.from_dict(data.get("geometry") or {}),
            solver=SolverParams.from_dict(data.get("solver") or {}),
            indices=IndexParams.from_dict(data.get("indices") or {}),
        )

    def check_inputs_exist(self) -> None:
        """Raise ``FileNotFoundError`` naming every configured input that is missing."""
        missing = self.inputs.missing_files() if self.inputs.complete else []
        if missing:
            raise FileNotFoundError(f"input file(s) not found: {', '.join(missing)}")

    def config_hash(self) -> str:
        return config_hash(self)


def config_hash(config: PipelineConfig | Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON of ``config`` without ``output_dir``."""
    data = dict(config.to_dict() if isinstance(config, PipelineConfig) else config)
    data.pop("output_dir", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
