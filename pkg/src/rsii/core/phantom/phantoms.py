"""
Synthetic fixed/moving frame pairs with analytic ground truth.

All phantoms are centred on the origin. Tubes run along z and are cut open by the grid
at both z-ends; the sphere is a closed shell. Intensities are 300 in the lumen, 100 in
the wall and 0 outside, blurred with an error-function edge of width ``smoothing_sigma``.

The moving frame is the fixed frame inflated by ``inflation`` so that
``moving(x + u(x)) == fixed(x)`` holds analytically for the truth field ``u``.
"""
from __future__ import annotations

import inspect
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy.special import ndtr

from rsii.core.errors import ConfigError
from rsii.core.registration.field import DisplacementField
from rsii.core.volume import (
    LABEL_BACKGROUND,
    LABEL_LUMEN,
    LABEL_WALL,
    LabelMap,
    VoxelGrid,
    save_volume,
)

logger = logging.getLogger(__name__)

LUMEN_INTENSITY = 300.0
WALL_INTENSITY = 100.0
DEFAULT_RAMP_FRACTION = 0.15


# ---------------------------------------------------------------------------
# Public model
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class AnalyticTruth:
    """
    Closed-form reference values for a phantom.

    ``radius`` is the lumen radius in mm. Laplace tension uses it directly, which is the
    exact hoop resultant of a pressurised cylinder of any wall thickness.
    """

    shape: str
    radius: float
    wall_thickness: float
    strain_circ: float
    length: float | None = None
    params: dict[str, float] = field(default_factory=dict)

    @property
    def mid_radius(self) -> float:
        return self.radius + 0.5 * self.wall_thickness

    @property
    def has_tension_rule(self) -> bool:
        return self.shape in ("cylinder", "sphere")

    def tension_circ(self, pressure_pa: float) -> float | None:
        """Laplace-law circumferential tension (N/m), or None without a closed form."""
        r_m = self.radius * 1e-3
        if self.shape == "cylinder":
            return pressure_pa * r_m
        if self.shape == "sphere":
            return pressure_pa * r_m / 2.0
        return None

    def to_dict(self, pressure_pa: float | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "shape": self.shape,
            "radius_mm": self.radius,
            "mid_radius_mm": self.mid_radius,
            "wall_thickness_mm": self.wall_thickness,
            "strain_circ": self.strain_circ,
            "length_mm": self.length,
            "params": dict(sorted(self.params.items())),
        }
        if pressure_pa is not None:
            t = self.tension_circ(pressure_pa)
            out["pressure_pa"] = pressure_pa
            out["tension_circ_n_per_mm"] = None if t is None else t * 1e-3
        return out


@dataclass(frozen=True)
class PhantomCase:
    fixed_image: VoxelGrid
    moving_image: VoxelGrid
    labels: LabelMap
    truth_displacement: DisplacementField
    analytic: AnalyticTruth | None = None


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise ConfigError(f"{name} must be positive, got {value}")


def _check_common(wall_thickness: float, spacing: float, inflation: float, sigma: float) -> None:
    _check_positive(wall_thickness=wall_thickness, spacing=spacing)
    if not 0.0 <= inflation <= 0.2:
        raise ConfigError(f"inflation must lie in [0, 0.2], got {inflation}")
    if sigma < 0:
        raise ConfigError(f"smoothing_sigma must be >= 0, got {sigma}")
    if wall_thickness < 2.0 * spacing:
        logger.warning(
            f"wall thickness {wall_thickness} mm is under-resolved at spacing {spacing} mm "
            f"(recommended >= {2.0 * spacing} mm)"
        )


def _centred_axis(half_extent: float, spacing: float) -> tuple[int, float]:
    n = 2 * int(math.ceil(half_extent / spacing)) + 1
    return n, -0.5 * (n - 1) * spacing


def _edge(distance: np.ndarray, sigma: float) -> np.ndarray:
    """Blurred unit step: 1 where ``distance`` > 0 (inside), 0 outside."""
    if sigma == 0:
        return (distance > 0).astype(np.float64)
    return ndtr(distance / sigma)


def _intensity(dist_lumen: np.ndarray, dist_outer: np.ndarray, sigma: float) -> np.ndarray:
    return WALL_INTENSITY * _edge(dist_outer, sigma) + (
        LUMEN_INTENSITY - WALL_INTENSITY
    ) * _edge(dist_lumen, sigma)


def _labels(dist_lumen: np.ndarray, dist_outer: np.ndarray) -> np.ndarray:
    codes = np.full(dist_lumen.shape, LABEL_BACKGROUND, dtype=np.uint8)
    codes[dist_outer > 0] = LABEL_WALL
    codes[dist_lumen > 0] = LABEL_LUMEN
    return codes


def axial_profile(z: np.ndarray, z_min: float, length: float, ramp_fraction: float) -> np.ndarray:
    """Trapezoid in z: 0 at both ends, 1 between, linear ramps over ``ramp_fraction``."""
    zn = (np.asarray(z, dtype=np.float64) - z_min) / length
    return np.clip(np.minimum(zn, 1.0 - zn) / ramp_fraction, 0.0, 1.0)


def _axisymmetric_phantom(
    radius_of_z: Callable[[np.ndarray], np.ndarray],
    max_radius: float,
    wall_thickness: float,
    length: float,
    spacing: float,
    inflation: float,
    smoothing_sigma: float,
    ramp_fraction: float,
) -> tuple[VoxelGrid, VoxelGrid, LabelMap, DisplacementField]:
    half = (max_radius + wall_thickness) * (1.0 + inflation) + 4.0 * smoothing_sigma + 2.0 * spacing
    nxy, oxy = _centred_axis(half, spacing)
    nz = int(round(length / spacing)) + 1
    oz = -0.5 * (nz - 1) * spacing
    if nz < 2:
        raise ConfigError(f"length {length} mm gives fewer than 2 slices at spacing {spacing} mm")

    x = oxy + spacing * np.arange(nxy)
    z = oz + spacing * np.arange(nz)
    X, Y, Z = np.meshgrid(x, x, z, indexing="ij")
    r = np.hypot(X, Y)
    R = radius_of_z(Z)

    g = axial_profile(Z, oz, (nz - 1) * spacing, ramp_fraction)
    scale = 1.0 + inflation * g

    fixed = _intensity(R - r, R + wall_thickness - r, smoothing_sigma)
    r_back = r / scale
    moving = _intensity(R - r_back, R + wall_thickness - r_back, smoothing_sigma)
    codes = _labels(R - r, R + wall_thickness - r)

    ux = inflation * g * X
    uy = inflation * g * Y
    uz = np.zeros_like(ux)

    geometry = dict(spacing=(spacing, spacing, spacing), origin=(oxy, oxy, oz))
    return (
        VoxelGrid(fixed, **geometry),
        VoxelGrid(moving, **geometry),
        LabelMap.from_codes(codes, **geometry),
        DisplacementField(np.stack([ux, uy, uz]), **geometry),
    )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------
def make_cylinder_phantom(
    radius: float,
    wall_thickness: float,
    length: float,
    spacing: float,
    inflation: float,
    smoothing_sigma: float = 1.0,
    ramp_fraction: float = DEFAULT_RAMP_FRACTION,
) -> PhantomCase:
    """
    Straight z-aligned tube with lumen radius ``radius`` (mm).

    :param inflation: Radial fraction by which the moving frame is larger, in [0, 0.2].
    :param ramp_fraction: Fraction of the length over which the displacement ramps to 0 at each end.
    """
    _check_positive(radius=radius, length=length)
    _check_common(wall_thickness, spacing, inflation, smoothing_sigma)
    if radius <= 2.0 * wall_thickness:
        raise ConfigError(f"radius {radius} must exceed twice the wall thickness {wall_thickness}")
    if not 0.0 < ramp_fraction <= 0.5:
        raise ConfigError(f"ramp_fraction must lie in (0, 0.5], got {ramp_fraction}")

    fixed, moving, labels, truth = _axisymmetric_phantom(
        lambda z: np.full_like(z, radius, dtype=np.float64),
        radius,
        wall_thickness,
        length,
        spacing,
        inflation,
        smoothing_sigma,
        ramp_fraction,
    )
    analytic = AnalyticTruth(
        shape="cylinder",
        radius=radius,
        wall_thickness=wall_thickness,
        strain_circ=inflation,
        length=length,
    )
    logger.debug(f"cylinder phantom dims={fixed.dims} R={radius} h={wall_thickness}")
    return PhantomCase(fixed, moving, labels, truth, analytic)


def make_fusiform_phantom(
    base_radius: float,
    bulge_amplitude: float,
    bulge_sigma: float,
    length: float,
    spacing: float,
    inflation: float,
    wall_thickness: float = 1.5,
    smoothing_sigma: float = 1.0,
    ramp_fraction: float = DEFAULT_RAMP_FRACTION,
) -> PhantomCase:
    """
    Axisymmetric aneurysm-like tube with lumen radius
    ``R(z) = base_radius + bulge_amplitude * exp(-z^2 / (2 bulge_sigma^2))``.

    With ``bulge_amplitude == 0`` the images, labels and truth field equal those of
    :func:`make_cylinder_phantom` with the same parameters.
    """
    _check_positive(base_radius=base_radius, bulge_sigma=bulge_sigma, length=length)
    _check_common(wall_thickness, spacing, inflation, smoothing_sigma)
    if bulge_amplitude < 0:
        raise ConfigError(f"bulge_amplitude must be >= 0, got {bulge_amplitude}")
    if base_radius + bulge_amplitude > length / 3.0:
        raise ConfigError(
            f"base_radius + bulge_amplitude = {base_radius + bulge_amplitude} exceeds length/3"
        )
    if base_radius <= 2.0 * wall_thickness:
        raise ConfigError(f"base_radius {base_radius} must exceed twice the wall thickness")
    if not 0.0 < ramp_fraction <= 0.5:
        raise ConfigError(f"ramp_fraction must lie in (0, 0.5], got {ramp_fraction}")

    if bulge_amplitude == 0:
        def radius_of_z(z: np.ndarray) -> np.ndarray:
            return np.full_like(z, base_radius, dtype=np.float64)
    else:
        def radius_of_z(z: np.ndarray) -> np.ndarray:
            return base_radius + bulge_amplitude * np.exp(-(z**2) / (2.0 * bulge_sigma**2))

    fixed, moving, labels, truth = _axisymmetric_phantom(
        radius_of_z,
        base_radius + bulge_amplitude,
        wall_thickness,
        length,
        spacing,
        inflation,
        smoothing_sigma,
        ramp_fraction,
    )
    analytic = AnalyticTruth(
        shape="fusiform",
        radius=base_radius + bulge_amplitude,
        wall_thickness=wall_thickness,
        strain_circ=inflation,
        length=length,
        params={
            "base_radius": base_radius,
            "bulge_amplitude": bulge_amplitude,
            "bulge_sigma": bulge_sigma,
        },
    )
    logger.debug(f"fusiform phantom dims={fixed.dims} Rmax={base_radius + bulge_amplitude}")
    return PhantomCase(fixed, moving, labels, truth, analytic)


def make_sphere_phantom(
    radius: float,
    wall_thickness: float,
    spacing: float,
    inflation: float,
    smoothing_sigma: float = 1.0,
) -> PhantomCase:
    """Closed spherical shell with lumen radius ``radius``; truth is a uniform dilation."""
    _check_positive(radius=radius)
    _check_common(wall_thickness, spacing, inflation, smoothing_sigma)
    if radius <= 2.0 * wall_thickness:
        raise ConfigError(f"radius {radius} must exceed twice the wall thickness {wall_thickness}")

    half = (radius + wall_thickness) * (1.0 + inflation) + 4.0 * smoothing_sigma + 2.0 * spacing
    n, o = _centred_axis(half, spacing)
    axis = o + spacing * np.arange(n)
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    rho = np.sqrt(X**2 + Y**2 + Z**2)

    outer = radius + wall_thickness
    fixed = _intensity(radius - rho, outer - rho, smoothing_sigma)
    rho_back = rho / (1.0 + inflation)
    moving = _intensity(radius - rho_back, outer - rho_back, smoothing_sigma)
    codes = _labels(radius - rho, outer - rho)

    geometry = dict(spacing=(spacing, spacing, spacing), origin=(o, o, o))
    truth = DisplacementField(np.stack([inflation * X, inflation * Y, inflation * Z]), **geometry)
    analytic = AnalyticTruth(
        shape="sphere",
        radius=radius,
        wall_thickness=wall_thickness,
        strain_circ=inflation,
    )
    logger.debug(f"sphere phantom dims={(n, n, n)} R={radius} h={wall_thickness}")
    return PhantomCase(
        VoxelGrid(fixed, **geometry),
        VoxelGrid(moving, **geometry),
        LabelMap.from_codes(codes, **geometry),
        truth,
        analytic,
    )


def _builders() -> dict[str, Callable[..., PhantomCase]]:
    return {
        "cylinder": make_cylinder_phantom,
        "sphere": make_sphere_phantom,
        "fusiform": make_fusiform_phantom,
    }


def phantom_parameters(shape: str) -> tuple[str, ...]:
    """Keyword arguments accepted by the generator of ``shape``."""
    builders = _builders()
    if shape not in builders:
        raise ConfigError(f"unknown phantom shape {shape!r}; expected one of {sorted(builders)}")
    return tuple(inspect.signature(builders[shape]).parameters)


def make_phantom(spec: dict[str, Any]) -> PhantomCase:
    """Dispatch on ``spec["shape"]`` with the remaining keys as generator arguments."""
    spec = dict(spec)
    shape = spec.pop("shape", None)
    builders = _builders()
    if shape not in builders:
        raise ConfigError(f"unknown phantom shape {shape!r}; expected one of {sorted(builders)}")
    try:
        return builders[shape](**spec)
    except TypeError as exc:
        raise ConfigError(f"invalid parameters for {shape} phantom: {exc}") from exc


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------
def write_phantom_case(
    case: PhantomCase,
    directory: str | Path,
    pressure_pa: float | None = None,
) -> dict[str, str]:
    """
    Write ``fixed.mhd``, ``moving.mhd``, ``labels.mhd``, ``truth_u{x,y,z}.mhd`` and
    ``phantom.json`` (analytic values) into ``directory``.

    :return: Mapping of artifact name to written path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "fixed": save_volume(case.fixed_image, directory / "fixed.mhd"),
        "moving": save_volume(case.moving_image, directory / "moving.mhd"),
        "labels": save_volume(case.labels, directory / "labels.mhd"),
    }
    truth_paths = case.truth_displacement.save(directory, "truth")
    for name, p in zip(("truth_ux", "truth_uy", "truth_uz"), truth_paths):
        paths[name] = p
    manifest = {
        "dims": list(case.fixed_image.dims),
        "spacing": list(case.fixed_image.spacing),
        "origin": list(case.fixed_image.origin),
        "analytic": None if case.analytic is None else case.analytic.to_dict(pressure_pa),
    }
    manifest_path = directory / "phantom.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    paths["manifest"] = manifest_path
    return {k: str(v) for k, v in paths.items()}
