"""Stress resultants (wall tension) from column-averaged stress."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from rsii.core.errors import GeometryMismatchError
from rsii.core.geometry.surface import SurfaceField, TriangleSurface
from rsii.core.solver.averaging import uniform_stress_average
from rsii.core.solver.elasticity import ElasticSolution, StressField, solve_elasticity
from rsii.core.solver.materials import Material
from rsii.core.solver.mesh import DEFAULT_CAP_ANGLE_DEG, WallMesh, build_wall_mesh

logger = logging.getLogger(__name__)

MM = 1e-3


@dataclass(frozen=True, eq=False)
class WallTension:
    """
    :param max_principal: Largest in-plane principal tension (N/m).
    :param circumferential: Tension along ``tangent1`` (N/m).
    :param von_mises: Von Mises stress of the averaged tensor (Pa).
    """

    max_principal: SurfaceField
    circumferential: SurfaceField
    von_mises: SurfaceField

    def fields(self) -> list[SurfaceField]:
        return [self.max_principal, self.circumferential, self.von_mises]


def von_mises(tensors: np.ndarray) -> np.ndarray:
    s = tensors
    normal = (
        (s[:, 0, 0] - s[:, 1, 1]) ** 2
        + (s[:, 1, 1] - s[:, 2, 2]) ** 2
        + (s[:, 2, 2] - s[:, 0, 0]) ** 2
    )
    shear = s[:, 0, 1] ** 2 + s[:, 1, 2] ** 2 + s[:, 0, 2] ** 2
    return np.sqrt(0.5 * normal + 3.0 * shear)


def wall_tension(
    mesh: WallMesh, averaged: StressField, surface: TriangleSurface
) -> WallTension:
    """
    Project each column stress onto the vertex tangent plane and integrate over the
    thickness (uniform stress, so the integral is the value times ``mesh.thickness``).
    """
    if averaged.column is None:
        raise ValueError("stress field has not been column-averaged")
    if surface.frames is None:
        raise ValueError("wall_tension needs a surface with local frames")
    if mesh.n_columns != surface.n_vertices:
        raise GeometryMismatchError(
            f"mesh has {mesh.n_columns} columns but the surface has {surface.n_vertices} vertices"
        )

    sigma = averaged.column
    t1, t2 = surface.frames.tangent1, surface.frames.tangent2
    s11 = np.einsum("ni,nij,nj->n", t1, sigma, t1)
    s22 = np.einsum("ni,nij,nj->n", t2, sigma, t2)
    s12 = np.einsum("ni,nij,nj->n", t1, sigma, t2)
    h_m = mesh.thickness * MM
    half_sum = 0.5 * (s11 + s22)
    radius = np.sqrt((0.5 * (s11 - s22)) ** 2 + s12**2)
    t_max = (half_sum + radius) * h_m
    t_circ = s11 * h_m

    result = WallTension(
        max_principal=SurfaceField("tension_max_principal", t_max, "N/m"),
        circumferential=SurfaceField("tension_circumferential", t_circ, "N/m"),
        von_mises=SurfaceField("stress_von_mises", von_mises(sigma), "Pa"),
    )
    logger.info(
        f"wall tension: median {np.median(t_max) * 1e-3:.4f} N/mm, "
        f"p99 {np.percentile(t_max, 99) * 1e-3:.4f} N/mm"
    )
    return result


def compute_wall_tension(
    surface: TriangleSurface,
    pressure_pa: float,
    thickness: float,
    layers: int,
    materials: Mapping[str, Material],
    ilt_layers: int = 0,
    cap_angle_deg: float = DEFAULT_CAP_ANGLE_DEG,
    axis: Sequence[float] = (0.0, 0.0, 1.0),
) -> tuple[WallTension, ElasticSolution, WallMesh]:
    """Mesh, solve, average and integrate in one call."""
    mesh = build_wall_mesh(
        surface, thickness, layers, ilt_layers=ilt_layers, cap_angle_deg=cap_angle_deg, axis=axis
    )
    solution = solve_elasticity(mesh, pressure_pa, materials)
    averaged = uniform_stress_average(mesh, solution.stresses)
    return wall_tension(mesh, averaged, surface), solution, mesh
