from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from rsii.core.errors import DegenerateFieldError
from rsii.core.geometry.surface import SurfaceField, TriangleSurface
from rsii.core.indices.report import (
    FieldSummary,
    PercentileReport,
    percentile_abs,
    percentile_report,
    region_comparison,
)
from rsii.core.indices.sii import relative_sii, structural_integrity_index
from rsii.core.indices.strain import WallDisplacement, circumferential_strain, normal_displacement

logger = logging.getLogger(__name__)

DEFAULT_DEGENERATE_STRAIN = 1e-3


@dataclass(frozen=True, eq=False)
class IndexBundle:
    """Strain, tension, SII and RSII maps of one surface together with their report."""

    displacement: WallDisplacement
    strain: SurfaceField
    tension: SurfaceField
    sii: SurfaceField
    rsii: SurfaceField
    report: PercentileReport
    degenerate: bool = False
    regions: dict[str, dict[str, FieldSummary]] | None = field(default=None)

    def __post_init__(self) -> None:
        n = len(self.strain)
        for f in self.fields():
            if len(f) != n:
                raise ValueError(f"field {f.name!r} has {len(f)} vertices, expected {n}")

    def fields(self) -> list[SurfaceField]:
        return [
            self.strain,
            self.sii,
            self.rsii,
            self.displacement.normal,
            self.displacement.tangential,
        ]


def compute_indices(
    surface: TriangleSurface,
    vertex_vectors: np.ndarray,
    tension: SurfaceField,
    outside: np.ndarray | None = None,
    absolute_rsii: bool = True,
    area_weighted_mean: bool = False,
    degenerate_strain: float = DEFAULT_DEGENERATE_STRAIN,
    region_axis: int | None = None,
    region_range_mm: Sequence[float] | None = None,
) -> IndexBundle:
    """
    Strain from the vertex displacements and curvature, then SII, RSII and the report.

    The RSII is flagged degenerate (and fully masked) when the p99 of ``|strain|`` is
    below ``degenerate_strain`` or the SII mean vanishes.
    """
    if surface.frames is None or surface.curvature_radius is None:
        raise ValueError("compute_indices needs a surface with frames and curvature")
    valid = None if outside is None else ~np.asarray(outside, dtype=bool)
    disp = normal_displacement(vertex_vectors, surface.frames, valid)
    strain = circumferential_strain(disp.normal, surface.curvature_radius, surface.curvature_valid)
    sii = structural_integrity_index(strain, tension)

    strain_vals = strain.valid_values()
    degenerate = strain_vals.size == 0 or percentile_abs(strain_vals) < degenerate_strain
    rsii: SurfaceField | None = None
    if degenerate:
        logger.warning("degenerate RSII: strain is below the detection floor")
    else:
        try:
            rsii = relative_sii(
                sii,
                absolute=absolute_rsii,
                area_weighted=area_weighted_mean,
                areas=surface.vertex_areas(),
            )
        except DegenerateFieldError as exc:
            logger.warning(f"RSII is degenerate: {exc}")
            degenerate = True
    if rsii is None:
        n = surface.n_vertices
        rsii = SurfaceField("rsii", np.zeros(n), "1", np.zeros(n, dtype=bool))

    report = percentile_report(tension, strain, sii, rsii)
    regions = None
    if region_range_mm is not None:
        regions = region_comparison(
            surface,
            [tension, strain, sii, rsii],
            axis=2 if region_axis is None else region_axis,
            axis_range_mm=region_range_mm,
        )
    return IndexBundle(disp, strain, tension, sii, rsii, report, degenerate, regions)
