"""Percentile summaries of the index maps."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from rsii.core.errors import ConfigError
from rsii.core.geometry.surface import SurfaceField, TriangleSurface

logger = logging.getLogger(__name__)

REPORT_PERCENTILE = 99.0


@dataclass(frozen=True)
class FieldSummary:
    """
    Statistics of one field over its unmasked vertices, in the field's own units.

    ``p99`` is the linear-interpolation percentile of the absolute values; ``mean`` and
    ``std`` (population) are of the signed values.
    """

    name: str
    units: str
    p99: float
    mean: float
    std: float
    n_valid: int
    n_masked: int

    def to_dict(self) -> dict:
        return asdict(self)


def percentile_abs(values: np.ndarray, q: float = REPORT_PERCENTILE) -> float:
    """``q``-th percentile of ``|values|`` with linear interpolation between order statistics."""
    return float(np.percentile(np.abs(np.asarray(values, dtype=np.float64)), q, method="linear"))


def summarize_field(field: SurfaceField, q: float = REPORT_PERCENTILE) -> FieldSummary:
    vals = field.valid_values()
    if vals.size == 0:
        logger.warning(f"field {field.name!r} has no unmasked vertices; summary is zero")
        return FieldSummary(field.name, field.units, 0.0, 0.0, 0.0, 0, field.masked_count)
    return FieldSummary(
        name=field.name,
        units=field.units,
        p99=percentile_abs(vals, q),
        mean=float(np.mean(vals)),
        std=float(np.std(vals)),
        n_valid=int(vals.size),
        n_masked=field.masked_count,
    )


@dataclass(frozen=True)
class PercentileReport:
    tension: FieldSummary
    strain: FieldSummary
    sii: FieldSummary
    rsii: FieldSummary

    @property
    def t_o(self) -> float:
        return self.tension.p99

    @property
    def eps_o(self) -> float:
        return self.strain.p99

    @property
    def sii_o(self) -> float:
        return self.sii.p99

    @property
    def rsii_o(self) -> float:
        return self.rsii.p99

    def summaries(self) -> dict[str, FieldSummary]:
        return {"tension": self.tension, "strain": self.strain, "sii": self.sii, "rsii": self.rsii}

    def masked_counts(self) -> dict[str, int]:
        return {key: s.n_masked for key, s in self.summaries().items()}


def percentile_report(
    tension: SurfaceField,
    strain: SurfaceField,
    sii: SurfaceField,
    rsii: SurfaceField,
    q: float = REPORT_PERCENTILE,
) -> PercentileReport:
    """Summaries of the four index fields; raises on an empty field."""
    for f in (tension, strain, sii, rsii):
        if len(f) == 0:
            raise ValueError(f"field {f.name!r} is empty")
    report = PercentileReport(
        tension=summarize_field(tension, q),
        strain=summarize_field(strain, q),
        sii=summarize_field(sii, q),
        rsii=summarize_field(rsii, q),
    )
    logger.info(
        f"report: t_o={report.t_o * 1e-3:.4f} N/mm, eps_o={report.eps_o:.3%}, "
        f"sii_o={report.sii_o * 1e3:.4f} mm/N, rsii_o={report.rsii_o:.3f}"
    )
    return report


# ---------------------------------------------------------------------------
# Region comparison
# ---------------------------------------------------------------------------
def region_mask(
    surface: TriangleSurface, axis: int, axis_range_mm: Sequence[float]
) -> np.ndarray:
    """Vertices whose coordinate along ``axis`` lies in the closed band ``axis_range_mm``."""
    if axis not in (0, 1, 2):
        raise ConfigError(f"axis must be 0, 1 or 2, got {axis}")
    lo, hi = (float(v) for v in axis_range_mm)
    if not lo < hi:
        raise ConfigError(f"axis_range_mm must be increasing, got {list(axis_range_mm)}")
    coord = surface.vertices[:, axis]
    return (coord >= lo) & (coord <= hi)


def region_comparison(
    surface: TriangleSurface,
    fields: Sequence[SurfaceField],
    axis: int,
    axis_range_mm: Sequence[float],
    q: float = REPORT_PERCENTILE,
) -> dict[str, dict[str, FieldSummary]]:
    """
    Summaries of each field inside and outside an axial band, e.g. the aneurysm sac
    against the adjoining vessel.
    """
    inside = region_mask(surface, axis, axis_range_mm)
    out: dict[str, dict[str, FieldSummary]] = {}
    for f in fields:
        surface.check_field(f.values, f.name)
        out[f.name] = {
            "inside": summarize_field(SurfaceField(f.name, f.values, f.units, f.valid & inside), q),
            "outside": summarize_field(
                SurfaceField(f.name, f.values, f.units, f.valid & ~inside), q
            ),
        }
    logger.info(
        f"region comparison: {int(inside.sum())} vertices inside "
        f"[{axis_range_mm[0]}, {axis_range_mm[1]}] mm along axis {axis}"
    )
    return out
