"""Structural integrity index and its relative form."""
from __future__ import annotations

import logging
import math

import numpy as np

from rsii.core.errors import DegenerateFieldError
from rsii.core.geometry.surface import SurfaceField

logger = logging.getLogger(__name__)


def structural_integrity_index(
    strain: SurfaceField,
    tension: SurfaceField,
    mask_nonpositive: bool = True,
) -> SurfaceField:
    """
    ``SII = strain / tension`` in m/N, signed by the strain.

    Vertices with non-positive tension are masked (value 0) and counted in a warning;
    with ``mask_nonpositive=False`` they raise instead.
    """
    if len(strain) != len(tension):
        raise ValueError(f"strain has {len(strain)} vertices but tension has {len(tension)}")
    t = tension.values
    valid = strain.valid & tension.valid
    nonpositive = valid & (t <= 0)
    if nonpositive.any():
        if not mask_nonpositive:
            raise DegenerateFieldError(
                f"tension is non-positive at {int(nonpositive.sum())} unmasked vertices"
            )
        logger.warning(f"masking {int(nonpositive.sum())} vertices with non-positive tension")
        valid = valid & ~nonpositive
    sii = np.zeros_like(t)
    sii[valid] = strain.values[valid] / t[valid]
    return SurfaceField("sii", sii, "m/N", valid)


def relative_sii(
    sii: SurfaceField,
    absolute: bool = True,
    area_weighted: bool = False,
    areas: np.ndarray | None = None,
) -> SurfaceField:
    """
    ``RSII = |SII| / mean(|SII|)`` over the unmasked vertices.

    :param absolute: With False, the signed ratio ``SII / mean(SII)`` is returned.
    :param area_weighted: Weight the mean by ``areas`` (per-vertex, mm^2).
    :raises DegenerateFieldError: If the mean is zero (e.g. an all-zero SII field).
    """
    valid = sii.valid
    if not valid.any():
        raise DegenerateFieldError("SII has no unmasked vertices")
    values = np.abs(sii.values) if absolute else sii.values
    picked = values[valid]
    if area_weighted:
        if areas is None:
            raise ValueError("area_weighted mean needs per-vertex areas")
        w = np.asarray(areas, dtype=np.float64).reshape(-1)[valid]
        mean = math.fsum(picked * w) / math.fsum(w)
    else:
        mean = math.fsum(picked) / picked.size
    if mean == 0.0 or not math.isfinite(mean):
        raise DegenerateFieldError(f"mean SII is {mean}; RSII is undefined")
    rsii = np.zeros_like(values)
    rsii[valid] = picked / mean
    logger.debug(f"relative SII: mean {'|SII|' if absolute else 'SII'} = {mean:.4e} m/N")
    return SurfaceField("rsii", rsii, "1", valid)
