"""
Exception types raised across the rsii pipeline.

Every class derives from a built-in (``ValueError`` / ``RuntimeError``) so callers that
only care about the broad category can keep catching the built-in.
"""
from __future__ import annotations

from typing import Sequence


class ConfigError(ValueError):
    """Invalid or inconsistent configuration value."""


class VolumeFormatError(ValueError):
    """Malformed MetaImage header or raw payload."""


class InvalidLabelError(VolumeFormatError):
    """Label volume holds a code outside {0, 1, 2}."""


class GeometryMismatchError(ValueError):
    """Two grids or fields that must share geometry do not."""


class SurfaceExtractionError(ValueError):
    """Isosurface extraction produced nothing usable."""


class DegenerateNeighborhoodError(ValueError):
    """A vertex neighbourhood cannot support the requested fit."""


class MeshInversionError(ValueError):
    """Offsetting the surface produced tetrahedra with non-positive volume."""

    def __init__(self, message: str, offending_vertices: Sequence[int] = ()):
        super().__init__(message)
        self.offending_vertices = tuple(int(v) for v in offending_vertices)


class SolverError(RuntimeError):
    """Linear system is singular or the solve missed its residual tolerance."""


class DegenerateFieldError(ValueError):
    """A field that must be non-trivial (or positive) is not."""


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
