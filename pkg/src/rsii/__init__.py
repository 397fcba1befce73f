"""
rsii SDK
========

Per-vertex wall tension, circumferential strain and Relative Structural Integrity Index
maps of a pressurised vessel wall, from two image frames and a label map.
Provides a unified API around:
- Volumes and synthetic phantoms (MetaImage I/O, analytic ground truth)
- Registration (multiresolution TV-regularised displacement fields)
- Geometry and solver (wall surface, local frames, curvature, FE wall tension)
- Indices and pipeline (strain, SII, RSII, VTK and JSON reports, CLI)
"""

from importlib.metadata import version, PackageNotFoundError

__all__ = [
    "__version__",
    "PipelineConfig",
    "PipelineRunner",
    "run_pipeline",
    "build_config",
    "run",
]

# ----------------------------------------------------------------------
# Package version
# ----------------------------------------------------------------------
try:
    __version__ = version("rsii-sdk")
except PackageNotFoundError:
    __version__ = "0.0.0"

# ----------------------------------------------------------------------
# Public imports
# ----------------------------------------------------------------------
from rsii.core.pipeline import PipelineConfig, PipelineRunner, run_pipeline
from rsii.runner import build_config, run
