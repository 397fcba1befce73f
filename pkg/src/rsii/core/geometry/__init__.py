from rsii.core.geometry.surface import UNITS, LocalFrame, SurfaceField, TriangleSurface
from rsii.core.geometry.extraction import detect_end_rings, extract_surface, weld_vertices
from rsii.core.geometry.fairing import fair_surface
from rsii.core.geometry.frames import local_frames, pca_normals
from rsii.core.geometry.curvature import (
    CurvatureEstimate,
    MlesacParams,
    curvature_radius,
    default_neighborhood_radius,
    estimate_curvature,
    fit_circle_lsq,
    fit_sphere_lsq,
)
from rsii.core.geometry.interpolation import VertexDisplacements, interpolate_at_vertices

__all__ = [
    "UNITS",
    "CurvatureEstimate",
    "LocalFrame",
    "MlesacParams",
    "SurfaceField",
    "TriangleSurface",
    "VertexDisplacements",
    "curvature_radius",
    "default_neighborhood_radius",
    "detect_end_rings",
    "estimate_curvature",
    "extract_surface",
    "fair_surface",
    "fit_circle_lsq",
    "fit_sphere_lsq",
    "interpolate_at_vertices",
    "local_frames",
    "pca_normals",
    "weld_vertices",
]
