"""
File-to-file pipeline stages.

Each stage reads the artifacts of the previous one from disk and writes its own, so the
CLI subcommands and a resumed run execute exactly the same code.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, cast

import numpy as np

from rsii.core.export import ReportSaver, export_report_json, export_vtk, read_vtk, tension_summary
from rsii.core.geometry import (
    estimate_curvature,
    extract_surface,
    fair_surface,
    interpolate_at_vertices,
    local_frames,
)
from rsii.core.indices import IndexBundle, compute_indices
from rsii.core.phantom import make_phantom, write_phantom_case
from rsii.core.pipeline.config import GeometryParams, IndexParams, PhantomSpec, SolverParams
from rsii.core.registration import DisplacementField, RegConfig, TVRegistration
from rsii.core.solver import compute_wall_tension
from rsii.core.volume import LabelMap, VoxelGrid, load_volume, save_volume

logger = logging.getLogger(__name__)

TENSION_FIELD = "tension_max_principal"
CARRIED_TENSION_FIELDS = (
    ("tension_max_principal", "N/m"),
    ("tension_circumferential", "N/m"),
    ("stress_von_mises", "Pa"),
)


def axis_index(axis: Sequence[float]) -> int:
    """Grid axis closest to the direction ``axis``."""
    return int(np.argmax(np.abs(np.asarray(axis, dtype=np.float64))))


def _save_json(payload: dict, path: Path) -> Path:
    return ReportSaver(payload).save_to_file(path.parent, path.name)


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------
def phantom_stage(
    spec: PhantomSpec, out_dir: str | Path, pressure_pa: float | None = None
) -> dict[str, str]:
    """Generate a phantom and write its frames, labels, truth field and analytic values."""
    case = make_phantom(spec.to_dict())
    paths = write_phantom_case(case, out_dir, pressure_pa)
    logger.info(f"phantom {spec.shape}: grid {case.fixed_image.dims} written to {out_dir}")
    return paths


def import_stage(
    fixed: str | Path, moving: str | Path, labels: str | Path, out_dir: str | Path
) -> dict[str, str]:
    """Load the user's volumes and store normalized copies next to the other artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fixed_grid = cast(VoxelGrid, load_volume(fixed))
    moving_grid = load_volume(moving)
    label_map = cast(LabelMap, load_volume(labels, expect_labels=True))
    fixed_grid.require_same_geometry(label_map.grid, what="label map")
    paths = {
        "fixed": save_volume(fixed_grid, out_dir / "fixed.mhd"),
        "moving": save_volume(moving_grid, out_dir / "moving.mhd"),
        "labels": save_volume(label_map, out_dir / "labels.mhd"),
    }
    logger.info(f"imported volumes of shape {fixed_grid.dims} into {out_dir}")
    return {k: str(v) for k, v in paths.items()}


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------
def surface_stage(
    labels_path: str | Path, out_vtk: str | Path, params: GeometryParams
) -> dict[str, str]:
    """
    Extract, fair, frame and curvature-annotate the wall surface of a label map.

    Writes ``out_vtk`` and a ``<stem>.json`` summary next to it.
    """
    out_vtk = Path(out_vtk)
    out_vtk.parent.mkdir(parents=True, exist_ok=True)
    labels = cast(LabelMap, load_volume(labels_path, expect_labels=True))

    surface = extract_surface(
        labels,
        label_code=params.label_code,
        iso=params.iso,
        smoothing_sigma_voxels=params.smoothing_sigma_voxels,
        axis=axis_index(params.axis),
    )
    surface = fair_surface(surface, iterations=params.fairing_iterations)
    surface = local_frames(surface, neighborhood_k=params.neighborhood_k, axis=params.axis)
    surface = estimate_curvature(
        surface,
        neighborhood_radius=params.neighborhood_radius_mm,
        mlesac=params.mlesac,
        model=params.curvature_model,
        axis=params.axis,
    )
    export_vtk(surface, [], out_vtk)

    valid = surface.curvature_valid
    radii = surface.curvature_radius[valid]
    summary = {
        "n_vertices": surface.n_vertices,
        "n_triangles": surface.n_triangles,
        "euler_characteristic": surface.euler_characteristic(),
        "n_end_rings": len(surface.end_rings),
        "mean_edge_length_mm": surface.mean_edge_length(),
        "curvature_model": params.curvature_model,
        "curvature_valid": int(valid.sum()),
        "curvature_radius_median_mm": float(np.median(radii)) if radii.size else None,
    }
    summary_path = _save_json(summary, out_vtk.with_suffix(".json"))
    logger.info(
        f"surface: {surface.n_vertices} vertices, {surface.n_triangles} triangles, "
        f"{summary['curvature_valid']} valid curvature estimates"
    )
    return {"surface": str(out_vtk), "summary": str(summary_path)}


# ---------------------------------------------------------------------------
# register
# ---------------------------------------------------------------------------
def register_stage(
    fixed_path: str | Path,
    moving_path: str | Path,
    out_dir: str | Path,
    config: RegConfig,
) -> dict[str, str]:
    """Register moving onto fixed; write the field components and ``convergence.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fixed = cast(VoxelGrid, load_volume(fixed_path))
    moving = cast(VoxelGrid, load_volume(moving_path))

    result = TVRegistration(fixed, moving, config).run()
    components = result.field.save(out_dir)
    log_path = _save_json(result.convergence_log(), out_dir / "convergence.json")
    logger.info(f"registration: rms displacement {result.field.rms():.4f} mm")
    paths = {f"displacement_{i}": str(p) for i, p in enumerate(components)}
    paths["convergence"] = str(log_path)
    return paths


# ---------------------------------------------------------------------------
# tension
# ---------------------------------------------------------------------------
def tension_stage(
    surface_vtk: str | Path,
    out_vtk: str | Path,
    params: SolverParams,
    axis: Sequence[float] = (0.0, 0.0, 1.0),
) -> dict[str, str]:
    """Solve the pressurised wall and write the tension maps plus a JSON summary."""
    out_vtk = Path(out_vtk)
    out_vtk.parent.mkdir(parents=True, exist_ok=True)
    surface = read_vtk(surface_vtk).surface

    tension, solution, mesh = compute_wall_tension(
        surface,
        params.pressure_pa,
        params.wall_thickness_mm,
        params.layers,
        params.materials(),
        ilt_layers=params.ilt_layers,
        cap_angle_deg=params.cap_angle_deg,
        axis=axis,
    )
    export_vtk(surface, tension.fields(), out_vtk)

    summary = tension_summary(tension, solution)
    summary.update(
        {
            "pressure_kpa": params.pressure_kpa,
            "wall_thickness_mm": params.wall_thickness_mm,
            "layers": params.layers,
            "n_nodes": mesh.n_nodes,
            "n_tets": mesh.n_tets,
        }
    )
    summary_path = _save_json(summary, out_vtk.with_suffix(".json"))
    return {"tension": str(out_vtk), "summary": str(summary_path)}


# ---------------------------------------------------------------------------
# indices
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class IndicesOutput:
    bundle: IndexBundle
    artifacts: dict[str, str]


def indices_stage(
    tension_vtk: str | Path,
    field_dir: str | Path,
    out_vtk: str | Path,
    report_path: str | Path,
    params: IndexParams,
    config_hash: str | None = None,
    field_prefix: str = "displacement",
) -> IndicesOutput:
    """
    Strain, SII and RSII maps from the tension surface and the displacement field.

    The output VTK carries the tension maps forward next to the new index maps.
    """
    out_vtk = Path(out_vtk)
    out_vtk.parent.mkdir(parents=True, exist_ok=True)
    loaded = read_vtk(tension_vtk)
    surface = loaded.surface
    carried = [
        loaded.surface_field(name, units)
        for name, units in CARRIED_TENSION_FIELDS
        if name in loaded.point_data
    ]
    if not any(f.name == TENSION_FIELD for f in carried):
        raise ValueError(f"{tension_vtk} has no {TENSION_FIELD!r} point data")
    tension = next(f for f in carried if f.name == TENSION_FIELD)

    field = DisplacementField.load(field_dir, field_prefix)
    sampled = interpolate_at_vertices(field, surface)
    region = params.region
    bundle = compute_indices(
        surface,
        sampled.vectors,
        tension,
        outside=sampled.outside,
        absolute_rsii=params.absolute_rsii,
        area_weighted_mean=params.area_weighted_mean,
        degenerate_strain=params.degenerate_strain,
        region_axis=None if region is None else region.axis,
        region_range_mm=None if region is None else region.axis_range_mm,
    )
    export_vtk(surface, carried + bundle.fields(), out_vtk)

    counts = bundle.report.masked_counts()
    counts["outside_field"] = sampled.outside_count
    report = export_report_json(
        bundle.report,
        counts,
        config_hash,
        report_path,
        regions=bundle.regions,
        degenerate_rsii=bundle.degenerate,
    )
    return IndicesOutput(bundle, {"indices": str(out_vtk), "report": str(report)})
