from rsii.core.export.vtk_polydata import VtkSurface, export_vtk, read_vtk
from rsii.core.export.report_writer import (
    REPORT_SCALE,
    REPORT_UNITS,
    ReportSaver,
    export_report_json,
    report_to_dict,
    tension_summary,
)

__all__ = [
    "REPORT_SCALE",
    "REPORT_UNITS",
    "ReportSaver",
    "VtkSurface",
    "export_report_json",
    "export_vtk",
    "read_vtk",
    "report_to_dict",
    "tension_summary",
]
