from rsii.core.indices.strain import WallDisplacement, circumferential_strain, normal_displacement
from rsii.core.indices.sii import relative_sii, structural_integrity_index
from rsii.core.indices.report import (
    REPORT_PERCENTILE,
    FieldSummary,
    PercentileReport,
    percentile_abs,
    percentile_report,
    region_comparison,
    region_mask,
    summarize_field,
)
from rsii.core.indices.bundle import DEFAULT_DEGENERATE_STRAIN, IndexBundle, compute_indices

__all__ = [
    "DEFAULT_DEGENERATE_STRAIN",
    "REPORT_PERCENTILE",
    "FieldSummary",
    "IndexBundle",
    "PercentileReport",
    "WallDisplacement",
    "circumferential_strain",
    "compute_indices",
    "normal_displacement",
    "percentile_abs",
    "percentile_report",
    "region_comparison",
    "region_mask",
    "relative_sii",
    "structural_integrity_index",
    "summarize_field",
]
