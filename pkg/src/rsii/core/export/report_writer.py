from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from rsii.core.indices.report import REPORT_PERCENTILE, FieldSummary, PercentileReport
from rsii.core.solver.elasticity import ElasticSolution
from rsii.core.solver.tension import WallTension

logger = logging.getLogger(__name__)

# internal SI units -> reporting units
REPORT_UNITS = {"tension": "N/mm", "strain": "%", "sii": "mm/N", "rsii": "1"}
REPORT_SCALE = {"tension": 1e-3, "strain": 100.0, "sii": 1e3, "rsii": 1.0}
FIELD_KEYS = {
    "tension_max_principal": "tension",
    "strain_circ": "strain",
    "sii": "sii",
    "rsii": "rsii",
}


class ReportSaver:
    """
    Save a JSON-ready report dictionary with sorted keys and no NaN.

    Usage:
        saver = ReportSaver(payload)
        path = saver.save_to_file("output/", "report.json")
    """

    def __init__(self, payload: dict):
        if not isinstance(payload, dict):
            raise ValueError("payload must be a dict")
        self.payload = payload

    def dumps(self) -> str:
        try:
            return json.dumps(self.payload, indent=2, sort_keys=True, allow_nan=False)
        except ValueError as exc:
            raise ValueError(f"report contains a non-finite value: {exc}") from exc

    def save_to_file(self, output_dir: str | Path, filename: str = "report.json") -> Path:
        """
        Write the payload into ``output_dir`` (created if needed).

        :return: Path to the written JSON file.
        """
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / filename
        path.write_text(self.dumps() + "\n", encoding="utf-8")
        return path


def summary_in_report_units(key: str, summary: FieldSummary) -> dict[str, Any]:
    scale = REPORT_SCALE[key]
    return {
        "units": REPORT_UNITS[key],
        "p99": summary.p99 * scale,
        "mean": summary.mean * scale,
        "std": summary.std * abs(scale),
        "n_valid": summary.n_valid,
        "n_masked": summary.n_masked,
    }


def report_to_dict(
    report: PercentileReport,
    masked_counts: Mapping[str, int] | None = None,
    config_hash: str | None = None,
    regions: Mapping[str, Mapping[str, FieldSummary]] | None = None,
    degenerate_rsii: bool = False,
) -> dict[str, Any]:
    """Report payload in N/mm, %, mm/N and dimensionless RSII."""
    counts = masked_counts if masked_counts is not None else report.masked_counts()
    fields = {key: summary_in_report_units(key, s) for key, s in report.summaries().items()}
    payload: dict[str, Any] = {
        "config_hash": config_hash,
        "percentile": REPORT_PERCENTILE,
        "t_o": fields["tension"]["p99"],
        "eps_o": fields["strain"]["p99"],
        "sii_o": fields["sii"]["p99"],
        "rsii_o": fields["rsii"]["p99"],
        "fields": fields,
        "masked_counts": dict(counts),
        "degenerate_rsii": bool(degenerate_rsii),
    }
    if regions:
        payload["regions"] = {
            FIELD_KEYS.get(name, name): {
                side: summary_in_report_units(FIELD_KEYS.get(name, name), s)
                for side, s in sides.items()
            }
            for name, sides in regions.items()
        }
    return payload


def export_report_json(
    report: PercentileReport,
    masked_counts: Mapping[str, int] | None,
    config_hash: str | None,
    path: str | Path,
    regions: Mapping[str, Mapping[str, FieldSummary]] | None = None,
    degenerate_rsii: bool = False,
) -> Path:
    """Write :func:`report_to_dict` to ``path``."""
    path = Path(path)
    payload = report_to_dict(report, masked_counts, config_hash, regions, degenerate_rsii)
    out = ReportSaver(payload).save_to_file(path.parent, path.name)
    logger.info(f"report written to {out}")
    return out


def tension_summary(tension: WallTension, solution: ElasticSolution) -> dict[str, Any]:
    """Percentiles of the tension and stress maps plus solve diagnostics."""
    t_max = tension.max_principal.values
    t_circ = tension.circumferential.values
    vm = tension.von_mises.values
    q = REPORT_PERCENTILE
    return {
        "percentile": q,
        "tension_max_principal_p99_n_per_mm": float(np.percentile(np.abs(t_max), q)) * 1e-3,
        "tension_max_principal_median_n_per_mm": float(np.median(t_max)) * 1e-3,
        "tension_circumferential_p99_n_per_mm": float(np.percentile(np.abs(t_circ), q)) * 1e-3,
        "stress_von_mises_p99_kpa": float(np.percentile(vm, q)) * 1e-3,
        "solver_residual": solution.residual,
        "equilibrium_error": solution.equilibrium_error(),
        "n_vertices": int(t_max.size),
    }
