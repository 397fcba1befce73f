"""
Sequential stage runner with a manifest and resume support.

Artifact layout under ``output_dir``::

    config.json                       resolved configuration
    manifest.json                     versions, config hash, seeds, stages, timestamps
    inputs/fixed.mhd moving.mhd labels.mhd (+ truth_u*.mhd, phantom.json)
    surface/surface.vtk surface.json
    registration/displacement_u{x,y,z}.mhd convergence.json
    tension/tension.vtk tension.json
    indices/indices.vtk report.json
"""
from __future__ import annotations

import logging
import os
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Callable

from rsii._version import __version__
from rsii.core.errors import ConfigError, StageError
from rsii.core.pipeline.config import PipelineConfig
from rsii.core.pipeline.stages import (
    import_stage,
    indices_stage,
    phantom_stage,
    register_stage,
    surface_stage,
    tension_stage,
)
from rsii.core.workspace import Workspace

logger = logging.getLogger(__name__)

STAGES = ("inputs", "surface", "register", "tension", "indices")
MANIFEST = "manifest"
_DEPENDENCIES = ("numpy", "scipy", "scikit-image")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def dependency_versions() -> dict[str, str | None]:
    out: dict[str, str | None] = {}
    for name in _DEPENDENCIES:
        try:
            out[name] = version(name)
        except PackageNotFoundError:
            out[name] = None
    return out


class PipelineRunner:
    """
    Runs the stages of one configuration inside one workspace.

    Usage:
        runner = PipelineRunner(config)
        out_dir = runner.run()                      # everything
        out_dir = runner.run(from_stage="tension")  # reuse earlier artifacts
    """

    def __init__(self, config: PipelineConfig, workspace: Workspace | None = None):
        self.config = config
        self.workspace = workspace or Workspace(config.output_dir)
        self.config_hash = config.config_hash()
        self._stage_fns: dict[str, Callable[[], dict[str, str]]] = {
            "inputs": self._inputs,
            "surface": self._surface,
            "register": self._register,
            "tension": self._tension,
            "indices": self._indices,
        }

    # -------------------------------------------------------------------------
    # Stage bodies
    # -------------------------------------------------------------------------

    def _inputs(self) -> dict[str, str]:
        ws, cfg = self.workspace, self.config
        self.workspace.clear("inputs")
        if cfg.uses_phantom:
            return phantom_stage(cfg.phantom, ws.directory("inputs"), cfg.solver.pressure_pa)
        return import_stage(
            cfg.inputs.fixed, cfg.inputs.moving, cfg.inputs.labels, ws.directory("inputs")
        )

    def _surface(self) -> dict[str, str]:
        ws = self.workspace
        return surface_stage(
            ws.path("inputs", "labels.mhd"), ws.path("surface", "surface.vtk"), self.config.geometry
        )

    def _register(self) -> dict[str, str]:
        ws = self.workspace
        return register_stage(
            ws.path("inputs", "fixed.mhd"),
            ws.path("inputs", "moving.mhd"),
            ws.directory("register"),
            self.config.registration,
        )

    def _tension(self) -> dict[str, str]:
        ws = self.workspace
        return tension_stage(
            ws.path("surface", "surface.vtk"),
            ws.path("tension", "tension.vtk"),
            self.config.solver,
            axis=self.config.geometry.axis,
        )

    def _indices(self) -> dict[str, str]:
        ws = self.workspace
        out = indices_stage(
            ws.path("tension", "tension.vtk"),
            ws.directory("register"),
            ws.path("indices", "indices.vtk"),
            ws.path("indices", "report.json"),
            self.config.indices,
            config_hash=self.config_hash,
        )
        if out.bundle.degenerate:
            logger.warning("RSII is degenerate for this case; see report.json")
        return out.artifacts

    # -------------------------------------------------------------------------
    # Manifest
    # -------------------------------------------------------------------------

    def _relative(self, artifacts: dict[str, str]) -> dict[str, str]:
        root = self.workspace.root_dir
        return {k: os.path.relpath(v, root) for k, v in sorted(artifacts.items())}

    def _new_manifest(self) -> dict[str, Any]:
        return {
            "package": "rsii-sdk",
            "version": __version__,
            "dependencies": dependency_versions(),
            "config_hash": self.config_hash,
            "seeds": {
                "registration": self.config.registration.seed,
                "mlesac": self.config.geometry.mlesac.seed,
            },
            "stages": {},
            "status": "running",
        }

    def _resume_manifest(self, start: int) -> dict[str, Any]:
        ws = self.workspace
        if not ws.has_json(None, MANIFEST):
            raise ConfigError(f"cannot resume: no manifest in {ws.root_dir}")
        manifest = ws.load_json(None, MANIFEST)
        if manifest.get("config_hash") != self.config_hash:
            raise ConfigError(
                "cannot resume: the configuration differs from the one that produced "
                f"{ws.root_dir} (hash {manifest.get('config_hash')})"
            )
        done = manifest.get("stages", {})
        for stage in STAGES[:start]:
            if done.get(stage, {}).get("status") != "ok":
                raise ConfigError(
                    f"cannot resume at {STAGES[start]!r}: stage {stage!r} never finished"
                )
        for stage in STAGES[start:]:
            done.pop(stage, None)
        manifest["status"] = "running"
        return manifest

    # -------------------------------------------------------------------------
    # Public
    # -------------------------------------------------------------------------

    def run(self, from_stage: str | None = None) -> Path:
        """
        Execute the stages from ``from_stage`` (default: the first) to the end.

        :raises FileNotFoundError: If a configured input file is missing.
        :raises ConfigError: On an unknown stage, a held lock or a resume mismatch.
        :raises StageError: When a stage fails; earlier artifacts stay on disk.
        """
        if from_stage is not None and from_stage not in STAGES:
            raise ConfigError(f"unknown stage {from_stage!r}; expected one of {STAGES}")
        start = 0 if from_stage is None else STAGES.index(from_stage)
        if start == 0:
            self.config.check_inputs_exist()

        ws = self.workspace
        with ws:
            manifest = self._new_manifest() if start == 0 else self._resume_manifest(start)
            ws.save_json(None, "config", self.config.to_dict())
            ws.save_json(None, MANIFEST, manifest)

            for stage in STAGES[start:]:
                started = _now()
                logger.info(f"stage {stage}: started")
                try:
                    artifacts = self._stage_fns[stage]()
                except ConfigError:
                    manifest["status"] = f"failed at {stage}"
                    ws.save_json(None, MANIFEST, manifest)
                    raise
                except Exception as exc:
                    manifest["stages"][stage] = {
                        "status": "failed",
                        "error": str(exc),
                        "started": started,
                        "finished": _now(),
                    }
                    manifest["status"] = f"failed at {stage}"
                    ws.save_json(None, MANIFEST, manifest)
                    logger.error(f"stage {stage} failed: {exc}")
                    raise StageError(stage, str(exc)) from exc

                manifest["stages"][stage] = {
                    "status": "ok",
                    "artifacts": self._relative(artifacts),
                    "started": started,
                    "finished": _now(),
                }
                ws.save_json(None, MANIFEST, manifest)
                logger.info(f"stage {stage}: done")

            manifest["status"] = "complete"
            ws.save_json(None, MANIFEST, manifest)

        logger.info(f"pipeline complete: artifacts in {ws.root_dir}")
        return Path(ws.root_dir)


def run_pipeline(config: PipelineConfig, from_stage: str | None = None) -> Path:
    """Run ``config`` end to end (or from ``from_stage``) and return the artifact directory."""
    return PipelineRunner(config).run(from_stage)
