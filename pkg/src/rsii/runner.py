from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from rsii import settings
from rsii.core.errors import ConfigError
from rsii.core.phantom import phantom_parameters
from rsii.core.pipeline import PipelineConfig, run_pipeline


def build_config(
    config_path: str | None = None, overrides: Mapping[str, Any] | None = None
) -> PipelineConfig:
    """
    Resolve defaults, an optional JSON config file and dotted-key overrides into a
    validated :class:`PipelineConfig`.

    Switching ``phantom.shape`` keeps only the parameters the new shape accepts.
    """
    given = {k: v for k, v in (overrides or {}).items() if v is not None}
    try:
        cfg = settings.resolve(config_path)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{config_path} is not valid JSON: {exc}") from exc
    shape = given.get("phantom.shape")
    phantom = cfg.get("phantom") or {}
    if shape is not None and phantom.get("shape") != shape:
        accepted = phantom_parameters(shape)
        cfg["phantom"] = {k: v for k, v in phantom.items() if k in accepted}
    for dotted, value in given.items():
        settings.set_dotted(cfg, dotted, value)
    return PipelineConfig.from_dict(cfg)


def run(
    config_path: str | None = None,
    overrides: Mapping[str, Any] | None = None,
    from_stage: str | None = None,
) -> Path:
    """
    Run the full pipeline and return the artifact directory.

    Example:
        out = run("case.json", {"solver.pressure_kpa": 16.9})
    """
    return run_pipeline(build_config(config_path, overrides), from_stage)
