from rsii.core.pipeline.config import (
    GeometryParams,
    IndexParams,
    InputPaths,
    PhantomSpec,
    PipelineConfig,
    RegionSpec,
    SolverParams,
    config_hash,
)
from rsii.core.pipeline.stages import (
    IndicesOutput,
    import_stage,
    indices_stage,
    phantom_stage,
    register_stage,
    surface_stage,
    tension_stage,
)
from rsii.core.pipeline.run_pipeline import STAGES, PipelineRunner, run_pipeline

__all__ = [
    "GeometryParams",
    "IndexParams",
    "InputPaths",
    "PhantomSpec",
    "PipelineConfig",
    "RegionSpec",
    "SolverParams",
    "config_hash",
    "IndicesOutput",
    "import_stage",
    "indices_stage",
    "phantom_stage",
    "register_stage",
    "surface_stage",
    "tension_stage",
    "STAGES",
    "PipelineRunner",
    "run_pipeline",
]
