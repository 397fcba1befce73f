from rsii.core.geometry.surface import SurfaceField
from rsii.core.solver.materials import (
    DEFAULT_ILT_COMPLIANCE_RATIO,
    DEFAULT_POISSON_RATIO,
    DEFAULT_YOUNGS_MODULUS_PA,
    REGIONS,
    Material,
    default_materials,
)
from rsii.core.solver.mesh import WallMesh, build_wall_mesh, tet_signed_volumes
from rsii.core.solver.elasticity import (
    ElasticSolution,
    StressField,
    assemble_stiffness,
    pressure_loads,
    solve_elasticity,
)
from rsii.core.solver.averaging import column_weights, uniform_stress_average
from rsii.core.solver.tension import WallTension, compute_wall_tension, von_mises, wall_tension

__all__ = [
    "DEFAULT_ILT_COMPLIANCE_RATIO",
    "DEFAULT_POISSON_RATIO",
    "DEFAULT_YOUNGS_MODULUS_PA",
    "REGIONS",
    "ElasticSolution",
    "Material",
    "StressField",
    "SurfaceField",
    "WallMesh",
    "WallTension",
    "assemble_stiffness",
    "build_wall_mesh",
    "column_weights",
    "compute_wall_tension",
    "default_materials",
    "pressure_loads",
    "solve_elasticity",
    "tet_signed_volumes",
    "uniform_stress_average",
    "von_mises",
    "wall_tension",
]
