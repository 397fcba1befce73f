from rsii.core.registration.field import COMPONENT_NAMES, DisplacementField, RegConfig
from rsii.core.registration.energy import (
    EPS_TV,
    data_term,
    forward_gradient,
    forward_gradient_adjoint,
    registration_energy_and_gradient,
    total_variation,
)
from rsii.core.registration.admm import (
    LevelTrace,
    RegistrationResult,
    TVRegistration,
    register,
)
from rsii.core.registration.warp import warp

__all__ = [
    "COMPONENT_NAMES",
    "DisplacementField",
    "EPS_TV",
    "LevelTrace",
    "RegConfig",
    "RegistrationResult",
    "TVRegistration",
    "data_term",
    "forward_gradient",
    "forward_gradient_adjoint",
    "register",
    "registration_energy_and_gradient",
    "total_variation",
    "warp",
]
