"""Isotropic linear-elastic materials for the wall and thrombus regions."""
from __future__ import annotations

from dataclasses import dataclass

from rsii.core.errors import ConfigError

REGIONS = ("wall", "ilt")
REGION_WALL = 0
REGION_ILT = 1

DEFAULT_YOUNGS_MODULUS_PA = 100e9
DEFAULT_POISSON_RATIO = 0.3
DEFAULT_ILT_COMPLIANCE_RATIO = 20.0


@dataclass(frozen=True)
class Material:
    """
    :param youngs_modulus: E in Pa (> 0).
    :param poisson_ratio: nu in [0, 0.5).
    :param region: ``"wall"`` or ``"ilt"``.
    """

    youngs_modulus: float
    poisson_ratio: float
    region: str = "wall"

    def __post_init__(self) -> None:
        if not self.youngs_modulus > 0:
            raise ConfigError(f"youngs_modulus must be > 0, got {self.youngs_modulus}")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ConfigError(f"poisson_ratio must lie in [0, 0.5), got {self.poisson_ratio}")
        if self.region not in REGIONS:
            raise ConfigError(f"unknown region {self.region!r}; expected one of {REGIONS}")

    @property
    def lame(self) -> tuple[float, float]:
        """``(lambda, mu)`` in Pa."""
        e, nu = self.youngs_modulus, self.poisson_ratio
        lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        mu = e / (2.0 * (1.0 + nu))
        return lam, mu


def default_materials(
    youngs_modulus: float = DEFAULT_YOUNGS_MODULUS_PA,
    poisson_ratio: float = DEFAULT_POISSON_RATIO,
    ilt_compliance_ratio: float = DEFAULT_ILT_COMPLIANCE_RATIO,
) -> dict[str, Material]:
    """Wall material plus a thrombus material ``ilt_compliance_ratio`` times more compliant."""
    if not ilt_compliance_ratio > 0:
        raise ConfigError(f"ilt_compliance_ratio must be > 0, got {ilt_compliance_ratio}")
    return {
        "wall": Material(youngs_modulus, poisson_ratio, "wall"),
        "ilt": Material(youngs_modulus / ilt_compliance_ratio, poisson_ratio, "ilt"),
    }
