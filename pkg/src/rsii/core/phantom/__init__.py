from rsii.core.phantom.phantoms import (
    AnalyticTruth,
    PhantomCase,
    axial_profile,
    make_cylinder_phantom,
    make_fusiform_phantom,
    make_phantom,
    make_sphere_phantom,
    phantom_parameters,
    write_phantom_case,
)

__all__ = [
    "AnalyticTruth",
    "PhantomCase",
    "axial_profile",
    "make_cylinder_phantom",
    "make_fusiform_phantom",
    "make_phantom",
    "make_sphere_phantom",
    "phantom_parameters",
    "write_phantom_case",
]
