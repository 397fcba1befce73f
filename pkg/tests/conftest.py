"""Shared fixtures: analytic surfaces with exact frames and small phantoms."""
from __future__ import annotations

import math

import numpy as np
import pytest

from rsii.core.geometry import LocalFrame, TriangleSurface
from rsii.core.phantom import make_cylinder_phantom, make_sphere_phantom

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

_ICOSAHEDRON_VERTICES = [
    (-1, GOLDEN, 0), (1, GOLDEN, 0), (-1, -GOLDEN, 0), (1, -GOLDEN, 0),
    (0, -1, GOLDEN), (0, 1, GOLDEN), (0, -1, -GOLDEN), (0, 1, -GOLDEN),
    (GOLDEN, 0, -1), (GOLDEN, 0, 1), (-GOLDEN, 0, -1), (-GOLDEN, 0, 1),
]
_ICOSAHEDRON_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _axial_frames(normals: np.ndarray, axis=(0.0, 0.0, 1.0)) -> LocalFrame:
    a = np.asarray(axis, dtype=np.float64)
    t1 = np.cross(a[None, :], normals)
    fallback = np.linalg.norm(t1, axis=1) < 0.1
    t1[fallback] = np.cross(np.array([1.0, 0.0, 0.0])[None, :], normals[fallback])
    t1 = _unit(t1)
    return LocalFrame(normal=normals, tangent1=t1, tangent2=np.cross(normals, t1))


def fusiform_surface(
    base_radius: float = 20.0,
    bulge_amplitude: float = 6.0,
    bulge_sigma: float = 24.0,
    length: float = 120.0,
    n_theta: int = 56,
    n_z: int = 41,
) -> TriangleSurface:
    """
    Open z-aligned surface of revolution ``R(z) = base + amplitude * exp(-z^2 / 2 sigma^2)``
    with exact normals, circumferential ``tangent1`` and both end loops as end rings.
    ``curvature_radius`` is the distance to the axis along the normal.
    """
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    z = np.linspace(-0.5 * length, 0.5 * length, n_z)
    tt, zz = np.meshgrid(theta, z)
    bump = bulge_amplitude * np.exp(-(zz**2) / (2.0 * bulge_sigma**2))
    rr = base_radius + bump
    slope = -zz / bulge_sigma**2 * bump
    vertices = np.stack(
        [(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel(), zz.ravel()], axis=1
    )

    def vid(i, j):
        return j * n_theta + (i % n_theta)

    tris = []
    for j in range(n_z - 1):
        for i in range(n_theta):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))

    normals = _unit(
        np.stack([np.cos(tt).ravel(), np.sin(tt).ravel(), -slope.ravel()], axis=1)
    )
    rings = (np.arange(n_theta), (n_z - 1) * n_theta + np.arange(n_theta))
    return TriangleSurface(
        vertices,
        np.asarray(tris),
        frames=_axial_frames(normals),
        curvature_radius=(rr * np.sqrt(1.0 + slope**2)).ravel(),
        end_rings=rings,
    )


def tube_surface(
    radius: float = 26.5, length: float = 60.0, n_theta: int = 96, n_z: int = 31
) -> TriangleSurface:
    """
    Open z-aligned tube with exact radial normals, circumferential ``tangent1``,
    curvature ``radius`` everywhere and both end loops as end rings.
    """
    return fusiform_surface(radius, 0.0, 1.0, length, n_theta, n_z)


def icosphere_surface(radius: float = 26.0, subdivisions: int = 4) -> TriangleSurface:
    """Closed icosphere with exact radial frames and curvature ``radius``."""
    verts = [np.asarray(v, dtype=np.float64) for v in _ICOSAHEDRON_VERTICES]
    verts = [v / np.linalg.norm(v) for v in verts]
    faces = list(_ICOSAHEDRON_FACES)
    for _ in range(subdivisions):
        midpoints: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in midpoints:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoints[key] = len(verts) - 1
            return midpoints[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined

    unit = np.asarray(verts)
    tris = np.asarray(faces, dtype=np.int64)
    v = unit[tris]
    outward = np.einsum("ij,ij->i", np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), v.mean(axis=1))
    tris[outward < 0] = tris[outward < 0][:, ::-1]
    return TriangleSurface(
        radius * unit,
        tris,
        frames=_axial_frames(unit),
        curvature_radius=np.full(len(unit), radius),
    )


def flat_patch(n: int = 12, spacing: float = 1.0) -> TriangleSurface:
    """Square grid in the plane z = 0, normals +z, ``tangent1`` along x."""
    xs = spacing * np.arange(n)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    vertices = np.stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)], axis=1)
    tris = []
    for i in range(n - 1):
        for j in range(n - 1):
            a, b, c, d = i * n + j, (i + 1) * n + j, (i + 1) * n + j + 1, i * n + j + 1
            tris.append((a, b, c))
            tris.append((a, c, d))
    m = len(vertices)
    frames = LocalFrame(
        normal=np.tile([0.0, 0.0, 1.0], (m, 1)),
        tangent1=np.tile([1.0, 0.0, 0.0], (m, 1)),
        tangent2=np.tile([0.0, 1.0, 0.0], (m, 1)),
    )
    return TriangleSurface(vertices, np.asarray(tris), frames=frames)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------
@pytest.fixture(scope="session")
def make_tube():
    return tube_surface


@pytest.fixture(scope="session")
def make_icosphere():
    return icosphere_surface


@pytest.fixture(scope="session")
def make_flat_patch():
    return flat_patch


@pytest.fixture(scope="session")
def small_cylinder_case():
    return make_cylinder_phantom(
        radius=6.0, wall_thickness=2.0, length=16.0, spacing=1.0, inflation=0.03
    )


@pytest.fixture(scope="session")
def small_sphere_case():
    return make_sphere_phantom(radius=10.0, wall_thickness=2.0, spacing=1.0, inflation=0.03)


@pytest.fixture(scope="session")
def make_fusiform():
    return fusiform_surface
