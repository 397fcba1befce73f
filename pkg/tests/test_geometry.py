import numpy as np
import pytest

from rsii.core.errors import ConfigError, DegenerateNeighborhoodError, SurfaceExtractionError
from rsii.core.geometry import (
    LocalFrame,
    MlesacParams,
    SurfaceField,
    TriangleSurface,
    curvature_radius,
    estimate_curvature,
    extract_surface,
    fair_surface,
    fit_circle_lsq,
    fit_sphere_lsq,
    interpolate_at_vertices,
    local_frames,
    weld_vertices,
)
from rsii.core.registration import DisplacementField
from rsii.core.volume import LabelMap, VoxelGrid


def _angle_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def _rotation(axis, angle):
    axis = np.asarray(axis, dtype=np.float64) / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * k @ k


# ---------------------------------------------------------------------------
# TriangleSurface and fields
# ---------------------------------------------------------------------------
def test_icosphere_topology_and_metrics(make_icosphere):
    sphere = make_icosphere(radius=25.0, subdivisions=4)
    assert sphere.n_vertices == 2562
    assert sphere.is_closed
    assert sphere.euler_characteristic() == 2
    assert sphere.boundary_loops() == []
    assert sphere.signed_volume() == pytest.approx(4.0 / 3.0 * np.pi * 25.0**3, rel=0.01)
    assert sphere.vertex_areas().sum() == pytest.approx(sphere.face_areas().sum())
    outward = np.einsum("ij,ij->i", sphere.vertex_normals(), sphere.vertices)
    assert np.all(outward > 0)


def test_tube_topology(make_tube):
    tube = make_tube(radius=25.0, length=60.0, n_theta=96, n_z=31)
    assert tube.n_vertices == 96 * 31
    assert not tube.is_closed
    assert tube.euler_characteristic() == 0
    loops = tube.boundary_loops()
    assert len(loops) == 2
    np.testing.assert_array_equal(np.sort(np.concatenate(loops)), tube.ring_vertices())
    assert tube.face_areas().sum() == pytest.approx(2 * np.pi * 25.0 * 60.0, rel=0.001)


def test_surface_validation():
    with pytest.raises(ValueError, match="out of range"):
        TriangleSurface(np.zeros((3, 3)), [[0, 1, 3]])
    surface = TriangleSurface([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    with pytest.raises(ValueError):
        surface.check_field([1.0, 2.0])


def test_surface_field_validation():
    field = SurfaceField("sii", [1.0, 2.0, 0.0], "m/N", valid=[True, True, False])
    assert field.masked_count == 1
    np.testing.assert_array_equal(field.valid_values(), [1.0, 2.0])
    assert field.renamed("rsii").name == "rsii"
    with pytest.raises(ValueError, match="non-finite"):
        SurfaceField("sii", [1.0, np.nan], "m/N")
    with pytest.raises(ValueError, match="units"):
        SurfaceField("sii", [1.0], "furlong")


def test_weld_vertices_merges_duplicates():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 0], [1, 1, 0]], dtype=float)
    tris = np.array([[0, 1, 2], [3, 4, 2], [0, 1, 1]])
    welded, faces = weld_vertices(verts, tris)
    assert len(welded) == 4
    assert faces.shape == (2, 3)


# ---------------------------------------------------------------------------
# Extraction and fairing
# ---------------------------------------------------------------------------
def test_extract_closed_sphere(small_sphere_case):
    surface = extract_surface(small_sphere_case.labels, label_code=1)
    assert surface.is_closed
    assert surface.euler_characteristic() == 2
    assert surface.end_rings == ()
    r = np.linalg.norm(surface.vertices, axis=1)
    assert np.all(np.abs(r - 12.0) <= 1.0)
    assert surface.signed_volume() > 0


def test_extract_lumen_boundary(small_sphere_case):
    surface = extract_surface(small_sphere_case.labels, label_code=2)
    r = np.linalg.norm(surface.vertices, axis=1)
    assert np.median(r) == pytest.approx(10.0, abs=1.0)


def test_extract_open_tube_has_two_end_rings(small_cylinder_case):
    surface = extract_surface(small_cylinder_case.labels, label_code=1, axis=2)
    assert len(surface.boundary_loops()) == 2
    assert len(surface.end_rings) == 2
    bottom, top = surface.end_rings
    np.testing.assert_allclose(surface.vertices[bottom, 2], -8.0, atol=0.5)
    np.testing.assert_allclose(surface.vertices[top, 2], 8.0, atol=0.5)
    radial = np.hypot(surface.vertices[:, 0], surface.vertices[:, 1])
    assert np.median(radial) == pytest.approx(8.0, abs=1.0)


def test_extract_rejects_missing_or_full_labels():
    codes = np.zeros((6, 6, 6), dtype=np.uint8)
    codes[2:4, 2:4, 2:4] = 1
    with pytest.raises(SurfaceExtractionError, match="absent"):
        extract_surface(LabelMap.from_codes(codes), label_code=2)
    with pytest.raises(SurfaceExtractionError, match="fills"):
        extract_surface(LabelMap.from_codes(np.ones((6, 6, 6))), label_code=1)


def test_fairing_smooths_noise_and_pins_boundary(make_icosphere, small_cylinder_case):
    sphere = make_icosphere(radius=10.0, subdivisions=3)
    rng = np.random.default_rng(5)
    unit = sphere.vertices / 10.0
    noisy = sphere.with_vertices(unit * (10.0 + rng.normal(0.0, 0.2, size=(len(unit), 1))))
    faired = fair_surface(noisy, iterations=10)
    before = np.std(np.linalg.norm(noisy.vertices, axis=1) - 10.0)
    after = np.std(np.linalg.norm(faired.vertices, axis=1) - 10.0)
    assert after < 0.5 * before
    np.testing.assert_array_equal(faired.triangles, noisy.triangles)

    tube = extract_surface(small_cylinder_case.labels)
    faired_tube = fair_surface(tube, iterations=5)
    ring = tube.ring_vertices()
    np.testing.assert_array_equal(faired_tube.vertices[ring], tube.vertices[ring])
    assert fair_surface(tube, iterations=0) is tube
    with pytest.raises(ValueError):
        fair_surface(tube, lam=0.5, mu=-0.4)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------
def test_frames_on_icosphere(make_icosphere):
    sphere = make_icosphere(radius=25.0, subdivisions=4)
    bare = TriangleSurface(sphere.vertices, sphere.triangles)
    framed = local_frames(bare, neighborhood_k=16, axis=(0.0, 0.0, 1.0))
    frames = framed.frames
    assert np.all(_angle_deg(frames.normal, sphere.vertices) <= 3.0)
    assert frames.orthonormality_error() < 1e-9
    np.testing.assert_allclose(frames.handedness(), 1.0)
    equator = np.abs(sphere.vertices[:, 2]) < 2.0
    expected = np.cross([0.0, 0.0, 1.0], frames.normal[equator])
    expected /= np.linalg.norm(expected, axis=1, keepdims=True)
    np.testing.assert_allclose(frames.tangent1[equator], expected, atol=1e-12)


def test_frames_on_flat_patch(make_flat_patch):
    patch = make_flat_patch(n=12)
    framed = local_frames(TriangleSurface(patch.vertices, patch.triangles))
    up = np.tile([0.0, 0.0, 1.0], (patch.n_vertices, 1))
    assert np.all(_angle_deg(framed.frames.normal, up) <= 0.5)


def test_frames_reject_bad_neighbourhoods():
    tri = TriangleSurface([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    with pytest.raises(ConfigError):
        local_frames(tri, neighborhood_k=4)
    with pytest.raises(DegenerateNeighborhoodError):
        local_frames(tri, neighborhood_k=16)


def test_local_frame_shape_check():
    with pytest.raises(ValueError):
        LocalFrame(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((2, 3)))


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------
def test_least_squares_fits_are_exact():
    rng = np.random.default_rng(2)
    d = rng.standard_normal((20, 3))
    pts = np.array([1.0, -2.0, 0.5]) + 7.0 * d / np.linalg.norm(d, axis=1, keepdims=True)
    centre, radius = fit_sphere_lsq(pts)
    np.testing.assert_allclose(centre, [1.0, -2.0, 0.5], atol=1e-9)
    assert radius == pytest.approx(7.0)
    t = rng.uniform(0, 2 * np.pi, 10)
    circle = np.stack([3.0 + 4.0 * np.cos(t), 4.0 * np.sin(t)], axis=1)
    assert fit_circle_lsq(circle)[1] == pytest.approx(4.0)
    assert fit_sphere_lsq(np.zeros((5, 3))) is None


def test_sphere_curvature_on_icosphere(make_icosphere):
    sphere = make_icosphere(radius=25.0, subdivisions=4)
    for vertex in (0, 100, 2000):
        est = curvature_radius(sphere, vertex, 6.0)
        assert est.valid
        assert est.radius == pytest.approx(25.0, abs=0.5)
        assert est.n_neighbours >= 10


def test_circumferential_curvature_on_tube(make_tube):
    tube = make_tube(radius=25.0)
    out = estimate_curvature(
        tube, neighborhood_radius=10.0, model="circumferential", axis=(0.0, 0.0, 1.0)
    )
    assert out.curvature_valid.all()
    np.testing.assert_allclose(out.curvature_radius, 25.0, rtol=0.02)


def test_sphere_curvature_on_tube_interior(make_tube):
    # one-sided neighbourhoods at the open ends pull the fit down
    tube = make_tube(radius=25.0)
    out = estimate_curvature(tube, neighborhood_radius=10.0, model="sphere")
    interior = np.abs(tube.vertices[:, 2]) <= 30.0 - 10.0
    radii = out.curvature_radius[interior]
    assert 23.0 <= np.median(radii) <= 31.0


def test_mlesac_rejects_outliers(make_icosphere):
    sphere = make_icosphere(radius=25.0, subdivisions=4)
    dist = np.linalg.norm(sphere.vertices - sphere.vertices[0], axis=1)
    ball = np.flatnonzero((dist <= 6.0) & (dist > 0))
    rng = np.random.default_rng(0)
    moved = rng.choice(ball, size=int(0.3 * len(ball)), replace=False)
    verts = np.array(sphere.vertices)
    verts[moved] *= 30.0 / 25.0
    corrupted = TriangleSurface(verts, sphere.triangles)
    est = curvature_radius(corrupted, 0, 6.0, MlesacParams(trials=200, inlier_tol=0.3))
    assert est.radius == pytest.approx(25.0, rel=0.05)


def test_curvature_is_invariant_to_rigid_motion_and_scales(make_icosphere):
    sphere = make_icosphere(radius=25.0, subdivisions=4)
    base = curvature_radius(sphere, 7, 6.0)
    rot = _rotation([1.0, 2.0, 3.0], 0.7)
    moved = TriangleSurface(sphere.vertices @ rot.T + [10.0, -4.0, 3.0], sphere.triangles)
    assert curvature_radius(moved, 7, 6.0).radius == pytest.approx(base.radius, rel=1e-9)
    scaled = TriangleSurface(2.0 * sphere.vertices, sphere.triangles)
    assert curvature_radius(scaled, 7, 12.0).radius == pytest.approx(
        2.0 * base.radius, rel=1e-9
    )
    assert curvature_radius(sphere, 7, 6.0) == base


def test_curvature_degenerate_cases(make_icosphere, make_flat_patch):
    sphere = make_icosphere(radius=25.0, subdivisions=4)
    with pytest.raises(DegenerateNeighborhoodError):
        curvature_radius(sphere, 0, 0.5)
    with pytest.raises(ConfigError):
        curvature_radius(sphere, 0, 6.0, model="ellipsoid")
    with pytest.raises(ConfigError):
        curvature_radius(TriangleSurface(sphere.vertices, sphere.triangles), 0, 6.0,
                         model="circumferential", axis=(0.0, 0.0, 1.0))

    patch = make_flat_patch(n=12)
    est = curvature_radius(patch, 6 * 12 + 6, 4.0)
    assert est.near_flat
    assert not est.valid
    assert est.radius == pytest.approx(400.0)


def test_estimate_curvature_flags_sparse_vertices(make_flat_patch):
    patch = make_flat_patch(n=12)
    out = estimate_curvature(patch, neighborhood_radius=1.2)
    assert not out.curvature_valid.any()
    np.testing.assert_allclose(out.curvature_radius[~out.curvature_valid].min(), 1.2)


# ---------------------------------------------------------------------------
# Interpolation at vertices
# ---------------------------------------------------------------------------
def _field_on(values_fn, n=11):
    grid = VoxelGrid(np.zeros((n, n, n)), origin=(-5.0, -5.0, -5.0))
    mesh = grid.physical_mesh()
    return DisplacementField(values_fn(mesh), grid.spacing, grid.origin)


def test_interpolation_of_constant_and_linear_fields(make_icosphere):
    sphere = make_icosphere(radius=3.0, subdivisions=1)
    const = interpolate_at_vertices(
        _field_on(lambda m: np.stack([np.full(m.shape[1:], v) for v in (0.1, -0.2, 0.3)])),
        sphere,
    )
    np.testing.assert_allclose(const.vectors, np.tile([0.1, -0.2, 0.3], (sphere.n_vertices, 1)))
    assert const.outside_count == 0

    scale = np.array([0.01, 0.02, -0.03])
    linear = interpolate_at_vertices(_field_on(lambda m: m * scale[:, None, None, None]), sphere)
    np.testing.assert_allclose(linear.vectors, sphere.vertices * scale, atol=1e-12)

    zero = interpolate_at_vertices(_field_on(lambda m: np.zeros_like(m)), sphere)
    assert np.all(zero.vectors == 0.0)


def test_interpolation_flags_vertices_outside_the_field():
    surface = TriangleSurface([[0, 0, 0], [1, 0, 0], [0, 20, 0]], [[0, 1, 2]])
    out = interpolate_at_vertices(_field_on(lambda m: m * 0.01), surface)
    np.testing.assert_array_equal(out.outside, [False, False, True])
    assert out.outside_count == 1
    np.testing.assert_allclose(out.vectors[2], [0.0, 0.05, 0.0], atol=1e-12)
