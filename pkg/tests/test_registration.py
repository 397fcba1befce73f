import numpy as np
import pytest

from rsii.core.errors import ConfigError, GeometryMismatchError
from rsii.core.registration import (
    DisplacementField,
    RegConfig,
    TVRegistration,
    data_term,
    forward_gradient,
    forward_gradient_adjoint,
    register,
    registration_energy_and_gradient,
    total_variation,
    warp,
)
from rsii.core.registration.pyramid import build_pyramid, upsample_field, usable_levels
from rsii.core.volume import VoxelGrid


def _random_pair(n=8, seed=1):
    rng = np.random.default_rng(seed)
    fixed = VoxelGrid(rng.random((n, n, n)))
    moving = VoxelGrid(rng.random((n, n, n)))
    return fixed, moving


def _blob_pair(n=32, shift=2.0, sigma=4.0, amplitude=100.0):
    axis = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")

    def blob(cx):
        return amplitude * np.exp(-((X - cx) ** 2 + Y**2 + Z**2) / (2.0 * sigma**2))

    geometry = dict(spacing=(1.0, 1.0, 1.0), origin=(axis[0],) * 3)
    return VoxelGrid(blob(0.0), **geometry), VoxelGrid(blob(shift), **geometry)


# ---------------------------------------------------------------------------
# Field and config
# ---------------------------------------------------------------------------
def test_displacement_field_rejects_non_finite_values():
    vec = np.zeros((3, 4, 4, 4))
    vec[1, 2, 2, 2] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        DisplacementField(vec, (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))
    with pytest.raises(GeometryMismatchError):
        DisplacementField(np.zeros((2, 4, 4, 4)), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))


def test_displacement_field_save_and_load(tmp_path):
    grid = VoxelGrid(np.zeros((4, 5, 6)), spacing=(0.5, 1.0, 1.5), origin=(1.0, 2.0, 3.0))
    field = DisplacementField.constant(grid, (0.25, -0.5, 1.0))
    paths = field.save(tmp_path)
    assert [p.name for p in paths] == [
        "displacement_ux.mhd", "displacement_uy.mhd", "displacement_uz.mhd"
    ]
    loaded = DisplacementField.load(tmp_path)
    np.testing.assert_array_equal(loaded.vectors, field.vectors)
    assert loaded.spacing == field.spacing
    assert loaded.origin == field.origin
    assert field.rms() == pytest.approx(np.sqrt(0.25**2 + 0.5**2 + 1.0))


def test_reg_config_validation():
    assert RegConfig.from_dict({}) == RegConfig()
    assert RegConfig.from_dict(RegConfig(lambda_tv=0.5).to_dict()).lambda_tv == 0.5
    with pytest.raises(ConfigError, match="unknown registration keys"):
        RegConfig.from_dict({"lambda": 1.0})
    with pytest.raises(ConfigError):
        RegConfig.from_dict({"pyramid_levels": "many"})
    with pytest.raises(ConfigError):
        RegConfig(pyramid_levels=0)
    with pytest.raises(ConfigError):
        RegConfig(admm_penalty=0.0)


# ---------------------------------------------------------------------------
# Energy
# ---------------------------------------------------------------------------
def test_gradient_adjoint_pairing():
    rng = np.random.default_rng(3)
    spacing = (0.5, 1.0, 2.0)
    u = rng.standard_normal((3, 5, 6, 7))
    p = rng.standard_normal((3, 3, 5, 6, 7))
    lhs = np.sum(forward_gradient(u, spacing) * p)
    rhs = np.sum(u * forward_gradient_adjoint(p, spacing))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_total_variation_values():
    spacing = (1.0, 1.0, 1.0)
    assert total_variation(np.full((3, 5, 5, 5), 2.5), spacing) == 0.0
    x = np.arange(5, dtype=np.float64)
    u = np.zeros((3, 5, 5, 5))
    u[0] = 2.0 * x[:, None, None]
    # forward differences are 2 except on the last x slice
    assert total_variation(u, spacing) == pytest.approx(2.0 * 4 * 25)


def test_data_term_gradient_matches_finite_differences():
    fixed, moving = _random_pair()
    rng = np.random.default_rng(7)
    u = rng.uniform(0.1, 0.4, size=(3,) + fixed.dims)
    _, grad, _ = data_term(fixed, moving, u)
    h = 1e-5
    scale = np.max(np.abs(grad))
    for c, i, j, k in [(0, 1, 2, 3), (1, 4, 4, 4), (2, 2, 5, 1), (0, 6, 0, 6), (1, 3, 3, 0)]:
        up, down = u.copy(), u.copy()
        up[c, i, j, k] += h
        down[c, i, j, k] -= h
        fd = (data_term(fixed, moving, up, False)[0] - data_term(fixed, moving, down, False)[0])
        fd /= 2.0 * h
        assert abs(fd - grad[c, i, j, k]) <= 1e-4 * scale


def test_energy_gradient_matches_finite_differences():
    fixed, moving = _random_pair()
    rng = np.random.default_rng(11)
    u = rng.uniform(0.1, 0.4, size=(3,) + fixed.dims)
    lam = 0.5

    def total(vec):
        field = DisplacementField(vec, fixed.spacing, fixed.origin)
        return registration_energy_and_gradient(fixed, moving, field, lam)

    _, grad = total(u)
    h = 1e-5
    scale = np.max(np.abs(grad))
    for c, i, j, k in [(0, 2, 2, 2), (1, 3, 4, 5), (2, 5, 1, 3)]:
        up, down = u.copy(), u.copy()
        up[c, i, j, k] += h
        down[c, i, j, k] -= h
        fd = (total(up)[0] - total(down)[0]) / (2.0 * h)
        assert abs(fd - grad[c, i, j, k]) <= 1e-4 * scale


def test_energy_requires_matching_field_geometry():
    fixed, moving = _random_pair()
    field = DisplacementField(np.zeros((3, 4, 4, 4)), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))
    with pytest.raises(GeometryMismatchError):
        registration_energy_and_gradient(fixed, moving, field, 1.0)


# ---------------------------------------------------------------------------
# Pyramid
# ---------------------------------------------------------------------------
def test_pyramid_levels_and_transfer():
    grid = VoxelGrid(np.ones((9, 9, 9)), spacing=(1.0, 1.0, 1.0), origin=(-4.0, -4.0, -4.0))
    assert usable_levels(VoxelGrid(np.zeros((8, 8, 8))), 3) == 2
    pyramid = build_pyramid(grid, 2)
    assert pyramid[1].dims == (5, 5, 5)
    assert pyramid[1].spacing == (2.0, 2.0, 2.0)
    coarse_u = np.stack([np.full((5, 5, 5), v) for v in (1.0, -2.0, 0.5)])
    fine_u = upsample_field(coarse_u, pyramid[1], pyramid[0])
    assert fine_u.shape == (3, 9, 9, 9)
    np.testing.assert_allclose(fine_u[1], -2.0)


# ---------------------------------------------------------------------------
# Registration
# ---------------------------------------------------------------------------
def test_registration_rejects_nan_and_disjoint_inputs():
    fixed, moving = _random_pair()
    data = np.array(moving.data)
    data[0, 0, 0] = np.nan
    with pytest.raises(ValueError, match="NaN"):
        TVRegistration(fixed, moving.with_data(data))
    far = VoxelGrid(moving.data, origin=(100.0, 0.0, 0.0))
    with pytest.raises(GeometryMismatchError):
        TVRegistration(fixed, far)


def test_self_registration_is_near_zero():
    fixed, _ = _blob_pair()
    field = register(fixed, fixed, RegConfig(pyramid_levels=2, iterations_per_level=10))
    assert field.rms() <= 0.05


def test_blob_translation_is_recovered():
    fixed, moving = _blob_pair()
    result = TVRegistration(fixed, moving, RegConfig(lambda_tv=0.1)).run()
    ux = result.field.vectors[0]
    grad = np.linalg.norm(np.stack(np.gradient(fixed.data.astype(np.float64))), axis=0)
    band = grad >= np.percentile(grad, 95)
    assert np.median(ux[band]) == pytest.approx(2.0, abs=0.25)
    for trace in result.levels:
        assert np.all(np.diff(trace.energies) <= 1e-9 * abs(trace.energies[0]))


def test_registration_is_deterministic():
    fixed, moving = _blob_pair(n=16, shift=1.0, sigma=3.0)
    config = RegConfig(pyramid_levels=2, iterations_per_level=5)
    a = register(fixed, moving, config)
    b = register(fixed, moving, config)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_single_level_registration_reduces_residual():
    fixed, moving = _blob_pair(n=16, shift=1.0, sigma=3.0)
    result = TVRegistration(
        fixed, moving, RegConfig(pyramid_levels=1, iterations_per_level=10)
    ).run()
    assert len(result.levels) == 1
    log = result.convergence_log()
    assert log["config"]["pyramid_levels"] == 1
    assert log["levels"][0]["dims"] == [16, 16, 16]
    warped = warp(moving, result.field)
    before = np.sum((fixed.data.astype(np.float64) - moving.data) ** 2)
    after = np.sum((fixed.data.astype(np.float64) - warped.data) ** 2)
    assert after <= before


def test_warp_with_constant_shift():
    x = np.arange(8, dtype=np.float64)
    grid = VoxelGrid(np.broadcast_to(x[:, None, None], (8, 8, 8)).copy())
    field = DisplacementField.constant(grid, (1.0, 0.0, 0.0))
    out = warp(grid, field)
    np.testing.assert_allclose(out.data[:7], grid.data[1:])
    np.testing.assert_allclose(out.data[7], 7.0)
