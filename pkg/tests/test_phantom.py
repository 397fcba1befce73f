import json
import logging

import numpy as np
import pytest

from rsii.core.errors import ConfigError
from rsii.core.phantom import (
    AnalyticTruth,
    axial_profile,
    make_cylinder_phantom,
    make_fusiform_phantom,
    make_phantom,
    make_sphere_phantom,
    phantom_parameters,
    write_phantom_case,
)
from rsii.core.registration import DisplacementField
from rsii.core.volume import LABEL_LUMEN, LABEL_WALL, load_volume, sample_points


def test_cylinder_grid_is_centred_and_sized(small_cylinder_case):
    fixed = small_cylinder_case.fixed_image
    # half extent 8 * 1.03 + 4 + 2 -> 15 voxels each side
    assert fixed.dims == (31, 31, 17)
    assert fixed.origin == (-15.0, -15.0, -8.0)
    assert small_cylinder_case.moving_image.same_geometry(fixed)
    assert small_cylinder_case.labels.grid.same_geometry(fixed)
    assert small_cylinder_case.truth_displacement.dims == fixed.dims


def test_cylinder_labels_and_intensities(small_cylinder_case):
    case = small_cylinder_case
    codes = case.labels.codes
    mid = codes[:, :, 8]
    assert mid[15, 15] == LABEL_LUMEN
    assert mid[15 + 7, 15] == LABEL_WALL
    assert mid[0, 0] == 0
    assert np.count_nonzero(mid == LABEL_LUMEN) == pytest.approx(np.pi * 36, rel=0.1)
    fixed = case.fixed_image.data
    assert fixed[15, 15, 8] == pytest.approx(300.0, abs=0.5)
    assert fixed[0, 0, 8] == pytest.approx(0.0, abs=0.5)


def test_truth_field_ramps_to_zero_at_tube_ends(small_cylinder_case):
    u = small_cylinder_case.truth_displacement.vectors
    x = small_cylinder_case.fixed_image.axis_coordinates()[0]
    np.testing.assert_allclose(u[0, :, 15, 8], 0.03 * x)
    np.testing.assert_allclose(u[:, :, :, 0], 0.0)
    np.testing.assert_allclose(u[:, :, :, -1], 0.0)
    np.testing.assert_allclose(u[2], 0.0)


def test_moving_frame_matches_fixed_under_truth_displacement():
    case = make_cylinder_phantom(
        radius=10.0, wall_thickness=3.0, length=20.0, spacing=1.0, inflation=0.05
    )
    fixed, moving = case.fixed_image, case.moving_image
    pts = fixed.physical_mesh()[:, :, :, 10].reshape(3, -1).T
    u = case.truth_displacement.vectors[:, :, :, 10].reshape(3, -1).T
    f = fixed.data[:, :, 10].ravel().astype(np.float64)
    warped_error = np.mean(np.abs(sample_points(moving, pts + u) - f))
    raw_error = np.mean(np.abs(sample_points(moving, pts) - f))
    assert warped_error < raw_error / 3.0


def test_sphere_truth_is_uniform_dilation(small_sphere_case):
    case = small_sphere_case
    grid = case.fixed_image
    mesh = grid.physical_mesh()
    np.testing.assert_allclose(case.truth_displacement.vectors, 0.03 * mesh)
    assert case.labels.is_lumen_enclosed()
    assert case.analytic.shape == "sphere"


def test_fusiform_without_bulge_equals_cylinder():
    kwargs = dict(length=20.0, spacing=1.0, inflation=0.04)
    tube = make_cylinder_phantom(radius=6.0, wall_thickness=1.5, **kwargs)
    flat = make_fusiform_phantom(base_radius=6.0, bulge_amplitude=0.0, bulge_sigma=3.0, **kwargs)
    assert flat.fixed_image == tube.fixed_image
    assert flat.moving_image == tube.moving_image
    assert flat.labels == tube.labels
    np.testing.assert_array_equal(
        flat.truth_displacement.vectors, tube.truth_displacement.vectors
    )


def test_fusiform_bulge_widens_the_middle():
    case = make_fusiform_phantom(
        base_radius=4.0, bulge_amplitude=3.0, bulge_sigma=3.0, length=24.0, spacing=1.0,
        inflation=0.03,
    )
    codes = case.labels.codes
    mid = np.count_nonzero(codes[:, :, codes.shape[2] // 2] == LABEL_LUMEN)
    end = np.count_nonzero(codes[:, :, 0] == LABEL_LUMEN)
    assert mid > 2 * end
    assert case.analytic.radius == 7.0
    assert case.analytic.tension_circ(16000.0) is None


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(radius=6.0, wall_thickness=2.0, length=16.0, spacing=1.0, inflation=0.3),
        dict(radius=6.0, wall_thickness=2.0, length=16.0, spacing=1.0, inflation=-0.01),
        dict(radius=4.0, wall_thickness=2.0, length=16.0, spacing=1.0, inflation=0.03),
        dict(radius=6.0, wall_thickness=2.0, length=0.0, spacing=1.0, inflation=0.03),
    ],
)
def test_cylinder_rejects_bad_parameters(kwargs):
    with pytest.raises(ConfigError):
        make_cylinder_phantom(**kwargs)


def test_fusiform_rejects_oversized_bulge():
    with pytest.raises(ConfigError, match="length/3"):
        make_fusiform_phantom(
            base_radius=6.0, bulge_amplitude=4.0, bulge_sigma=3.0, length=24.0, spacing=1.0,
            inflation=0.03,
        )


def test_thin_wall_warns(caplog):
    with caplog.at_level(logging.WARNING):
        make_cylinder_phantom(
            radius=6.0, wall_thickness=1.5, length=8.0, spacing=1.0, inflation=0.03
        )
    assert "under-resolved" in caplog.text


def test_axial_profile_is_trapezoid():
    z = np.linspace(0.0, 10.0, 11)
    g = axial_profile(z, 0.0, 10.0, 0.2)
    np.testing.assert_allclose(g, [0, 0.5, 1, 1, 1, 1, 1, 1, 1, 0.5, 0])


def test_laplace_tension_rules():
    cyl = AnalyticTruth("cylinder", radius=25.0, wall_thickness=1.5, strain_circ=0.03)
    sph = AnalyticTruth("sphere", radius=25.0, wall_thickness=1.5, strain_circ=0.03)
    assert cyl.tension_circ(16000.0) == pytest.approx(400.0)
    assert sph.tension_circ(16000.0) == pytest.approx(200.0)
    assert cyl.mid_radius == pytest.approx(25.75)
    payload = cyl.to_dict(16000.0)
    assert payload["tension_circ_n_per_mm"] == pytest.approx(0.4)


def test_make_phantom_dispatch_and_errors():
    case = make_phantom(
        {"shape": "sphere", "radius": 6.0, "wall_thickness": 2.0, "spacing": 1.0,
         "inflation": 0.0}
    )
    assert case.analytic.shape == "sphere"
    np.testing.assert_array_equal(case.fixed_image.data, case.moving_image.data)
    with pytest.raises(ConfigError, match="unknown phantom shape"):
        make_phantom({"shape": "torus"})
    with pytest.raises(ConfigError, match="invalid parameters"):
        make_phantom({"shape": "sphere", "radius": 6.0, "length": 3.0})
    assert "length" not in phantom_parameters("sphere")
    assert "bulge_sigma" in phantom_parameters("fusiform")
    with pytest.raises(ConfigError):
        phantom_parameters("torus")


def test_write_phantom_case(tmp_path, small_cylinder_case):
    paths = write_phantom_case(small_cylinder_case, tmp_path / "case", pressure_pa=16000.0)
    assert set(paths) == {
        "fixed", "moving", "labels", "truth_ux", "truth_uy", "truth_uz", "manifest"
    }
    labels = load_volume(paths["labels"], expect_labels=True)
    assert labels == small_cylinder_case.labels
    truth = DisplacementField.load(tmp_path / "case", "truth")
    np.testing.assert_allclose(
        truth.vectors, small_cylinder_case.truth_displacement.vectors, atol=1e-5
    )
    manifest = json.loads((tmp_path / "case" / "phantom.json").read_text())
    assert manifest["dims"] == [31, 31, 17]
    assert manifest["analytic"]["shape"] == "cylinder"
    assert manifest["analytic"]["tension_circ_n_per_mm"] == pytest.approx(16000.0 * 6e-3 * 1e-3)
