import numpy as np
import pytest

from rsii.core.errors import ConfigError, DegenerateFieldError
from rsii.core.geometry import SurfaceField, TriangleSurface
from rsii.core.indices import (
    circumferential_strain,
    compute_indices,
    normal_displacement,
    percentile_abs,
    percentile_report,
    region_comparison,
    region_mask,
    relative_sii,
    structural_integrity_index,
    summarize_field,
)


def _inflation(surface, factor=0.03):
    v = surface.vertices
    return factor * np.stack([v[:, 0], v[:, 1], np.zeros(len(v))], axis=1)


def _tension(n, value=325.0):
    return SurfaceField("tension_max_principal", np.full(n, value), "N/m")


# ---------------------------------------------------------------------------
# Strain
# ---------------------------------------------------------------------------
def test_radial_inflation_gives_uniform_strain(make_tube):
    tube = make_tube(radius=25.0)
    disp = normal_displacement(_inflation(tube), tube.frames)
    np.testing.assert_allclose(disp.normal.values, 0.75)
    np.testing.assert_allclose(disp.tangential.values, 0.0, atol=1e-12)
    assert disp.normal.name == "displacement_normal"
    strain = circumferential_strain(disp.normal, tube.curvature_radius)
    np.testing.assert_allclose(strain.values, 0.03)
    assert strain.units == "1"


def test_axial_motion_is_tangential(make_tube):
    tube = make_tube(radius=25.0)
    u = np.tile([0.0, 0.0, 0.4], (tube.n_vertices, 1))
    disp = normal_displacement(u, tube.frames)
    np.testing.assert_allclose(disp.normal.values, 0.0, atol=1e-12)
    np.testing.assert_allclose(disp.tangential.values, 0.4)
    with pytest.raises(ValueError):
        normal_displacement(u[:-1], tube.frames)


def test_strain_masks_and_rejects_radii():
    u_n = SurfaceField("displacement_normal", [0.3, -0.3, 0.6], "mm")
    strain = circumferential_strain(u_n, np.array([10.0, 10.0, 20.0]), [True, False, True])
    np.testing.assert_allclose(strain.values, [0.03, -0.03, 0.03])
    np.testing.assert_array_equal(strain.valid, [True, False, True])
    with pytest.raises(DegenerateFieldError):
        circumferential_strain(u_n, np.array([10.0, 0.0, 20.0]))
    with pytest.raises(ValueError):
        circumferential_strain(u_n, np.array([10.0, 20.0]))


# ---------------------------------------------------------------------------
# SII / RSII
# ---------------------------------------------------------------------------
def test_sii_value_and_units():
    strain = SurfaceField("strain_circ", [0.03, 0.03], "1")
    sii = structural_integrity_index(strain, _tension(2))
    np.testing.assert_allclose(sii.values, 0.03 / 325.0)
    assert sii.values[0] == pytest.approx(9.2308e-5, rel=1e-4)
    assert sii.units == "m/N"


def test_sii_masks_nonpositive_tension():
    strain = SurfaceField("strain_circ", [0.03, 0.02, 0.01], "1")
    tension = SurfaceField("tension_max_principal", [300.0, 0.0, -5.0], "N/m")
    sii = structural_integrity_index(strain, tension)
    np.testing.assert_array_equal(sii.valid, [True, False, False])
    np.testing.assert_array_equal(sii.values[1:], [0.0, 0.0])
    assert sii.masked_count == 2
    with pytest.raises(DegenerateFieldError):
        structural_integrity_index(strain, tension, mask_nonpositive=False)


def test_relative_sii_normalisation():
    sii = SurfaceField("sii", np.array([1.0, -1.0, 2.0, -2.0]) * 1e-4, "m/N")
    rsii = relative_sii(sii)
    np.testing.assert_allclose(rsii.values, [2 / 3, 2 / 3, 4 / 3, 4 / 3])
    assert np.mean(rsii.values) == pytest.approx(1.0, abs=1e-12)
    assert rsii.name == "rsii"
    with pytest.raises(DegenerateFieldError):
        relative_sii(sii, absolute=False)


def test_relative_sii_area_weighting_and_masks():
    sii = SurfaceField("sii", [1.0, 1.0, 2.0, 2.0], "m/N", valid=[True, True, True, False])
    rsii = relative_sii(sii, area_weighted=True, areas=np.array([1.0, 1.0, 2.0, 100.0]))
    # weighted mean over the valid vertices: (1 + 1 + 4) / 4 = 1.5
    np.testing.assert_allclose(rsii.values, [2 / 3, 2 / 3, 4 / 3, 0.0])
    np.testing.assert_array_equal(rsii.valid, sii.valid)
    with pytest.raises(ValueError):
        relative_sii(sii, area_weighted=True)
    none_valid = SurfaceField("sii", [1.0, 2.0], "m/N", valid=[False, False])
    with pytest.raises(DegenerateFieldError):
        relative_sii(none_valid)
    with pytest.raises(DegenerateFieldError):
        relative_sii(SurfaceField("sii", [0.0, 0.0], "m/N"))


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------
def test_percentile_uses_linear_interpolation():
    assert percentile_abs(np.arange(1, 101)) == pytest.approx(99.01)
    assert percentile_abs(-np.arange(1, 101)) == pytest.approx(99.01)


def test_summaries_skip_masked_vertices():
    field = SurfaceField("sii", [1.0, 3.0, 100.0], "m/N", valid=[True, True, False])
    summary = summarize_field(field)
    assert summary.n_valid == 2
    assert summary.n_masked == 1
    assert summary.mean == pytest.approx(2.0)
    assert summary.std == pytest.approx(1.0)
    assert summary.p99 == pytest.approx(1.0 + 0.99 * 2.0)
    empty = summarize_field(SurfaceField("sii", [1.0], "m/N", valid=[False]))
    assert empty.n_valid == 0
    assert empty.p99 == 0.0


def test_percentile_report_properties():
    n = 10
    report = percentile_report(
        _tension(n),
        SurfaceField("strain_circ", np.full(n, 0.03), "1"),
        SurfaceField("sii", np.full(n, 1e-4), "m/N"),
        SurfaceField("rsii", np.ones(n), "1"),
    )
    assert report.t_o == pytest.approx(325.0)
    assert report.eps_o == pytest.approx(0.03)
    assert report.sii_o == pytest.approx(1e-4)
    assert report.rsii_o == pytest.approx(1.0)
    assert report.masked_counts() == {"tension": 0, "strain": 0, "sii": 0, "rsii": 0}


def test_region_mask_and_comparison(make_tube):
    tube = make_tube(radius=25.0, length=60.0)
    inside = region_mask(tube, 2, (-10.0, 10.0))
    assert inside.sum() == 96 * 11
    values = np.where(inside, 2.0, 1.0)
    field = SurfaceField("rsii", values, "1")
    out = region_comparison(tube, [field], axis=2, axis_range_mm=(-10.0, 10.0))
    assert out["rsii"]["inside"].mean == pytest.approx(2.0)
    assert out["rsii"]["outside"].mean == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        region_mask(tube, 3, (-10.0, 10.0))
    with pytest.raises(ConfigError):
        region_mask(tube, 2, (10.0, -10.0))


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------
def test_compute_indices_on_inflated_tube(make_tube):
    tube = make_tube(radius=25.0)
    bundle = compute_indices(tube, _inflation(tube), _tension(tube.n_vertices))
    assert not bundle.degenerate
    np.testing.assert_allclose(bundle.strain.values, 0.03)
    np.testing.assert_allclose(bundle.rsii.values, 1.0)
    assert bundle.report.t_o == pytest.approx(325.0)
    assert bundle.report.eps_o == pytest.approx(0.03)
    assert bundle.regions is None
    assert [f.name for f in bundle.fields()] == [
        "strain_circ", "sii", "rsii", "displacement_normal", "displacement_tangential"
    ]


def test_rsii_does_not_depend_on_pressure(make_tube):
    tube = make_tube(radius=25.0)
    rng = np.random.default_rng(4)
    u = _inflation(tube) * rng.uniform(0.5, 1.5, size=(tube.n_vertices, 1))
    tension = rng.uniform(200.0, 400.0, tube.n_vertices)
    base = compute_indices(
        tube, u, SurfaceField("tension_max_principal", tension, "N/m")
    )
    scaled = compute_indices(
        tube, u, SurfaceField("tension_max_principal", 1.3 * tension, "N/m")
    )
    np.testing.assert_allclose(scaled.rsii.values, base.rsii.values, rtol=1e-12)
    np.testing.assert_allclose(scaled.sii.values, base.sii.values / 1.3, rtol=1e-12)


def test_zero_motion_is_degenerate(make_tube):
    tube = make_tube(radius=25.0)
    bundle = compute_indices(tube, np.zeros((tube.n_vertices, 3)), _tension(tube.n_vertices))
    assert bundle.degenerate
    assert bundle.rsii.masked_count == tube.n_vertices
    assert np.all(bundle.rsii.values == 0.0)
    assert bundle.report.rsii.n_valid == 0


def test_outside_vertices_and_regions(make_tube):
    tube = make_tube(radius=25.0)
    outside = np.zeros(tube.n_vertices, dtype=bool)
    outside[:96] = True
    bundle = compute_indices(
        tube,
        _inflation(tube),
        _tension(tube.n_vertices),
        outside=outside,
        region_axis=2,
        region_range_mm=(-5.0, 5.0),
    )
    assert bundle.strain.masked_count == 96
    assert bundle.rsii.masked_count == 96
    assert set(bundle.regions) == {"tension_max_principal", "strain_circ", "sii", "rsii"}
    assert bundle.regions["rsii"]["inside"].mean == pytest.approx(1.0)


def test_compute_indices_needs_curvature():
    bare = TriangleSurface([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    with pytest.raises(ValueError, match="frames and curvature"):
        compute_indices(bare, np.zeros((3, 3)), _tension(3))
