import importlib
import json

import pytest

from rsii import cli
from rsii.core.errors import StageError


def test_help_and_unknown_commands(capsys):
    assert cli.main(["--help"]) == cli.EXIT_OK
    assert "phantom" in capsys.readouterr().out
    assert cli.main(["bogus"]) == cli.EXIT_CONFIG
    assert cli.main([]) == cli.EXIT_CONFIG


def test_phantom_command_writes_a_case(tmp_path, capsys):
    out = tmp_path / "case"
    code = cli.main(
        ["phantom", "--out", str(out), "--radius", "6", "--phantom-wall", "2", "--length", "10"]
    )
    assert code == cli.EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert set(printed) >= {"fixed", "moving", "labels", "manifest"}
    assert (out / "labels.mhd").exists()
    analytic = json.loads((out / "phantom.json").read_text())["analytic"]
    assert analytic["radius_mm"] == pytest.approx(6.0)


def test_sphere_phantom_from_flags(tmp_path):
    out = tmp_path / "sphere"
    code = cli.main(
        ["phantom", "--out", str(out), "--shape", "sphere", "--radius", "6",
         "--phantom-wall", "2"]
    )
    assert code == cli.EXIT_OK
    assert json.loads((out / "phantom.json").read_text())["analytic"]["shape"] == "sphere"


def test_config_errors_exit_with_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert cli.main(["phantom", "--out", str(tmp_path), "--config", str(bad)]) == cli.EXIT_CONFIG
    assert (
        cli.main(["tension", "--surface", "s.vtk", "--out", "t.vtk", "--poisson-ratio", "0.6"])
        == cli.EXIT_CONFIG
    )
    assert cli.main(["phantom", "--out", str(tmp_path), "--radius", "3"]) == cli.EXIT_CONFIG


def test_missing_files_exit_with_2(tmp_path):
    code = cli.main(
        ["register", "--fixed", str(tmp_path / "f.mhd"), "--moving", str(tmp_path / "m.mhd"),
         "--out", str(tmp_path / "reg")]
    )
    assert code == cli.EXIT_CONFIG
    code = cli.main(
        ["run", "--out", str(tmp_path / "run"), "--fixed", str(tmp_path / "f.mhd"),
         "--moving", str(tmp_path / "m.mhd"), "--labels", str(tmp_path / "l.mhd")]
    )
    assert code == cli.EXIT_CONFIG


def test_unreadable_tension_map_exits_with_3(tmp_path):
    not_vtk = tmp_path / "tension.vtk"
    not_vtk.write_text("hello\n")
    code = cli.main(
        ["indices", "--tension", str(not_vtk), "--field", str(tmp_path),
         "--out", str(tmp_path / "i.vtk"), "--report", str(tmp_path / "r.json")]
    )
    assert code == cli.EXIT_STAGE


def test_run_passes_overrides_and_maps_stage_errors(tmp_path, mocker):
    fake = mocker.patch("rsii.cli.run_pipeline", return_value=tmp_path)
    code = cli.main(
        ["run", "--out", str(tmp_path), "--pressure-kpa", "16.9", "--signed-rsii",
         "--from", "tension"]
    )
    assert code == cli.EXIT_OK
    config, from_stage = fake.call_args.args
    assert from_stage == "tension"
    assert config.output_dir == str(tmp_path)
    assert config.solver.pressure_kpa == pytest.approx(16.9)
    assert config.indices.absolute_rsii is False

    fake.side_effect = StageError("tension", "singular stiffness matrix")
    assert cli.main(["run", "--out", str(tmp_path)]) == cli.EXIT_STAGE


def test_unexpected_stage_error_exits_with_3(tmp_path, mocker):
    runner_module = importlib.import_module("rsii.core.pipeline.run_pipeline")
    mocker.patch.object(runner_module, "surface_stage", side_effect=KeyError("normal"))
    out = tmp_path / "run"
    code = cli.main(
        ["run", "--out", str(out), "--radius", "6", "--phantom-wall", "2", "--length", "10"]
    )
    assert code == cli.EXIT_STAGE
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed at surface"
    assert manifest["stages"]["surface"]["status"] == "failed"

    mocker.patch("rsii.cli.run_pipeline", side_effect=IndexError("vertex 3"))
    assert cli.main(["run", "--out", str(tmp_path / "other")]) == cli.EXIT_STAGE
