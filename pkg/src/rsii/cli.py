from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Callable

from rsii.core.errors import ConfigError, StageError
from rsii.core.pipeline import (
    STAGES,
    PipelineConfig,
    indices_stage,
    phantom_stage,
    register_stage,
    run_pipeline,
    surface_stage,
    tension_stage,
)
from rsii.runner import build_config

logger = logging.getLogger("rsii.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", dest="config", help="JSON config file (merged over the defaults)")
    p.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def _phantom_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shape", dest="phantom.shape", choices=("cylinder", "sphere", "fusiform"))
    p.add_argument("--radius", dest="phantom.radius", type=float, help="Lumen radius (mm)")
    p.add_argument("--base-radius", dest="phantom.base_radius", type=float)
    p.add_argument("--bulge-amplitude", dest="phantom.bulge_amplitude", type=float)
    p.add_argument("--bulge-sigma", dest="phantom.bulge_sigma", type=float)
    p.add_argument("--phantom-wall", dest="phantom.wall_thickness", type=float, help="mm")
    p.add_argument("--length", dest="phantom.length", type=float, help="Tube length (mm)")
    p.add_argument("--spacing", dest="phantom.spacing", type=float, help="Voxel size (mm)")
    p.add_argument("--inflation", dest="phantom.inflation", type=float)


def _geometry_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--label-code", dest="geometry.label_code", type=int, choices=(1, 2))
    p.add_argument("--fairing-iterations", dest="geometry.fairing_iterations", type=int)
    p.add_argument("--neighborhood-k", dest="geometry.neighborhood_k", type=int)
    p.add_argument("--neighborhood-radius", dest="geometry.neighborhood_radius_mm", type=float)
    p.add_argument(
        "--curvature-model", dest="geometry.curvature_model", choices=("sphere", "circumferential")
    )
    p.add_argument("--mlesac-trials", dest="geometry.mlesac.trials", type=int)
    p.add_argument("--mlesac-seed", dest="geometry.mlesac.seed", type=int)


def _registration_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-tv", dest="registration.lambda_tv", type=float)
    p.add_argument("--pyramid-levels", dest="registration.pyramid_levels", type=int)
    p.add_argument("--iterations", dest="registration.iterations_per_level", type=int)
    p.add_argument("--admm-penalty", dest="registration.admm_penalty", type=float)
    p.add_argument("--convergence-tol", dest="registration.convergence_tol", type=float)
    p.add_argument("--seed", dest="registration.seed", type=int)


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pressure-kpa", dest="solver.pressure_kpa", type=float)
    p.add_argument("--thickness", dest="solver.wall_thickness_mm", type=float, help="mm")
    p.add_argument("--layers", dest="solver.layers", type=int)
    p.add_argument("--youngs-modulus", dest="solver.youngs_modulus_pa", type=float, help="Pa")
    p.add_argument("--poisson-ratio", dest="solver.poisson_ratio", type=float)
    p.add_argument("--ilt-layers", dest="solver.ilt_layers", type=int)


def _index_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--signed-rsii",
        dest="indices.absolute_rsii",
        action="store_const",
        const=False,
        help="Normalise signed SII by its signed mean",
    )
    p.add_argument(
        "--area-weighted",
        dest="indices.area_weighted_mean",
        action="store_const",
        const=True,
        help="Area-weighted surface mean for the RSII",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsii", description="Relative structural integrity maps")
    sub = parser.add_subparsers(dest="cmd", required=True)

    # --- phantom subcommand ---
    ph = sub.add_parser("phantom", help="Write a synthetic phantom case")
    _common(ph)
    ph.add_argument("--out", dest="out", required=True, help="Output directory")
    _phantom_flags(ph)
    ph.add_argument("--pressure-kpa", dest="solver.pressure_kpa", type=float)

    # --- surface subcommand ---
    su = sub.add_parser("surface", help="Label map -> surface VTK with frames and curvature")
    _common(su)
    su.add_argument("--labels", dest="labels", required=True, help="Label map (.mhd)")
    su.add_argument("--out", dest="out", required=True, help="Output .vtk")
    _geometry_flags(su)

    # --- register subcommand ---
    rg = sub.add_parser("register", help="Register moving onto fixed")
    _common(rg)
    rg.add_argument("--fixed", dest="fixed", required=True, help="Fixed image (.mhd)")
    rg.add_argument("--moving", dest="moving", required=True, help="Moving image (.mhd)")
    rg.add_argument("--out", dest="out", required=True, help="Output directory")
    _registration_flags(rg)

    # --- tension subcommand ---
    te = sub.add_parser("tension", help="Surface VTK -> wall tension VTK")
    _common(te)
    te.add_argument("--surface", dest="surface", required=True, help="Surface .vtk")
    te.add_argument("--out", dest="out", required=True, help="Output .vtk")
    _solver_flags(te)

    # --- indices subcommand ---
    ix = sub.add_parser("indices", help="Tension VTK + displacement field -> strain/SII/RSII")
    _common(ix)
    ix.add_argument("--tension", dest="tension", required=True, help="Tension .vtk")
    ix.add_argument("--field", dest="field", required=True, help="Displacement field directory")
    ix.add_argument("--out", dest="out", required=True, help="Output .vtk")
    ix.add_argument("--report", dest="report", required=True, help="Output report .json")
    _index_flags(ix)

    # --- run subcommand ---
    rn = sub.add_parser("run", help="Run every stage into one artifact directory")
    _common(rn)
    rn.add_argument("--out", dest="output_dir", help="Artifact directory")
    rn.add_argument("--fixed", dest="inputs.fixed", help="Fixed image (.mhd)")
    rn.add_argument("--moving", dest="inputs.moving", help="Moving image (.mhd)")
    rn.add_argument("--labels", dest="inputs.labels", help="Label map (.mhd)")
    rn.add_argument("--from", dest="from_stage", choices=STAGES, help="Resume at this stage")
    _phantom_flags(rn)
    _geometry_flags(rn)
    _registration_flags(rn)
    _solver_flags(rn)
    _index_flags(rn)
    return parser


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    values = vars(args)
    out = {k: v for k, v in values.items() if "." in k and v is not None}
    if values.get("output_dir") is not None:
        out["output_dir"] = values["output_dir"]
    return out


def _cmd_phantom(args: argparse.Namespace, config: PipelineConfig) -> Any:
    if config.phantom is None:
        raise ConfigError("no phantom configured")
    return phantom_stage(config.phantom, args.out, config.solver.pressure_pa)


def _cmd_surface(args: argparse.Namespace, config: PipelineConfig) -> Any:
    return surface_stage(args.labels, args.out, config.geometry)


def _cmd_register(args: argparse.Namespace, config: PipelineConfig) -> Any:
    return register_stage(args.fixed, args.moving, args.out, config.registration)


def _cmd_tension(args: argparse.Namespace, config: PipelineConfig) -> Any:
    return tension_stage(args.surface, args.out, config.solver, axis=config.geometry.axis)


def _cmd_indices(args: argparse.Namespace, config: PipelineConfig) -> Any:
    out = indices_stage(
        args.tension, args.field, args.out, args.report, config.indices, config.config_hash()
    )
    return out.artifacts


def _cmd_run(args: argparse.Namespace, config: PipelineConfig) -> Any:
    return {"output_dir": str(run_pipeline(config, args.from_stage))}


COMMANDS: dict[str, Callable[[argparse.Namespace, PipelineConfig], Any]] = {
    "phantom": _cmd_phantom,
    "surface": _cmd_surface,
    "register": _cmd_register,
    "tension": _cmd_tension,
    "indices": _cmd_indices,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT
    )

    try:
        config = build_config(args.config, _overrides(args))
        result = COMMANDS[args.cmd](args, config)
    except (ConfigError, FileNotFoundError) as exc:
        logger.error(f"configuration error: {exc}")
        return EXIT_CONFIG
    except StageError as exc:
        logger.error(f"stage {exc.stage!r} failed: {exc}")
        return EXIT_STAGE
    except Exception as exc:
        logger.error(f"{args.cmd} failed: {exc}")
        return EXIT_STAGE

    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
