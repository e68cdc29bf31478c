"""
src/cli/commands.py
===================
Command-line handlers:
  solve <model.json>        -> solve a model document
  scenario <name>           -> generate and solve a reference example
  sweep                     -> penalty (or connector) sweep on the L-shape
  convergence               -> crossed-beam mesh convergence study
  objectivity               -> energy under a superimposed rigid rotation
  cylinder                  -> wire-wound cylinder buckling curve

Exit codes: 0 success, 1 input error, 2 solver failure.
"""

import argparse
import logging
from typing import List, Optional

from config.settings import (
    CONVERGENCE_MAX_K, CONVERGENCE_REFERENCE_ELEMENTS, CYLINDER_ELEMS_PER_AXIAL, CYLINDER_ELEMS_PER_RING,
    CYLINDER_ORDER, CYLINDER_STEPS, L_SHAPE_ELEMENTS, LOG_LEVEL, OBJECTIVITY_ELEMENTS,
    OBJECTIVITY_LOADING_STEPS, OBJECTIVITY_ROTATION_STEPS, OUTPUT_DIR, PENALTY_SCALES,
)
from src.errors import ConvergenceError, ModelInputError, ProjectionError, SingularCouplingError
from src.reports.csv_writer import StudyResult, summary_lines, write_csv
from src.scenarios.document import load_document, save_document
from src.scenarios.generators import (
    generate_crossed_beams, generate_double_helix, generate_l_shape, loaded_node,
)
from src.scenarios.studies import (
    energy_result, position_result, run_connector_sweep, run_convergence_study, run_cylinder_buckling,
    run_objectivity_test, run_penalty_sweep, solve_document,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2

SCENARIOS = ("l-shape", "crossed-beams", "cylinder", "double-helix")


# ── Helpers ───────────────────────────────────────────────────────────────────

def _overrides(args) -> dict:
    return {"newton_tol": args.tol, "load_steps": args.steps}


def _emit(result: StudyResult, args):
    path = write_csv(result, args.out)
    for line in summary_lines(result):
        logger.info(f"{result.name}: {line}")
    for line in result.failures:
        logger.warning(f"{result.name}: failed run {line}")
    return path


def _penalty_scale(args) -> Optional[float]:
    if args.enforcement == "penalty":
        return args.penalty_scale if args.penalty_scale is not None else 1.0
    return None


# ── Handlers ──────────────────────────────────────────────────────────────────

def cmd_solve(args) -> int:
    document = load_document(args.model)
    model, history = solve_document(document, **_overrides(args))
    _emit(energy_result(f"{document.name}-energy", history), args)
    _emit(position_result(f"{document.name}-positions", history, model.dofs.node_order), args)
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.name == "cylinder":
        return cmd_cylinder(args)
    if args.name == "l-shape":
        enforcement = "nodal" if args.nodal else args.enforcement
        document = generate_l_shape(args.offset, args.elements, enforcement, _penalty_scale(args),
                                    args.connector_stiffness, args.order)
    elif args.name == "crossed-beams":
        document = generate_crossed_beams(args.elements, args.enforcement, _penalty_scale(args), args.order)
    else:
        document = generate_double_helix(penalty_scale=args.penalty_scale or 1.0)

    if args.save_model:
        save_document(document, args.save_model)
    _, history = solve_document(document, **_overrides(args))
    _emit(energy_result(f"{document.name}-energy", history), args)
    _emit(position_result(f"{document.name}-tip", history, [loaded_node(document)]), args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    scales = args.scales or PENALTY_SCALES
    if args.connector:
        result = run_connector_sweep(args.offset, scales, args.elements, **_overrides(args))
    else:
        document = generate_l_shape(args.offset, args.elements, "lagrange", order=args.order)
        result = run_penalty_sweep(document, scales, **_overrides(args))
    _emit(result, args)
    return EXIT_OK


def cmd_convergence(args) -> int:
    result = run_convergence_study(args.max_k, args.reference_elements, args.enforcement, _penalty_scale(args),
                                   **_overrides(args))
    _emit(result, args)
    return EXIT_OK


def cmd_objectivity(args) -> int:
    result = run_objectivity_test(args.enforcement, args.elements, args.rotation_steps,
                                  loading_steps=args.steps or OBJECTIVITY_LOADING_STEPS,
                                  penalty_scale=_penalty_scale(args), newton_tol=args.tol)
    _emit(result, args)
    return EXIT_OK


def cmd_cylinder(args) -> int:
    result = run_cylinder_buckling(
        args.n_axi, args.n_circ, args.elems_per_ring, args.elems_per_axial, args.order,
        args.steps or CYLINDER_STEPS, newton_tol=args.tol,
    )
    _emit(result, args)
    return EXIT_OK


# ── Parser ────────────────────────────────────────────────────────────────────

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--enforcement", choices=("lagrange", "penalty"), default="lagrange")
    common.add_argument("--penalty-scale", type=float, default=None)
    common.add_argument("--out", default=OUTPUT_DIR, help="output directory for CSV files")
    common.add_argument("--tol", type=float, default=None, help="Newton residual tolerance")
    common.add_argument("--steps", type=int, default=None, help="number of load steps")
    common.add_argument("--log-level", type=str.upper, default=LOG_LEVEL.upper(),
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return common


def _cylinder_args(parser: argparse.ArgumentParser):
    parser.add_argument("--n-axi", type=int, default=16)
    parser.add_argument("--n-circ", type=int, default=10)
    parser.add_argument("--elems-per-ring", type=int, default=CYLINDER_ELEMS_PER_RING)
    parser.add_argument("--elems-per-axial", type=int, default=CYLINDER_ELEMS_PER_AXIAL)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="beamcouple", description="Beam-to-beam point coupling solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve a JSON model document")
    p.add_argument("model")
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("scenario", parents=[common], help="generate and solve a reference example")
    p.add_argument("name", choices=SCENARIOS)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--elements", type=int, default=L_SHAPE_ELEMENTS)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--nodal", action="store_true", help="L-shape: share the DOFs of B and C")
    p.add_argument("--connector-stiffness", type=float, default=None)
    p.add_argument("--save-model", default=None, help="write the generated document to this path")
    _cylinder_args(p)
    p.set_defaults(handler=cmd_scenario)

    p = sub.add_parser("sweep", parents=[common], help="L-shape penalty or connector sweep")
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--elements", type=int, default=L_SHAPE_ELEMENTS)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--scales", type=float, nargs="+", default=None)
    p.add_argument("--connector", action="store_true")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("convergence", parents=[common], help="crossed-beam mesh convergence")
    p.add_argument("--max-k", type=int, default=CONVERGENCE_MAX_K)
    p.add_argument("--reference-elements", type=int, default=CONVERGENCE_REFERENCE_ELEMENTS)
    p.set_defaults(handler=cmd_convergence)

    p = sub.add_parser("objectivity", parents=[common], help="rigid rotation of the loaded crossed beams")
    p.add_argument("--elements", type=int, default=OBJECTIVITY_ELEMENTS)
    p.add_argument("--rotation-steps", type=int, default=OBJECTIVITY_ROTATION_STEPS)
    p.set_defaults(handler=cmd_objectivity)

    p = sub.add_parser("cylinder", parents=[common], help="wire-wound cylinder buckling")
    _cylinder_args(p)
    p.add_argument("--order", type=int, default=CYLINDER_ORDER)
    p.set_defaults(handler=cmd_cylinder)
    return parser


def cli_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT

    logging.getLogger().setLevel(args.log_level)
    if args.command == "scenario" and args.order is None:
        args.order = CYLINDER_ORDER if args.name == "cylinder" else 1

    try:
        return args.handler(args)
    except (ModelInputError, ProjectionError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_INPUT
    except (ConvergenceError, SingularCouplingError) as e:
        logger.error(f"Solver failure: {e}")
        return EXIT_SOLVER
