"""
src/scenarios/studies.py
========================
Study drivers. Each one builds its models, solves them and returns a StudyResult:
  - run_penalty_sweep()       -> tip position vs penalty scale, error vs Lagrange
  - run_connector_sweep()     -> same with a stiff connector beam instead of a coupling
  - run_convergence_study()   -> crossed-beam mesh convergence, even/odd element counts
  - run_objectivity_test()    -> energy during a superimposed rigid rotation
  - run_cylinder_buckling()   -> reaction force vs prescribed displacement

A failed solve inside a sweep is logged, written as a row of NaN and listed in
StudyResult.failures; the sweep continues.
"""

import copy
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import BeamCouplingError, ModelInputError
from src.reports.csv_writer import (
    CONVERGENCE_HEADER, CYLINDER_HEADER, ENERGY_HEADER, POSITION_HEADER, SWEEP_HEADER, StudyResult,
)
from src.scenarios.document import ModelDocument
from src.scenarios.generators import (
    add_rigid_rotation, cylinder_bottom_nodes, cylinder_top_nodes, generate_crossed_beams,
    generate_l_shape, generate_wire_cylinder, loaded_node,
)
from src.solver.assembly import reaction_forces
from src.solver.model import Model, build_model
from src.solver.newton import SolutionHistory, SolveSettings, newton_solve

logger = logging.getLogger(__name__)

# ── Helpers ───────────────────────────────────────────────────────────────────

def solve_document(document: ModelDocument, **overrides) -> Tuple[Model, SolutionHistory]:
    model = build_model(document)
    settings = SolveSettings.for_model(model, **overrides)
    return model, newton_solve(model, settings)


def tip_position(document: ModelDocument, node: int, **overrides) -> np.ndarray:
    _, history = solve_document(document, **overrides)
    return history.position(node)


def relative_error(value: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(value - reference) / np.linalg.norm(reference))


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log(y) over log(x); NaN with fewer than two usable points."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    usable = np.isfinite(x) & np.isfinite(y) & (x > 0.0) & (y > 0.0)
    if usable.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(x[usable]), np.log(y[usable]), 1)
    return float(slope)


def has_limit_point(u_hat: Sequence[float], force: Sequence[float]) -> bool:
    """True if the force drops at some step while the displacement still grows, after an initial rise."""
    u, f = np.asarray(u_hat, dtype=float), np.asarray(force, dtype=float)
    rising = False
    for i in range(1, len(u)):
        if u[i] <= u[i - 1]:
            continue
        if f[i] > f[i - 1]:
            rising = True
        elif rising and f[i] < f[i - 1]:
            return True
    return False


def energy_result(name: str, history: SolutionHistory) -> StudyResult:
    result = StudyResult(name, list(ENERGY_HEADER))
    for record in history.steps:
        result.add_row(record.step, record.time, record.internal_energy, record.penalty_energy)
    return result


def position_result(name: str, history: SolutionHistory, nodes: Iterable[int]) -> StudyResult:
    result = StudyResult(name, list(POSITION_HEADER))
    for node in nodes:
        result.add_row(node, *history.position(node))
    return result


def _with_enforcement(document: ModelDocument, enforcement: str, scale: Optional[float] = None) -> ModelDocument:
    variant = copy.deepcopy(document)
    for coupling in variant.couplings:
        coupling.enforcement = enforcement
        coupling.penalty_scale = scale
        coupling.eps_r = coupling.eps_theta = None
    return variant


def _record_failure(result: StudyResult, label: str, error: BeamCouplingError, *leading):
    logger.error(f"Run {label} failed: {error}")
    result.add_failure(label, error, *leading)


# ── Penalty / connector sweeps ────────────────────────────────────────────────

def run_penalty_sweep(document: ModelDocument, scales: Sequence[float], tip_node: Optional[int] = None,
                      **overrides) -> StudyResult:
    """Tip position per penalty scale; the Lagrange solution of the same document is the reference."""
    tip_node = tip_node if tip_node is not None else loaded_node(document)
    logger.info(f"Penalty sweep on '{document.name}' over {list(scales)}")
    reference = tip_position(_with_enforcement(document, "lagrange"), tip_node, **overrides)
    result = StudyResult(f"{document.name}-penalty-sweep", list(SWEEP_HEADER))

    for scale in scales:
        try:
            tip = tip_position(_with_enforcement(document, "penalty", scale), tip_node, **overrides)
            result.add_row(float(scale), *tip, relative_error(tip, reference))
        except BeamCouplingError as e:
            _record_failure(result, f"penalty {scale:g}", e, float(scale))

    _summarise_sweep(result, reference)
    return result


def run_connector_sweep(offset: float, scales: Sequence[float], n_elements: int = 10, **overrides) -> StudyResult:
    """Tip position with a connector beam of stiffness scale * E between B and C."""
    logger.info(f"Connector sweep, offset {offset:g}, over {list(scales)}")
    lagrange = generate_l_shape(offset, n_elements, enforcement="lagrange")
    tip_node = loaded_node(lagrange)
    reference = tip_position(lagrange, tip_node, **overrides)
    result = StudyResult(f"l-shape-a{offset:g}-connector-sweep", list(SWEEP_HEADER))

    for scale in scales:
        try:
            document = generate_l_shape(offset, n_elements, connector_stiffness=scale)
            tip = tip_position(document, tip_node, **overrides)
            result.add_row(float(scale), *tip, relative_error(tip, reference))
        except BeamCouplingError as e:
            _record_failure(result, f"connector {scale:g}", e, float(scale))

    _summarise_sweep(result, reference)
    return result


def _summarise_sweep(result: StudyResult, reference: np.ndarray):
    ok = [row for row in result.rows if np.isfinite(row[4])]
    result.summary["reference_rx"], result.summary["reference_ry"], result.summary["reference_rz"] = (
        float(v) for v in reference
    )
    result.summary["slope"] = loglog_slope([r[0] for r in ok], [r[4] for r in ok])


# ── Mesh convergence ──────────────────────────────────────────────────────────

def convergence_meshes(max_k: int) -> List[Tuple[int, str]]:
    meshes = []
    for k in range(1, max_k + 1):
        meshes.append((2**k, "even"))
        meshes.append((2**k + 1, "odd"))
    return meshes


def run_convergence_study(max_k: int = 7, reference_elements: int = 512, enforcement: str = "lagrange",
                          penalty_scale: Optional[float] = None, **overrides) -> StudyResult:
    meshes = convergence_meshes(max_k)
    if any(n >= reference_elements for n, _ in meshes):
        raise ModelInputError(
            f"Reference mesh ({reference_elements}) must be finer than all study meshes"
        )
    logger.info(f"Convergence study: {len(meshes)} meshes against n_e={reference_elements}")
    reference_doc = generate_crossed_beams(reference_elements, enforcement, penalty_scale)
    reference = tip_position(reference_doc, loaded_node(reference_doc), **overrides)

    result = StudyResult("crossed-beams-convergence", list(CONVERGENCE_HEADER))
    for n_elements, parity in meshes:
        document = generate_crossed_beams(n_elements, enforcement, penalty_scale)
        try:
            tip = tip_position(document, loaded_node(document), **overrides)
            result.add_row(n_elements, parity, relative_error(tip, reference))
        except BeamCouplingError as e:
            _record_failure(result, f"mesh n_e={n_elements}", e, n_elements, parity)

    for parity in ("even", "odd"):
        rows = [r for r in result.rows if r[1] == parity and np.isfinite(r[2])]
        result.summary[f"slope_{parity}"] = loglog_slope([2.0 / r[0] for r in rows], [r[2] for r in rows])
    logger.info(f"Convergence slopes: even {result.summary['slope_even']:.3f}, odd {result.summary['slope_odd']:.3f}")
    return result


# ── Objectivity ───────────────────────────────────────────────────────────────

def run_objectivity_test(enforcement: str = "lagrange", n_elements: int = 9, rotation_steps: int = 50,
                         loading_steps: int = 10, penalty_scale: Optional[float] = None,
                         **overrides) -> StudyResult:
    """Crossed beams loaded, then rigidly rotated by 2 pi about e1 with co-rotated loads."""
    document = add_rigid_rotation(
        generate_crossed_beams(n_elements, enforcement, penalty_scale), loading_steps, rotation_steps
    )
    overrides.pop("load_steps", None)
    model, history = solve_document(document, **overrides)
    result = energy_result(f"{document.name}-{enforcement}-objectivity", history)

    totals = history.total_energies()
    start = totals[loading_steps]
    rotation_phase = totals[loading_steps:]
    result.summary["energy_at_rotation_start"] = float(start)
    result.summary["max_relative_energy_change"] = float(np.max(np.abs(rotation_phase - start)) / abs(start))
    loading = totals[: loading_steps + 1]
    result.summary["loading_monotone"] = float(np.all(np.diff(loading) > 0.0))
    before = history.steps[loading_steps].state.positions
    after = history.final_state.positions
    result.summary["rotate_back_error"] = float(np.max(np.linalg.norm(after - before, axis=1)))
    return result


# ── Cylinder buckling ─────────────────────────────────────────────────────────

def run_cylinder_buckling(n_axi: int = 16, n_circ: int = 10, elems_per_ring: int = 12, elems_per_axial: int = 8,
                          order: int = 2, load_steps: int = 100, **overrides) -> StudyResult:
    """F_R is the compressive e3 reaction summed over the top supports."""
    document = generate_wire_cylinder(n_axi, n_circ, elems_per_ring, elems_per_axial, order, load_steps)
    top, bottom = cylinder_top_nodes(document), cylinder_bottom_nodes(document)
    u_hat = document.dirichlet[1].displacement[2]
    overrides.pop("load_steps", None)
    model, history = solve_document(document, **overrides)

    result = StudyResult(document.name, list(CYLINDER_HEADER))
    worst_balance = 0.0
    for record in history.steps:
        ramp = model.dirichlet[1].ramp(record.time)
        top_reaction = reaction_forces(model, record.state, top, record.time)
        bottom_reaction = reaction_forces(model, record.state, bottom, record.time)
        result.add_row(-u_hat * ramp, -float(top_reaction[2]))
        applied = model.external_load(record.time)
        balance = top_reaction + bottom_reaction + sum(
            applied[model.dofs.node_dofs(load.node)[:3]] for load in model.loads
        )
        worst_balance = max(worst_balance, float(np.linalg.norm(balance)))

    forces = result.column("F_R")
    result.summary["peak_force"] = float(np.max(forces))
    result.summary["has_limit_point"] = float(has_limit_point(result.column("u_hat"), forces))
    result.summary["equilibrium_error"] = worst_balance
    return result
