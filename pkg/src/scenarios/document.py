"""
src/scenarios/document.py
=========================
Model documents: the JSON input format, its dataclass form and validation.

  - load_document() / save_document()  -> JSON file <-> ModelDocument
  - document_from_dict() / document_to_dict()
  - validate_document()                -> ModelInputError on any defect

Units are SI throughout. Ramps are lists of [t, value] pairs evaluated by
piecewise-linear interpolation in pseudo-time.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from src.errors import ModelInputError
from src.rotations.so3 import is_rotation

logger = logging.getLogger(__name__)

AUTO_CPP = "auto-cpp"
ENFORCEMENTS = ("lagrange", "penalty")
DEFAULT_RAMP = [[0.0, 0.0], [1.0, 1.0]]


@dataclass
class NodeSpec:
    id: int
    position: List[float]
    triad: Optional[List[List[float]]] = None


@dataclass
class MaterialSpec:
    id: int
    E: float
    nu: float
    R: float
    shear_factor: float = 1.0


@dataclass
class ElementSpec:
    id: int
    material: int
    order: int
    nodes: List[int]
    triads: Optional[List[List[List[float]]]] = None


@dataclass
class CouplingSpec:
    id: int
    element_a: int
    element_b: int
    xi: Union[List[float], str] = AUTO_CPP
    enforcement: str = "lagrange"
    penalty_scale: Optional[float] = None
    eps_r: Optional[float] = None
    eps_theta: Optional[float] = None


@dataclass
class DirichletSpec:
    node: int
    mask: List[bool] = field(default_factory=lambda: [True] * 6)
    displacement: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    rotation: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    ramp: List[List[float]] = field(default_factory=lambda: [list(p) for p in DEFAULT_RAMP])


@dataclass
class LoadSpec:
    node: int
    force: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    moment: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    ramp: List[List[float]] = field(default_factory=lambda: [list(p) for p in DEFAULT_RAMP])
    rotation: Optional[List[float]] = None
    rotation_ramp: Optional[List[List[float]]] = None


@dataclass
class SolveSpec:
    load_steps: int = 10
    newton_tol: Optional[float] = None
    newton_max_iter: Optional[int] = None
    step_cut_allowed: bool = True
    increment_tol: Optional[float] = None


@dataclass
class ModelDocument:
    name: str = "model"
    nodes: List[NodeSpec] = field(default_factory=list)
    materials: List[MaterialSpec] = field(default_factory=list)
    elements: List[ElementSpec] = field(default_factory=list)
    couplings: List[CouplingSpec] = field(default_factory=list)
    connections: List[List[int]] = field(default_factory=list)
    dirichlet: List[DirichletSpec] = field(default_factory=list)
    loads: List[LoadSpec] = field(default_factory=list)
    settings: SolveSpec = field(default_factory=SolveSpec)


# ── Serialisation ─────────────────────────────────────────────────────────────

def document_to_dict(document: ModelDocument) -> dict:
    return asdict(document)


def document_from_dict(data: dict) -> ModelDocument:
    try:
        return ModelDocument(
            name=data.get("name", "model"),
            nodes=[NodeSpec(**n) for n in data.get("nodes", [])],
            materials=[MaterialSpec(**m) for m in data.get("materials", [])],
            elements=[ElementSpec(**e) for e in data.get("elements", [])],
            couplings=[CouplingSpec(**c) for c in data.get("couplings", [])],
            connections=[list(c) for c in data.get("connections", [])],
            dirichlet=[DirichletSpec(**d) for d in data.get("dirichlet", [])],
            loads=[LoadSpec(**l) for l in data.get("loads", [])],
            settings=SolveSpec(**data.get("settings", {})),
        )
    except TypeError as e:
        raise ModelInputError(f"Malformed model document: {e}") from e


def load_document(path) -> ModelDocument:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelInputError(f"Cannot read model file {path}: {e}") from e
    document = document_from_dict(data)
    logger.info(f"Loaded model '{document.name}' from {path}")
    return document


def save_document(document: ModelDocument, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(document_to_dict(document), f, indent=2)
    logger.info(f"Saved model '{document.name}' to {path}")
    return path


# ── Validation ────────────────────────────────────────────────────────────────

def _vector(value, length: int, what: str):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (length,) or not np.all(np.isfinite(arr)):
        raise ModelInputError(f"{what}: expected {length} finite numbers, got {value}")


def _triad(value, what: str):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3, 3) or not is_rotation(arr, 1e-10):
        raise ModelInputError(f"{what}: not a rotation matrix")


def _ramp(points, what: str):
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
        raise ModelInputError(f"{what}: ramp needs at least two [t, value] pairs")
    if np.any(np.diff(arr[:, 0]) <= 0.0):
        raise ModelInputError(f"{what}: ramp abscissae must be strictly increasing")


def _unique(ids, what: str):
    if len(set(ids)) != len(ids):
        raise ModelInputError(f"Duplicate {what} ids")


def validate_document(document: ModelDocument):
    """Referential integrity, positivity and shape checks; raises ModelInputError."""
    _unique([n.id for n in document.nodes], "node")
    _unique([m.id for m in document.materials], "material")
    _unique([e.id for e in document.elements], "element")
    _unique([c.id for c in document.couplings], "coupling")

    node_ids = {n.id for n in document.nodes}
    material_ids = {m.id for m in document.materials}
    element_ids = {e.id for e in document.elements}

    for node in document.nodes:
        _vector(node.position, 3, f"Node {node.id} position")
        if node.triad is not None:
            _triad(node.triad, f"Node {node.id} triad")

    for material in document.materials:
        if material.E <= 0.0 or material.R <= 0.0 or material.shear_factor <= 0.0:
            raise ModelInputError(f"Material {material.id}: E, R and shear_factor must be positive")
        if not -1.0 < material.nu < 0.5:
            raise ModelInputError(f"Material {material.id}: Poisson ratio {material.nu} out of range")

    for element in document.elements:
        if element.material not in material_ids:
            raise ModelInputError(f"Element {element.id}: unknown material {element.material}")
        if element.order not in (1, 2, 3):
            raise ModelInputError(f"Element {element.id}: order must be 1, 2 or 3")
        if len(element.nodes) != element.order + 1:
            raise ModelInputError(f"Element {element.id}: order {element.order} needs {element.order + 1} nodes")
        missing = [n for n in element.nodes if n not in node_ids]
        if missing:
            raise ModelInputError(f"Element {element.id}: unknown nodes {missing}")
        if element.triads is not None:
            if len(element.triads) != len(element.nodes):
                raise ModelInputError(f"Element {element.id}: one triad per node required")
            for k, triad in enumerate(element.triads):
                _triad(triad, f"Element {element.id} triad {k}")

    for coupling in document.couplings:
        for eid in (coupling.element_a, coupling.element_b):
            if eid not in element_ids:
                raise ModelInputError(f"Coupling {coupling.id}: unknown element {eid}")
        if coupling.enforcement not in ENFORCEMENTS:
            raise ModelInputError(f"Coupling {coupling.id}: unknown enforcement '{coupling.enforcement}'")
        if isinstance(coupling.xi, str):
            if coupling.xi != AUTO_CPP:
                raise ModelInputError(f"Coupling {coupling.id}: xi must be a pair or '{AUTO_CPP}'")
        else:
            _vector(coupling.xi, 2, f"Coupling {coupling.id} xi")
            if any(abs(x) > 1.0 for x in coupling.xi):
                raise ModelInputError(f"Coupling {coupling.id}: xi {coupling.xi} outside [-1, 1]")
        if coupling.enforcement == "penalty":
            explicit = coupling.eps_r is not None and coupling.eps_theta is not None
            if not explicit and coupling.penalty_scale is None:
                raise ModelInputError(f"Coupling {coupling.id}: penalty needs penalty_scale or eps_r/eps_theta")
            for value in (coupling.penalty_scale, coupling.eps_r, coupling.eps_theta):
                if value is not None and value <= 0.0:
                    raise ModelInputError(f"Coupling {coupling.id}: penalty parameters must be positive")

    for pair in document.connections:
        if len(pair) != 2 or any(n not in node_ids for n in pair):
            raise ModelInputError(f"Connection {pair}: needs two existing node ids")

    for bc in document.dirichlet:
        if bc.node not in node_ids:
            raise ModelInputError(f"Dirichlet condition on unknown node {bc.node}")
        if len(bc.mask) != 6:
            raise ModelInputError(f"Dirichlet condition on node {bc.node}: mask needs 6 entries")
        _vector(bc.displacement, 3, f"Dirichlet node {bc.node} displacement")
        _vector(bc.rotation, 3, f"Dirichlet node {bc.node} rotation")
        _ramp(bc.ramp, f"Dirichlet node {bc.node}")
        rot_mask = list(bc.mask[3:])
        if any(rot_mask) and not all(rot_mask) and np.any(np.asarray(bc.rotation) != 0.0):
            raise ModelInputError(f"Dirichlet node {bc.node}: non-zero rotation needs all three rotation DOFs fixed")

    for load in document.loads:
        if load.node not in node_ids:
            raise ModelInputError(f"Load on unknown node {load.node}")
        _vector(load.force, 3, f"Load node {load.node} force")
        _vector(load.moment, 3, f"Load node {load.node} moment")
        _ramp(load.ramp, f"Load node {load.node}")
        if load.rotation is not None:
            _vector(load.rotation, 3, f"Load node {load.node} rotation")
            _ramp(load.rotation_ramp or DEFAULT_RAMP, f"Load node {load.node} rotation")

    settings = document.settings
    if settings.load_steps < 1:
        raise ModelInputError("load_steps must be at least 1")
    for name in ("newton_tol", "newton_max_iter", "increment_tol"):
        value = getattr(settings, name)
        if value is not None and value <= 0:
            raise ModelInputError(f"{name} must be positive")
