"""
src/solver/model.py
===================
Discrete model built from a ModelDocument:
  - build_model()                  -> Model (elements, coupling pairs, BCs, loads, DofMap)
  - nodal_connection_constraint()  -> Model with two coincident nodes sharing their DOFs
  - ModelState                     -> nodal positions, nodal rotations, multipliers

Nodes carry a position and a rotation R relative to the reference
configuration. The triad of element node k is R Lambda0_k, with Lambda0_k the
element's own reference triad, so beams with different reference triads can
share a node.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from src.beams.beam_element import (
    BeamElement, NodeState, element_nodes, evaluate_cross_section, lagrange_basis,
)
from src.beams.sections import CrossSectionConstitutive
from src.coupling.constraints import (
    CouplingPair, CouplingReference, CouplingSite, LAGRANGE, default_penalties,
)
from src.coupling.projection import closest_point_projection
from src.errors import ModelInputError
from src.rotations.so3 import exp_so3, smallest_rotation
from src.scenarios.document import AUTO_CPP, DEFAULT_RAMP, ModelDocument, SolveSpec, validate_document

logger = logging.getLogger(__name__)

COINCIDENCE_TOL = 1e-10


# ── Load histories ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Ramp:
    points: np.ndarray

    @classmethod
    def from_points(cls, points) -> "Ramp":
        return cls(np.asarray(points if points is not None else DEFAULT_RAMP, dtype=float))

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.points[:, 0], self.points[:, 1]))

    @property
    def end(self) -> float:
        return float(self.points[-1, 0])


@dataclass(frozen=True)
class DirichletCondition:
    node: int
    mask: np.ndarray
    displacement: np.ndarray
    rotation: np.ndarray
    ramp: Ramp


@dataclass(frozen=True)
class NodalLoad:
    node: int
    force: np.ndarray
    moment: np.ndarray
    ramp: Ramp
    rotation: Optional[np.ndarray] = None
    rotation_ramp: Optional[Ramp] = None

    def at(self, t: float):
        """Force and moment at pseudo-time t, co-rotated if a load rotation is given."""
        scale = self.ramp(t)
        force, moment = scale * self.force, scale * self.moment
        if self.rotation is not None:
            q = np.asarray(exp_so3(self.rotation_ramp(t) * self.rotation))
            force, moment = q @ force, q @ moment
        return force, moment


# ── DOF map / state ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DofMap:
    """Nodes by id (6 DOFs each), then 6 multiplier DOFs per Lagrange pair by pair id."""
    node_order: tuple
    node_index: Dict[int, int]
    aliases: Dict[int, int]
    pair_order: tuple
    pair_index: Dict[int, int]

    @classmethod
    def build(cls, node_ids, aliases: Dict[int, int], pairs: List[CouplingPair]) -> "DofMap":
        owners = tuple(sorted({aliases.get(n, n) for n in node_ids}))
        lagrange = tuple(sorted(p.id for p in pairs if p.is_lagrange))
        return cls(
            node_order=owners,
            node_index={n: i for i, n in enumerate(owners)},
            aliases=dict(aliases),
            pair_order=lagrange,
            pair_index={p: k for k, p in enumerate(lagrange)},
        )

    @property
    def n_node_dofs(self) -> int:
        return 6 * len(self.node_order)

    @property
    def n_dofs(self) -> int:
        return self.n_node_dofs + 6 * len(self.pair_order)

    def owner(self, node_id: int) -> int:
        return self.aliases.get(node_id, node_id)

    def index(self, node_id: int) -> int:
        try:
            return self.node_index[self.owner(node_id)]
        except KeyError as e:
            raise ModelInputError(f"Unknown node id {node_id}") from e

    def node_dofs(self, node_id: int) -> np.ndarray:
        start = 6 * self.index(node_id)
        return np.arange(start, start + 6)

    def pair_dofs(self, pair_id: int) -> np.ndarray:
        start = self.n_node_dofs + 6 * self.pair_index[pair_id]
        return np.arange(start, start + 6)

    def element_dofs(self, element: BeamElement) -> np.ndarray:
        return np.concatenate([self.node_dofs(n) for n in element.node_ids])


@dataclass
class ModelState:
    positions: np.ndarray
    rotations: np.ndarray
    multipliers: np.ndarray

    def copy(self) -> "ModelState":
        return ModelState(self.positions.copy(), self.rotations.copy(), self.multipliers.copy())

    def apply_increment(self, dofs: DofMap, delta: np.ndarray):
        """Positions and multipliers additively, rotations by left spin exp(dtheta) R."""
        nodal = delta[:dofs.n_node_dofs].reshape(-1, 6)
        self.positions += nodal[:, :3]
        for i, spin in enumerate(nodal[:, 3:]):
            if np.any(spin):
                self.rotations[i] = np.asarray(exp_so3(spin)) @ self.rotations[i]
        self.multipliers += delta[dofs.n_node_dofs:].reshape(-1, 6)


# ── Model ─────────────────────────────────────────────────────────────────────

@dataclass
class Model:
    name: str
    reference_positions: Dict[int, np.ndarray]
    explicit_triads: Dict[int, Optional[np.ndarray]]
    elements: List[BeamElement]
    pairs: List[CouplingPair]
    dirichlet: List[DirichletCondition] = field(default_factory=list)
    loads: List[NodalLoad] = field(default_factory=list)
    solve_spec: SolveSpec = field(default_factory=SolveSpec)
    aliases: Dict[int, int] = field(default_factory=dict)
    dofs: Optional[DofMap] = None

    def __post_init__(self):
        self.elements = sorted(self.elements, key=lambda e: e.id)
        self.pairs = sorted(self.pairs, key=lambda p: p.id)
        self.dofs = DofMap.build(self.reference_positions.keys(), self.aliases, self.pairs)
        self._elements_by_id = {e.id: e for e in self.elements}

    def element(self, element_id: int) -> BeamElement:
        try:
            return self._elements_by_id[element_id]
        except KeyError as e:
            raise ModelInputError(f"Unknown element id {element_id}") from e

    @property
    def time_end(self) -> float:
        ends = [bc.ramp.end for bc in self.dirichlet] + [load.ramp.end for load in self.loads]
        ends += [load.rotation_ramp.end for load in self.loads if load.rotation_ramp is not None]
        return max(ends) if ends else 1.0

    def reference_state(self) -> ModelState:
        positions = np.array([self.reference_positions[n] for n in self.dofs.node_order], dtype=float)
        rotations = np.tile(np.eye(3), (len(self.dofs.node_order), 1, 1))
        return ModelState(positions.reshape(-1, 3), rotations.reshape(-1, 3, 3),
                          np.zeros((len(self.dofs.pair_order), 6)))

    def element_states(self, element: BeamElement, state: ModelState) -> List[NodeState]:
        states = []
        for k, node_id in enumerate(element.node_ids):
            i = self.dofs.index(node_id)
            states.append(NodeState(state.positions[i].copy(), state.rotations[i] @ element.ref_triads[k]))
        return states

    def cross_section(self, site: CouplingSite, state: ModelState):
        element = self.element(site.element_id)
        return evaluate_cross_section(element, self.element_states(element, state), site.xi)

    def constrained_dofs(self) -> np.ndarray:
        constrained = set()
        for bc in self.dirichlet:
            dofs = self.dofs.node_dofs(bc.node)
            constrained.update(int(d) for d in dofs[bc.mask])
        return np.array(sorted(constrained), dtype=int)

    def free_dofs(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.dofs.n_dofs), self.constrained_dofs())

    def external_load(self, t: float) -> np.ndarray:
        f_ext = np.zeros(self.dofs.n_dofs)
        for load in self.loads:
            force, moment = load.at(t)
            f_ext[self.dofs.node_dofs(load.node)] += np.concatenate([force, moment])
        return f_ext

    def apply_prescribed(self, state: ModelState, t: float):
        """Set constrained positions and fully prescribed rotations to their values at t."""
        for bc in self.dirichlet:
            i = self.dofs.index(bc.node)
            scale = bc.ramp(t)
            reference = self.reference_positions[self.dofs.owner(bc.node)]
            target = reference + scale * bc.displacement
            state.positions[i, bc.mask[:3]] = target[bc.mask[:3]]
            if np.all(bc.mask[3:]):
                state.rotations[i] = np.asarray(exp_so3(scale * bc.rotation))


# ── Construction ──────────────────────────────────────────────────────────────

def _element_triads(spec, positions: np.ndarray, node_triads) -> np.ndarray:
    if spec.triads is not None:
        return np.asarray(spec.triads, dtype=float)
    triads = []
    for k, xi in enumerate(element_nodes(spec.order)):
        if node_triads[k] is not None:
            triads.append(np.asarray(node_triads[k], dtype=float))
            continue
        _, d_shape, _ = lagrange_basis(spec.order, xi)
        triads.append(smallest_rotation(np.eye(3)[0], d_shape @ positions))
    return np.array(triads)


def nodal_connection_constraint(model: Model, node_a: int, node_b: int) -> Model:
    """Merge the six DOFs of node_b into node_a."""
    for node in (node_a, node_b):
        if node not in model.reference_positions:
            raise ModelInputError(f"Nodal connection: unknown node {node}")
    gap = np.linalg.norm(model.reference_positions[node_a] - model.reference_positions[node_b])
    if gap > COINCIDENCE_TOL:
        raise ModelInputError(f"Nodal connection {node_a}-{node_b}: reference positions differ by {gap:.3e}")
    triad_a, triad_b = model.explicit_triads.get(node_a), model.explicit_triads.get(node_b)
    if triad_a is not None and triad_b is not None and np.linalg.norm(triad_a - triad_b) > COINCIDENCE_TOL:
        raise ModelInputError(f"Nodal connection {node_a}-{node_b}: reference triads differ")

    owner_a, owner_b = model.dofs.owner(node_a), model.dofs.owner(node_b)
    aliases = dict(model.aliases)
    if owner_a != owner_b:
        for node, owner in list(aliases.items()):
            if owner == owner_b:
                aliases[node] = owner_a
        aliases[owner_b] = owner_a
        aliases[node_b] = owner_a
    merged = replace(model, aliases=aliases, dofs=None)
    logger.debug(f"Connected node {node_b} to node {node_a}: {merged.dofs.n_dofs} DOFs")
    return merged


def build_model(document: ModelDocument) -> Model:
    validate_document(document)
    positions = {n.id: np.asarray(n.position, dtype=float) for n in document.nodes}
    explicit = {n.id: (np.asarray(n.triad, dtype=float) if n.triad is not None else None) for n in document.nodes}

    sections = {
        m.id: CrossSectionConstitutive.circular(m.E, m.nu, m.R, m.shear_factor) for m in document.materials
    }
    elements = []
    for spec in document.elements:
        ref_positions = np.array([positions[n] for n in spec.nodes])
        triads = _element_triads(spec, ref_positions, [explicit[n] for n in spec.nodes])
        elements.append(BeamElement(spec.id, tuple(spec.nodes), spec.order, ref_positions, triads,
                                    sections[spec.material]))
    by_id = {e.id: e for e in elements}

    pairs = []
    for spec in document.couplings:
        element_a, element_b = by_id[spec.element_a], by_id[spec.element_b]
        if spec.xi == AUTO_CPP:
            projection = closest_point_projection(element_a, element_b)
            xi_a, xi_b = projection.xi_a, projection.xi_b
        else:
            xi_a, xi_b = (float(x) for x in spec.xi)
        reference = CouplingReference.from_states(
            evaluate_cross_section(element_a, element_a.reference_states(), xi_a),
            evaluate_cross_section(element_b, element_b.reference_states(), xi_b),
        )
        eps_r, eps_theta = spec.eps_r, spec.eps_theta
        if spec.enforcement != LAGRANGE and (eps_r is None or eps_theta is None):
            eps_r, eps_theta = default_penalties(element_a.constitutive, element_b.constitutive, spec.penalty_scale)
        pairs.append(CouplingPair(
            id=spec.id,
            side_a=CouplingSite(spec.element_a, xi_a),
            side_b=CouplingSite(spec.element_b, xi_b),
            reference=reference,
            enforcement=spec.enforcement,
            eps_r=eps_r,
            eps_theta=eps_theta,
        ))

    dirichlet = [
        DirichletCondition(
            node=bc.node,
            mask=np.asarray(bc.mask, dtype=bool),
            displacement=np.asarray(bc.displacement, dtype=float),
            rotation=np.asarray(bc.rotation, dtype=float),
            ramp=Ramp.from_points(bc.ramp),
        )
        for bc in document.dirichlet
    ]
    loads = [
        NodalLoad(
            node=load.node,
            force=np.asarray(load.force, dtype=float),
            moment=np.asarray(load.moment, dtype=float),
            ramp=Ramp.from_points(load.ramp),
            rotation=None if load.rotation is None else np.asarray(load.rotation, dtype=float),
            rotation_ramp=None if load.rotation is None else Ramp.from_points(load.rotation_ramp),
        )
        for load in document.loads
    ]

    model = Model(
        name=document.name,
        reference_positions=positions,
        explicit_triads=explicit,
        elements=elements,
        pairs=pairs,
        dirichlet=dirichlet,
        loads=loads,
        solve_spec=document.settings,
    )
    for node_a, node_b in document.connections:
        model = nodal_connection_constraint(model, node_a, node_b)

    logger.info(
        f"Built model '{model.name}': {len(model.dofs.node_order)} nodes, {len(elements)} elements, "
        f"{len(pairs)} coupling pairs, {model.dofs.n_dofs} DOFs"
    )
    return model
