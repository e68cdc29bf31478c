"""
src/solver/assembly.py
======================
Global residual and tangent of a coupled beam model:
  - assemble()         -> GlobalSystem (element forces, coupling forces, constraint rows)
  - energies()         -> internal and penalty energy
  - reaction_forces()  -> summed residual at constrained translation DOFs
  - pair_multipliers() -> coupling force/moment per pair (Lagrange or eps * gap)

Per coupling side i with kinematic maps H_i (= N_i):
  residual_i  += H_i^T f_i,           f_i = Cqil lambda
  tangent_ij  += H_i^T Cqiqj N_j  (+ H^Delta_i(f_i) for i = j)
  penalty     :  tangent_ij += H_i^T Cqil eps Clqj N_j
  Lagrange    :  columns H_i^T Cqil, rows Clqj N_j, residual rows g
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List

import numpy as np
import scipy.sparse as sp

from src.beams.beam_element import batched_energy, batched_force_tangent, kinematic_maps
from src.coupling.constraints import (
    CouplingPair, coupling_blocks_positional, coupling_blocks_rotational,
    generalized_deformation, penalty_multiplier, penalty_potential,
)
from src.errors import ModelInputError
from src.solver.model import Model, ModelState

logger = logging.getLogger(__name__)


@dataclass
class GlobalSystem:
    residual: np.ndarray
    tangent: sp.csr_matrix
    external: np.ndarray


class _Triplets:
    """COO accumulator; duplicates are summed on conversion."""

    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, block):
        rows, cols = np.asarray(rows), np.asarray(cols)
        self.rows.append(np.repeat(rows, len(cols)))
        self.cols.append(np.tile(cols, len(rows)))
        self.vals.append(np.asarray(block, dtype=float).ravel())

    def add_batched(self, index: np.ndarray, blocks: np.ndarray):
        m = index.shape[1]
        self.rows.append(np.broadcast_to(index[:, :, None], (len(index), m, m)).ravel())
        self.cols.append(np.broadcast_to(index[:, None, :], (len(index), m, m)).ravel())
        self.vals.append(blocks.ravel())

    def to_csr(self, n: int) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((n, n))
        return sp.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))), shape=(n, n)
        ).tocsr()


def _order_groups(model: Model):
    groups = defaultdict(list)
    for element in model.elements:
        groups[element.order].append(element)
    return groups


def _stacked(model: Model, elements, state: ModelState):
    x = np.array([[state.positions[model.dofs.index(n)] for n in e.node_ids] for e in elements])
    lam = np.array([
        [state.rotations[model.dofs.index(n)] @ e.ref_triads[k] for k, n in enumerate(e.node_ids)]
        for e in elements
    ])
    x0 = np.array([e.ref_positions for e in elements])
    lam0 = np.array([e.ref_triads for e in elements])
    cf = np.array([e.constitutive.force_stiffness for e in elements])
    cm = np.array([e.constitutive.moment_stiffness for e in elements])
    return x, lam, x0, lam0, cf, cm


def _pair_multiplier(model: Model, pair: CouplingPair, state: ModelState, gap) -> np.ndarray:
    if pair.is_lagrange:
        return state.multipliers[model.dofs.pair_index[pair.id]].copy()
    return penalty_multiplier(gap, pair.eps_r, pair.eps_theta).as_vector()


def _assemble_pair(model: Model, pair: CouplingPair, state: ModelState, residual: np.ndarray,
                   triplets: _Triplets, method: str):
    sides = []
    for site in (pair.side_a, pair.side_b):
        element = model.element(site.element_id)
        nodal = model.element_states(element, state)
        sides.append((
            model.dofs.element_dofs(element),
            model.cross_section(site, state),
            kinematic_maps(element, nodal, site.xi, method=method),
        ))
    section1, section2 = sides[0][1], sides[1][1]
    gap = generalized_deformation(section1, section2, pair.reference)
    lam = _pair_multiplier(model, pair, state, gap)

    pos = coupling_blocks_positional(section1, section2, pair.reference, lam[:3])
    rot = coupling_blocks_rotational(section1, section2, pair.reference, lam[3:], method=method)
    force_blocks = {i: np.hstack([pos.force_block(i), rot.force_block(i)]) for i in (1, 2)}
    gap_blocks = {j: np.vstack([pos.gap_block(j), rot.gap_block(j)]) for j in (1, 2)}

    if not pair.is_lagrange:
        eps = np.diag([pair.eps_r] * 3 + [pair.eps_theta] * 3)

    for i, (dofs_i, _, maps_i) in enumerate(sides, start=1):
        f_i = force_blocks[i] @ lam
        residual[dofs_i] += maps_i.H.T @ f_i
        for j, (dofs_j, _, maps_j) in enumerate(sides, start=1):
            block = pos.stiffness_block(i, j) + rot.stiffness_block(i, j)
            if not pair.is_lagrange:
                block = block + force_blocks[i] @ eps @ gap_blocks[j]
            contribution = maps_i.H.T @ block @ maps_j.N
            if i == j:
                contribution = contribution + maps_i.HDelta(f_i)
            triplets.add(dofs_i, dofs_j, contribution)

        if pair.is_lagrange:
            lam_dofs = model.dofs.pair_dofs(pair.id)
            triplets.add(dofs_i, lam_dofs, maps_i.H.T @ force_blocks[i])
            triplets.add(lam_dofs, dofs_i, gap_blocks[i] @ maps_i.N)

    if pair.is_lagrange:
        residual[model.dofs.pair_dofs(pair.id)] += gap.as_vector()


def assemble(model: Model, state: ModelState, t: float = 0.0, method: str = "ad") -> GlobalSystem:
    n = model.dofs.n_dofs
    residual = np.zeros(n)
    triplets = _Triplets()

    for order, elements in _order_groups(model).items():
        res, tan, _ = batched_force_tangent(order, *_stacked(model, elements, state))
        index = np.array([model.dofs.element_dofs(e) for e in elements])
        np.add.at(residual, index, res)
        triplets.add_batched(index, tan)

    for pair in model.pairs:
        _assemble_pair(model, pair, state, residual, triplets, method)

    external = model.external_load(t)
    return GlobalSystem(residual=residual - external, tangent=triplets.to_csr(n), external=external)


def pair_multipliers(model: Model, state: ModelState) -> Dict[int, np.ndarray]:
    multipliers = {}
    for pair in model.pairs:
        gap = generalized_deformation(
            model.cross_section(pair.side_a, state), model.cross_section(pair.side_b, state), pair.reference
        )
        multipliers[pair.id] = _pair_multiplier(model, pair, state, gap)
    return multipliers


def energies(model: Model, state: ModelState) -> Dict[str, float]:
    internal = 0.0
    for order, elements in _order_groups(model).items():
        internal += float(np.sum(batched_energy(order, *_stacked(model, elements, state))))
    penalty = 0.0
    for pair in model.pairs:
        if pair.is_lagrange:
            continue
        gap = generalized_deformation(
            model.cross_section(pair.side_a, state), model.cross_section(pair.side_b, state), pair.reference
        )
        penalty += penalty_potential(gap, pair.eps_r, pair.eps_theta)
    return {"internal": internal, "penalty": penalty}


def reaction_forces(model: Model, state: ModelState, node_set: Iterable[int], t: float = 0.0) -> np.ndarray:
    """Sum of residual entries at the constrained translation DOFs of node_set."""
    masks: Dict[int, np.ndarray] = {}
    for bc in model.dirichlet:
        owner = model.dofs.owner(bc.node)
        masks[owner] = masks.get(owner, np.zeros(3, dtype=bool)) | bc.mask[:3]

    owners: List[int] = []
    for node in node_set:
        owner = model.dofs.owner(node)
        if not masks.get(owner, np.zeros(3, dtype=bool)).any():
            raise ModelInputError(f"Node {node} carries no translational Dirichlet condition")
        if owner not in owners:
            owners.append(owner)

    residual = assemble(model, state, t).residual
    total = np.zeros(3)
    for owner in owners:
        dofs = model.dofs.node_dofs(owner)[:3]
        total += np.where(masks[owner], residual[dofs], 0.0)
    return total
