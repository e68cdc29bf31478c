"""
src/scenarios/generators.py
===========================
Model documents for the reference examples:
  - generate_l_shape()         -> two perpendicular beams joined at one point
  - generate_crossed_beams()   -> two beams crossing at their midpoints
  - generate_wire_cylinder()   -> interwoven axial fibers and rings
  - generate_double_helix()    -> two helices joined by connector beams

Every generator returns a ModelDocument; nothing is solved here.
"""

import logging
from typing import List, Optional

import numpy as np

from src.errors import ModelInputError
from src.scenarios.document import (
    AUTO_CPP, CouplingSpec, DirichletSpec, ElementSpec, LoadSpec, MaterialSpec,
    ModelDocument, NodeSpec, SolveSpec,
)

logger = logging.getLogger(__name__)

# ── Example constants ─────────────────────────────────────────────────────────
BEAM_E = 1.0
BEAM_NU = 0.0
BEAM_RADIUS = 0.05
TIP_FORCE = 5e-6
TIP_MOMENT = 5e-6
L_SHAPE_STEPS = 10

CYLINDER_DIAMETER = 2.0
CYLINDER_RADIUS = 0.04
CYLINDER_U_HAT = 0.2
IMPERFECTION_LOAD = 1e-6

HELIX_RADIUS = 2.0
HELIX_ANGLE = np.pi / 4.0
HELIX_TWIST = 2.0 * np.pi
HELIX_BEAM_RADIUS = 0.2
CONNECTOR_RADIUS = 0.1
HELIX_FORCE = -1e-3


class _Builder:
    """Accumulates nodes and elements with consecutive ids."""

    def __init__(self, name: str):
        self.document = ModelDocument(name=name)

    def material(self, E: float, nu: float, R: float) -> int:
        material_id = len(self.document.materials) + 1
        self.document.materials.append(MaterialSpec(material_id, E, nu, R))
        return material_id

    def node(self, position) -> int:
        node_id = len(self.document.nodes) + 1
        self.document.nodes.append(NodeSpec(node_id, [float(v) for v in position]))
        return node_id

    def element(self, material: int, order: int, nodes: List[int], triads=None) -> int:
        element_id = len(self.document.elements) + 1
        self.document.elements.append(ElementSpec(element_id, material, order, list(nodes), triads))
        return element_id

    def line(self, start, end, n_elements: int, material: int, order: int = 1):
        """Straight beam; returns (node ids, element ids)."""
        if n_elements < 1:
            raise ModelInputError("A beam needs at least one element")
        start, end = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
        n_points = n_elements * order + 1
        nodes = [self.node(start + (end - start) * k / (n_points - 1)) for k in range(n_points)]
        elements = [self.element(material, order, nodes[e * order:(e + 1) * order + 1]) for e in range(n_elements)]
        return nodes, elements

    def curve(self, func, tangent, normal, params, n_elements: int, material: int, order: int,
              closed: bool = False):
        """Beam along a parametric curve with triads (tangent, normal-seeded); returns (nodes, elements)."""
        n_points = n_elements * order + (0 if closed else 1)
        samples = params[0] + (params[1] - params[0]) * np.arange(n_points) / (n_elements * order)
        nodes = [self.node(func(s)) for s in samples]
        triads = [_frame(tangent(s), normal(s)) for s in samples]
        if closed:
            nodes.append(nodes[0])
            triads.append(triads[0])
        elements = [
            self.element(material, order, nodes[e * order:(e + 1) * order + 1],
                         [t.tolist() for t in triads[e * order:(e + 1) * order + 1]])
            for e in range(n_elements)
        ]
        return nodes, elements


def _frame(tangent, normal) -> np.ndarray:
    """Orthonormal triad: first director along tangent, second from normal minus its tangent part."""
    g1 = np.asarray(tangent, dtype=float)
    g1 = g1 / np.linalg.norm(g1)
    g2 = np.asarray(normal, dtype=float) - (np.dot(normal, g1)) * g1
    g2 = g2 / np.linalg.norm(g2)
    return np.column_stack([g1, g2, np.cross(g1, g2)])


def _clamp(node: int, displacement=(0.0, 0.0, 0.0), ramp=None) -> DirichletSpec:
    spec = DirichletSpec(node=node, displacement=[float(v) for v in displacement])
    if ramp is not None:
        spec.ramp = ramp
    return spec


# ── L-shape ───────────────────────────────────────────────────────────────────

def generate_l_shape(offset: float = 0.0, n_elements: int = 10, enforcement: str = "lagrange",
                     penalty_scale: Optional[float] = None, connector_stiffness: Optional[float] = None,
                     order: int = 1, load_steps: int = L_SHAPE_STEPS) -> ModelDocument:
    """Beams A-B along e1 and C-D along e3, joined at B/C; clamped at A, loaded at D.

    enforcement is "lagrange", "penalty" or "nodal" (shared DOFs, offset 0 only).
    connector_stiffness replaces the coupling by one connector element B-C with E scaled.
    """
    if offset < 0.0 or n_elements < 1:
        raise ModelInputError("L-shape needs offset >= 0 and at least one element per beam")
    builder = _Builder(f"l-shape-a{offset:g}")
    material = builder.material(BEAM_E, BEAM_NU, BEAM_RADIUS)
    beam1, elements1 = builder.line([0, 0, 0], [1, 0, 0], n_elements, material, order)
    beam2, elements2 = builder.line([1, offset, 0], [1, offset, 1], n_elements, material, order)
    node_a, node_b, node_c, node_d = beam1[0], beam1[-1], beam2[0], beam2[-1]
    document = builder.document

    if connector_stiffness is not None:
        if offset <= 0.0:
            raise ModelInputError("A connector beam needs a positive offset")
        connector = builder.material(BEAM_E * connector_stiffness, BEAM_NU, BEAM_RADIUS)
        builder.element(connector, 1, [node_b, node_c])
        document.name += f"-connector{connector_stiffness:g}"
    elif enforcement == "nodal":
        if offset != 0.0:
            raise ModelInputError("Nodal connection needs coincident points (offset 0)")
        document.connections.append([node_b, node_c])
    else:
        document.couplings.append(CouplingSpec(
            id=1, element_a=elements1[-1], element_b=elements2[0], xi=[1.0, -1.0],
            enforcement=enforcement, penalty_scale=penalty_scale,
        ))

    document.dirichlet.append(_clamp(node_a))
    document.loads.append(LoadSpec(node=node_d, force=[0.0, TIP_FORCE, 0.0], moment=[0.0, 0.0, TIP_MOMENT]))
    document.settings = SolveSpec(load_steps=load_steps)
    return document


def loaded_node(document: ModelDocument) -> int:
    """Node carrying the first load (D for the L-shape and crossed beams, C for the helix)."""
    return document.loads[0].node


# ── Crossed beams ─────────────────────────────────────────────────────────────

def generate_crossed_beams(n_elements: int, enforcement: str = "lagrange", penalty_scale: Optional[float] = None,
                           order: int = 1, load_steps: int = L_SHAPE_STEPS) -> ModelDocument:
    """Beam 1 (0,0,0)-(2,0,0), beam 2 (1,a,-1)-(1,a,1) with a = 2R, coupled at the midpoints."""
    if n_elements < 1:
        raise ModelInputError("Crossed beams need at least one element per beam")
    offset = 2.0 * BEAM_RADIUS
    builder = _Builder(f"crossed-beams-n{n_elements}")
    material = builder.material(BEAM_E, BEAM_NU, BEAM_RADIUS)
    beam1, elements1 = builder.line([0, 0, 0], [2, 0, 0], n_elements, material, order)
    beam2, elements2 = builder.line([1, offset, -1], [1, offset, 1], n_elements, material, order)
    # element ending at the midpoint for even counts, the central one for odd counts
    central = (n_elements + 1) // 2 - 1
    document = builder.document
    document.couplings.append(CouplingSpec(
        id=1, element_a=elements1[central], element_b=elements2[central], xi=AUTO_CPP,
        enforcement=enforcement, penalty_scale=penalty_scale,
    ))
    document.dirichlet.append(_clamp(beam1[0]))
    document.loads.append(LoadSpec(node=beam2[-1], force=[0.0, TIP_FORCE, 0.0], moment=[0.0, 0.0, TIP_MOMENT]))
    document.settings = SolveSpec(load_steps=load_steps)
    return document


def add_rigid_rotation(document: ModelDocument, loading_steps: int, rotation_steps: int,
                       angle: float = 2.0 * np.pi, axis=(1.0, 0.0, 0.0)) -> ModelDocument:
    """Load over loading_steps, then rotate the clamp by angle about axis with co-rotated loads."""
    total = loading_steps + rotation_steps
    axis = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    rotation = (angle * axis).tolist()
    rotation_ramp = [[0.0, 0.0], [float(loading_steps), 0.0], [float(total), 1.0]]
    hold_ramp = [[0.0, 0.0], [float(loading_steps), 1.0], [float(total), 1.0]]
    for bc in document.dirichlet:
        if all(bc.mask):
            bc.rotation = rotation
            bc.ramp = rotation_ramp
    for load in document.loads:
        load.ramp = hold_ramp
        load.rotation = rotation
        load.rotation_ramp = rotation_ramp
    document.settings.load_steps = total
    document.name += "-rotated"
    return document


# ── Wire-wound cylinder ───────────────────────────────────────────────────────

def cylinder_dimensions(n_axi: int, n_circ: int):
    """Fiber spacing a = pi d / n_axi and height b = a n_circ."""
    spacing = np.pi * CYLINDER_DIAMETER / n_axi
    return spacing, spacing * n_circ


def axial_fiber_position(i: int, z: float, n_axi: int) -> np.ndarray:
    spacing = np.pi * CYLINDER_DIAMETER / n_axi
    radius = 0.5 * CYLINDER_DIAMETER - (-1) ** i * CYLINDER_RADIUS * np.sin(np.pi * z / spacing)
    angle = i * 2.0 * np.pi / n_axi
    return np.array([radius * np.cos(angle), radius * np.sin(angle), z])


def ring_position(i: int, phi: float, n_axi: int) -> np.ndarray:
    spacing = np.pi * CYLINDER_DIAMETER / n_axi
    radius = 0.5 * CYLINDER_DIAMETER - (-1) ** i * CYLINDER_RADIUS * np.cos(phi * n_axi / 2.0)
    return np.array([radius * np.cos(phi), radius * np.sin(phi), spacing * (i - 0.5)])


def _axial_tangent(i: int, z: float, n_axi: int) -> np.ndarray:
    spacing = np.pi * CYLINDER_DIAMETER / n_axi
    d_radius = -(-1) ** i * CYLINDER_RADIUS * np.pi / spacing * np.cos(np.pi * z / spacing)
    angle = i * 2.0 * np.pi / n_axi
    return np.array([d_radius * np.cos(angle), d_radius * np.sin(angle), 1.0])


def _ring_tangent(i: int, phi: float, n_axi: int) -> np.ndarray:
    radius = 0.5 * CYLINDER_DIAMETER - (-1) ** i * CYLINDER_RADIUS * np.cos(phi * n_axi / 2.0)
    d_radius = (-1) ** i * CYLINDER_RADIUS * n_axi / 2.0 * np.sin(phi * n_axi / 2.0)
    return np.array([
        d_radius * np.cos(phi) - radius * np.sin(phi),
        d_radius * np.sin(phi) + radius * np.cos(phi),
        0.0,
    ])


def _radial(angle: float) -> np.ndarray:
    return np.array([np.cos(angle), np.sin(angle), 0.0])


def generate_wire_cylinder(n_axi: int = 16, n_circ: int = 10, elems_per_ring: int = 12,
                           elems_per_axial: int = 8, order: int = 2, load_steps: int = 100,
                           u_hat: float = CYLINDER_U_HAT) -> ModelDocument:
    """Axial fibers clamped at both ends, top ends moved by -u_hat e3; Lagrange couplings at crossings."""
    if n_axi < 4 or n_axi % 2 != 0 or n_circ < 1:
        raise ModelInputError("Cylinder needs an even n_axi >= 4 and n_circ >= 1")
    if elems_per_ring < 3 or elems_per_axial < 1:
        raise ModelInputError("Cylinder needs at least 3 elements per ring and 1 per axial fiber")
    spacing, height = cylinder_dimensions(n_axi, n_circ)
    builder = _Builder(f"wire-cylinder-{n_axi}x{n_circ}")
    material = builder.material(BEAM_E, BEAM_NU, CYLINDER_RADIUS)
    document = builder.document

    axial = []
    for i in range(1, n_axi + 1):
        angle = i * 2.0 * np.pi / n_axi
        nodes, elements = builder.curve(
            lambda z, i=i: axial_fiber_position(i, z, n_axi),
            lambda z, i=i: _axial_tangent(i, z, n_axi),
            lambda z, angle=angle: _radial(angle),
            (0.0, height), elems_per_axial, material, order,
        )
        axial.append((nodes, elements))

    rings = []
    for j in range(1, n_circ + 1):
        nodes, elements = builder.curve(
            lambda phi, j=j: ring_position(j, phi, n_axi),
            lambda phi, j=j: _ring_tangent(j, phi, n_axi),
            lambda phi: _radial(phi),
            (0.0, 2.0 * np.pi), elems_per_ring, material, order, closed=True,
        )
        rings.append((nodes, elements))

    coupling_id = 1
    for i in range(1, n_axi + 1):
        angle = (i * 2.0 * np.pi / n_axi) % (2.0 * np.pi)
        ring_element = min(int(angle / (2.0 * np.pi) * elems_per_ring), elems_per_ring - 1)
        for j in range(1, n_circ + 1):
            z = spacing * (j - 0.5)
            axial_element = min(int(z / height * elems_per_axial), elems_per_axial - 1)
            document.couplings.append(CouplingSpec(
                id=coupling_id,
                element_a=axial[i - 1][1][axial_element],
                element_b=rings[j - 1][1][ring_element],
                xi=AUTO_CPP,
                enforcement="lagrange",
            ))
            coupling_id += 1

    for nodes, _ in axial:
        document.dirichlet.append(_clamp(nodes[0]))
        document.dirichlet.append(_clamp(nodes[-1], displacement=(0.0, 0.0, -u_hat)))

    # imperfection at -d/2 e1 + b/2 e3, applied in the first step and held
    target = np.array([-0.5 * CYLINDER_DIAMETER, 0.0, 0.5 * height])
    loaded = min(document.nodes, key=lambda n: np.linalg.norm(np.asarray(n.position) - target))
    first = 1.0 / load_steps
    document.loads.append(LoadSpec(
        node=loaded.id, force=[0.0, IMPERFECTION_LOAD, 0.0], ramp=[[0.0, 0.0], [first, 1.0], [1.0, 1.0]],
    ))
    document.settings = SolveSpec(load_steps=load_steps)
    logger.info(f"Generated cylinder: {len(document.nodes)} nodes, {len(document.elements)} elements, "
                f"{len(document.couplings)} couplings")
    return document


def cylinder_top_nodes(document: ModelDocument) -> List[int]:
    return [bc.node for bc in document.dirichlet if bc.displacement[2] != 0.0]


def cylinder_bottom_nodes(document: ModelDocument) -> List[int]:
    return [bc.node for bc in document.dirichlet if bc.displacement[2] == 0.0]


# ── Double helix ──────────────────────────────────────────────────────────────

def helix_height() -> float:
    return HELIX_RADIUS * HELIX_TWIST * np.tan(HELIX_ANGLE)


def helix_position(beta: float, phase: float) -> np.ndarray:
    pitch = helix_height() / HELIX_TWIST
    return np.array([HELIX_RADIUS * np.cos(beta + phase), HELIX_RADIUS * np.sin(beta + phase), pitch * beta])


def _helix_tangent(beta: float, phase: float) -> np.ndarray:
    pitch = helix_height() / HELIX_TWIST
    return np.array([-HELIX_RADIUS * np.sin(beta + phase), HELIX_RADIUS * np.cos(beta + phase), pitch])


def generate_double_helix(n_connectors: int = 10, elements_a: int = 17, elements_b: int = 19,
                          elements_per_connector: int = 10, helix_order: int = 2,
                          load_steps: int = 20, penalty_scale: float = 1.0) -> ModelDocument:
    """Two phase-shifted helices clamped at the top (A, B) with connectors in e1-e2 planes; load at C."""
    builder = _Builder("double-helix")
    helix_material = builder.material(BEAM_E, BEAM_NU, HELIX_BEAM_RADIUS)
    connector_material = builder.material(BEAM_E, BEAM_NU, CONNECTOR_RADIUS)
    document = builder.document

    helices = []
    for phase, n_elements in ((0.0, elements_a), (np.pi, elements_b)):
        # from the top (beta = twist) down to the bottom (beta = 0)
        nodes, elements = builder.curve(
            lambda b, phase=phase: helix_position(b, phase),
            lambda b, phase=phase: -_helix_tangent(b, phase),
            lambda b, phase=phase: _radial(b + phase),
            (HELIX_TWIST, 0.0), n_elements, helix_material, helix_order,
        )
        helices.append((nodes, elements, n_elements))

    coupling_id = 1
    for k in range(n_connectors):
        beta = HELIX_TWIST * (k + 0.5) / n_connectors
        start, end = helix_position(beta, 0.0), helix_position(beta, np.pi)
        connector_order = k % 3 + 1
        _, connector_elements = builder.line(start, end, elements_per_connector, connector_material,
                                             connector_order)
        for side, (_, elements, n_elements) in enumerate(helices):
            index = min(int((HELIX_TWIST - beta) / HELIX_TWIST * n_elements), n_elements - 1)
            document.couplings.append(CouplingSpec(
                id=coupling_id,
                element_a=elements[index],
                element_b=connector_elements[0 if side == 0 else -1],
                xi=AUTO_CPP,
                enforcement="penalty",
                penalty_scale=penalty_scale,
            ))
            coupling_id += 1

    top_a, top_b = helices[0][0][0], helices[1][0][0]
    bottom_c = helices[0][0][-1]
    document.dirichlet.extend([_clamp(top_a), _clamp(top_b)])
    document.loads.append(LoadSpec(node=bottom_c, force=[0.0, 0.0, HELIX_FORCE]))
    document.settings = SolveSpec(load_steps=load_steps)
    return document
