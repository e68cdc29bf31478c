"""Shared fixtures: seeded generators, random rotations, small elements and models."""

import numpy as np
import pytest

import src  # noqa: F401  (enables 64-bit jax)
from src.beams.beam_element import BeamElement, NodeState, perturb_states
from src.beams.sections import CrossSectionConstitutive
from src.rotations.so3 import exp_so3, smallest_rotation


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return np.asarray(exp_so3(axis * rng.uniform(0.0, max_angle)))


def random_vector(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return rng.normal(size=3) * scale


def straight_element(order: int = 1, length: float = 1.0, direction=(1.0, 0.0, 0.0), origin=(0.0, 0.0, 0.0),
                     section: CrossSectionConstitutive = None, element_id: int = 1) -> BeamElement:
    direction = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    triad = smallest_rotation(np.eye(3)[0], direction)
    positions = np.array([np.asarray(origin) + direction * length * k / order for k in range(order + 1)])
    return BeamElement(
        id=element_id,
        node_ids=tuple(range(1, order + 2)),
        order=order,
        ref_positions=positions,
        ref_triads=np.array([triad] * (order + 1)),
        constitutive=section or CrossSectionConstitutive.circular(1.0, 0.3, 0.05),
    )


def curved_element(order: int, rng: np.random.Generator, element_id: int = 1) -> BeamElement:
    """Slightly curved element with twisted reference triads along a random direction."""
    base = random_rotation(rng)
    positions = []
    triads = []
    for k in range(order + 1):
        s = k / order
        positions.append(base @ np.array([s, 0.05 * np.sin(np.pi * s), 0.02 * s**2]))
        triads.append(base @ np.asarray(exp_so3(np.array([0.2 * s, 0.0, 0.1 * s]))))
    return BeamElement(element_id, tuple(range(1, order + 2)), order, np.array(positions), np.array(triads),
                       CrossSectionConstitutive.circular(2.0, 0.25, 0.04))


def random_states(element: BeamElement, rng: np.random.Generator, amplitude: float = 0.1):
    d = rng.normal(size=element.n_dofs) * amplitude
    return perturb_states(element.reference_states(), d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def identity_state():
    return NodeState(np.zeros(3), np.eye(3))
