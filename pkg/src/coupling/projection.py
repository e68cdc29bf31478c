"""
src/coupling/projection.py
==========================
Closest-point projection between two reference beam centrelines: find
(xi_A, xi_B) minimising 1/2 |r_A(xi_A) - r_B(xi_B)|^2.

A coarse grid scan picks the seed, Newton refines it.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.beams.beam_element import BeamElement, lagrange_basis
from src.errors import ProjectionError

logger = logging.getLogger(__name__)

GRID_SAMPLES = 11
MAX_ITER = 50
TOL = 1e-12
MIN_INTERACTION_ANGLE = 0.1


@dataclass(frozen=True)
class ProjectionResult:
    xi_a: float
    xi_b: float
    distance: float
    interaction_angle: float
    iterations: int


def _curve(element: BeamElement, xi: float):
    values, first, second = lagrange_basis(element.order, xi)
    x = element.ref_positions
    return values @ x, first @ x, second @ x


def closest_point_projection(element_a: BeamElement, element_b: BeamElement) -> ProjectionResult:
    grid = np.linspace(-1.0, 1.0, GRID_SAMPLES)
    best, seed = np.inf, (0.0, 0.0)
    for xa in grid:
        ra = _curve(element_a, xa)[0]
        for xb in grid:
            dist = np.linalg.norm(ra - _curve(element_b, xb)[0])
            if dist < best:
                best, seed = dist, (xa, xb)

    xi = np.array(seed, dtype=float)
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITER + 1):
        ra, dra, ddra = _curve(element_a, xi[0])
        rb, drb, ddrb = _curve(element_b, xi[1])
        d = ra - rb
        grad = np.array([d @ dra, -d @ drb])
        hess = np.array([
            [dra @ dra + d @ ddra, -dra @ drb],
            [-dra @ drb, drb @ drb - d @ ddrb],
        ])
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError as e:
            raise ProjectionError(
                f"Singular projection Hessian between elements {element_a.id} and {element_b.id}"
            ) from e
        xi = xi + step
        if np.linalg.norm(step) < TOL or np.linalg.norm(grad) < TOL:
            converged = True
            break

    if not converged:
        raise ProjectionError(
            f"Closest-point projection between elements {element_a.id} and {element_b.id} "
            f"did not converge in {MAX_ITER} iterations"
        )

    xi = np.clip(xi, -1.0, 1.0)
    ra, dra, _ = _curve(element_a, xi[0])
    rb, drb, _ = _curve(element_b, xi[1])
    cos_angle = abs(dra @ drb) / (np.linalg.norm(dra) * np.linalg.norm(drb))
    angle = float(np.arccos(np.clip(cos_angle, 0.0, 1.0)))
    if angle < MIN_INTERACTION_ANGLE:
        raise ProjectionError(
            f"Interaction angle {angle:.4f} rad between elements {element_a.id} and {element_b.id} "
            f"is below {MIN_INTERACTION_ANGLE} rad"
        )

    result = ProjectionResult(float(xi[0]), float(xi[1]), float(np.linalg.norm(ra - rb)), angle, iterations)
    logger.debug(f"CPP elements {element_a.id}/{element_b.id}: xi=({result.xi_a:.6f}, {result.xi_b:.6f}), "
                 f"distance={result.distance:.3e}, angle={angle:.3f}")
    return result
