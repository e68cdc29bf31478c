"""
src/beams/beam_element.py
=========================
Geometrically exact Simo-Reissner beam elements with Lagrange interpolation
of order 1-3:
  - evaluate_cross_section()      -> (r, Lambda) at a parameter coordinate xi
  - kinematic_maps()              -> H, N and H^Delta used by the coupling
  - internal_force_and_tangent()  -> element residual and tangent
  - elastic_energy()

Element nodes sit equidistantly on xi in [-1, 1] and are listed from the first
to the last node along the element. Triads are interpolated objectively:
Lambda(xi) = Lambda_1 exp(sum_k L_k(xi) psi_k), psi_k = log(Lambda_1^T Lambda_k).

Element DOFs per node are (du, dtheta): positions update additively, triads
multiplicatively with a left spin, Lambda <- exp(dtheta) Lambda. Residuals and
tangents are derivatives with respect to exactly these updates, taken in forward
mode with jax (reduced Gauss quadrature, p points for order p).
"""

import functools
import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import jax
import jax.numpy as jnp
import numpy as np
from numpy.polynomial import Polynomial

from src.beams.sections import CrossSectionConstitutive
from src.errors import ModelInputError
from src.rotations.so3 import axial, exp_so3, is_rotation, log_so3

logger = logging.getLogger(__name__)

FD_STEP = 1e-7
XI_TOL = 1e-12
TRIAD_TOL = 1e-10


# ── Data types ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class NodeState:
    position: np.ndarray
    triad: np.ndarray


@dataclass(frozen=True)
class CrossSectionState:
    position: np.ndarray
    triad: np.ndarray


@dataclass
class BeamElement:
    id: int
    node_ids: tuple
    order: int
    ref_positions: np.ndarray
    ref_triads: np.ndarray
    constitutive: CrossSectionConstitutive

    def __post_init__(self):
        if self.order not in (1, 2, 3):
            raise ModelInputError(f"Element {self.id}: order must be 1, 2 or 3, got {self.order}")
        n_nodes = self.order + 1
        self.node_ids = tuple(int(n) for n in self.node_ids)
        self.ref_positions = np.asarray(self.ref_positions, dtype=float).reshape(-1, 3)
        self.ref_triads = np.asarray(self.ref_triads, dtype=float).reshape(-1, 3, 3)
        if len(self.node_ids) != n_nodes or len(self.ref_positions) != n_nodes or len(self.ref_triads) != n_nodes:
            raise ModelInputError(
                f"Element {self.id}: order {self.order} needs {n_nodes} nodes, "
                f"got {len(self.node_ids)} ids / {len(self.ref_positions)} positions / {len(self.ref_triads)} triads"
            )
        for k, triad in enumerate(self.ref_triads):
            if not is_rotation(triad, TRIAD_TOL):
                raise ModelInputError(f"Element {self.id}: reference triad at node {k} is not a rotation")
        if self.reference_length() <= 1e-14:
            raise ModelInputError(f"Element {self.id}: zero reference length")

    @property
    def n_nodes(self) -> int:
        return self.order + 1

    @property
    def n_dofs(self) -> int:
        return 6 * self.n_nodes

    def reference_states(self) -> list:
        return [NodeState(p.copy(), t.copy()) for p, t in zip(self.ref_positions, self.ref_triads)]

    def reference_length(self) -> float:
        """Arc length of the interpolated reference centreline (Gauss, 8 points)."""
        points, weights = np.polynomial.legendre.leggauss(8)
        total = 0.0
        for xi, w in zip(points, weights):
            _, d_shape, _ = lagrange_basis(self.order, xi)
            total += w * np.linalg.norm(d_shape @ self.ref_positions)
        return float(total)

    def director_misalignment(self) -> float:
        """Largest angle between the first reference director and the centreline tangent at the nodes."""
        worst = 0.0
        for k, xi in enumerate(element_nodes(self.order)):
            _, d_shape, _ = lagrange_basis(self.order, xi)
            tangent = d_shape @ self.ref_positions
            cos_angle = np.dot(tangent, self.ref_triads[k][:, 0]) / np.linalg.norm(tangent)
            worst = max(worst, float(np.arccos(np.clip(cos_angle, -1.0, 1.0))))
        return worst


@dataclass
class KinematicMaps:
    H: np.ndarray
    N: np.ndarray
    HDelta: Callable[[np.ndarray], np.ndarray]


# ── Lagrange basis ────────────────────────────────────────────────────────────

@functools.lru_cache(maxsize=None)
def element_nodes(order: int) -> tuple:
    return tuple(np.linspace(-1.0, 1.0, order + 1))


@functools.lru_cache(maxsize=None)
def _basis_polynomials(order: int) -> tuple:
    nodes = np.array(element_nodes(order))
    polys = []
    for k in range(order + 1):
        p = Polynomial.fromroots(np.delete(nodes, k))
        polys.append(p / p(nodes[k]))
    return tuple(polys)


def lagrange_basis(order: int, xi: float):
    """Shape functions and their first two xi-derivatives (numpy)."""
    polys = _basis_polynomials(order)
    values = np.array([p(xi) for p in polys])
    first = np.array([p.deriv(1)(xi) for p in polys])
    second = np.array([p.deriv(2)(xi) for p in polys])
    return values, first, second


def _shape(order, xi):
    nodes = element_nodes(order)
    values = []
    for k, xk in enumerate(nodes):
        v = jnp.ones_like(xi)
        for m, xm in enumerate(nodes):
            if m != k:
                v = v * (xi - xm) / (xk - xm)
        values.append(v)
    return jnp.stack(values)


# ── Kernels (pure jax, per order) ─────────────────────────────────────────────

def _interpolate(order, x, lam, xi):
    shape = _shape(order, xi)
    base = lam[0]
    psi = jax.vmap(lambda triad: log_so3(base.T @ triad))(lam)
    return shape @ x, base @ exp_so3(shape @ psi)


def _update(x, lam, d):
    d = d.reshape(-1, 6)
    return x + d[:, :3], jax.vmap(lambda theta, triad: exp_so3(theta) @ triad)(d[:, 3:], lam)


def _strains(order, x, lam, x0, lam0, xi):
    xi = jnp.asarray(xi, dtype=jnp.float64)
    one = jnp.ones_like(xi)
    (_, triad), (dr, dtriad) = jax.jvp(lambda s: _interpolate(order, x, lam, s), (xi,), (one,))
    (_, triad0), (dr0, dtriad0) = jax.jvp(lambda s: _interpolate(order, x0, lam0, s), (xi,), (one,))
    jac = jnp.linalg.norm(dr0)
    gamma = (triad.T @ dr - triad0.T @ dr0) / jac
    kappa = (axial(triad.T @ dtriad) - axial(triad0.T @ dtriad0)) / jac
    return gamma, kappa, jac


def _energy(order, x, lam, x0, lam0, cf, cm):
    points, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for xi, w in zip(points, weights):
        gamma, kappa, jac = _strains(order, x, lam, x0, lam0, xi)
        total = total + 0.5 * w * jac * (gamma @ (cf * gamma) + kappa @ (cm * kappa))
    return total


def _residual(order, x, lam, x0, lam0, cf, cm):
    zero = jnp.zeros(6 * x.shape[0])
    return jax.grad(lambda d: _energy(order, *_update(x, lam, d), x0, lam0, cf, cm))(zero)


def _force_tangent(order, x, lam, x0, lam0, cf, cm):
    zero = jnp.zeros(6 * x.shape[0])

    def residual(d):
        return _residual(order, *_update(x, lam, d), x0, lam0, cf, cm)

    return residual(zero), jax.jacfwd(residual)(zero), _energy(order, x, lam, x0, lam0, cf, cm)


def _section_variation(order, x, lam, xi, d):
    """Change of (r, triad) at xi under the element update d; triad change as a spin."""
    r0, triad0 = _interpolate(order, x, lam, xi)
    r1, triad1 = _interpolate(order, *_update(x, lam, d), xi)
    return jnp.concatenate([r1 - r0, log_so3(triad1 @ triad0.T)])


def _h_matrix(order, x, lam, xi):
    zero = jnp.zeros(6 * x.shape[0])
    return jax.jacfwd(lambda d: _section_variation(order, x, lam, xi, d))(zero)


def _h_delta(order, x, lam, xi, f):
    zero = jnp.zeros(6 * x.shape[0])
    return jax.jacfwd(lambda d: _h_matrix(order, *_update(x, lam, d), xi).T @ f)(zero)


class _Kernels(NamedTuple):
    interpolate: Callable
    strains: Callable
    energy: Callable
    force_tangent: Callable
    batched_force_tangent: Callable
    batched_energy: Callable
    h_matrix: Callable
    h_delta: Callable


@functools.lru_cache(maxsize=None)
def _kernels(order: int) -> _Kernels:
    logger.debug(f"Compiling element kernels for order {order}")
    force_tangent = functools.partial(_force_tangent, order)
    return _Kernels(
        interpolate=jax.jit(functools.partial(_interpolate, order)),
        strains=jax.jit(functools.partial(_strains, order)),
        energy=jax.jit(functools.partial(_energy, order)),
        force_tangent=jax.jit(force_tangent),
        batched_force_tangent=jax.jit(jax.vmap(force_tangent)),
        batched_energy=jax.jit(jax.vmap(functools.partial(_energy, order))),
        h_matrix=jax.jit(functools.partial(_h_matrix, order)),
        h_delta=jax.jit(functools.partial(_h_delta, order)),
    )


# ── Public operations ─────────────────────────────────────────────────────────

def _stack(element: BeamElement, nodal_states: Sequence[NodeState]):
    if len(nodal_states) != element.n_nodes:
        raise ModelInputError(
            f"Element {element.id}: expected {element.n_nodes} nodal states, got {len(nodal_states)}"
        )
    x = np.array([s.position for s in nodal_states], dtype=float)
    lam = np.array([s.triad for s in nodal_states], dtype=float)
    return x, lam


def _check_xi(xi: float) -> float:
    xi = float(xi)
    if not (-1.0 - XI_TOL <= xi <= 1.0 + XI_TOL):
        raise ModelInputError(f"Parameter coordinate xi={xi} outside [-1, 1]")
    return min(max(xi, -1.0), 1.0)


def evaluate_cross_section(element: BeamElement, nodal_states: Sequence[NodeState], xi: float) -> CrossSectionState:
    xi = _check_xi(xi)
    x, lam = _stack(element, nodal_states)
    r, triad = _kernels(element.order).interpolate(x, lam, xi)
    return CrossSectionState(np.asarray(r), np.asarray(triad))


def section_strains(element: BeamElement, nodal_states: Sequence[NodeState], xi: float):
    """Material force strain Gamma and curvature kappa at xi (both zero at reference)."""
    xi = _check_xi(xi)
    x, lam = _stack(element, nodal_states)
    gamma, kappa, _ = _kernels(element.order).strains(x, lam, element.ref_positions, element.ref_triads, xi)
    return np.asarray(gamma), np.asarray(kappa)


def kinematic_maps(element: BeamElement, nodal_states: Sequence[NodeState], xi: float,
                   method: str = "ad") -> KinematicMaps:
    """H (= N) and the H^Delta operator at xi.

    method="ad" uses forward-mode differentiation, method="fd" central differences.
    """
    xi = _check_xi(xi)
    x, lam = _stack(element, nodal_states)
    kernels = _kernels(element.order)

    if method == "ad":
        h = np.asarray(kernels.h_matrix(x, lam, xi))

        def h_delta(f):
            return np.asarray(kernels.h_delta(x, lam, xi, np.asarray(f, dtype=float)))
    elif method == "fd":
        h = _h_matrix_fd(kernels, x, lam, xi)

        def h_delta(f):
            return _h_delta_fd(kernels, x, lam, xi, np.asarray(f, dtype=float))
    else:
        raise ValueError(f"Unknown differentiation method: {method}")

    return KinematicMaps(H=h, N=h, HDelta=h_delta)


def internal_force_and_tangent(element: BeamElement, nodal_states: Sequence[NodeState]):
    x, lam = _stack(element, nodal_states)
    residual, tangent, _ = _kernels(element.order).force_tangent(
        x, lam, element.ref_positions, element.ref_triads,
        element.constitutive.force_stiffness, element.constitutive.moment_stiffness,
    )
    return np.asarray(residual), np.asarray(tangent)


def elastic_energy(element: BeamElement, nodal_states: Sequence[NodeState]) -> float:
    x, lam = _stack(element, nodal_states)
    return float(_kernels(element.order).energy(
        x, lam, element.ref_positions, element.ref_triads,
        element.constitutive.force_stiffness, element.constitutive.moment_stiffness,
    ))


def batched_force_tangent(order: int, x, lam, x0, lam0, cf, cm):
    """Residuals, tangents and energies for a stack of same-order elements."""
    residuals, tangents, energies = _kernels(order).batched_force_tangent(x, lam, x0, lam0, cf, cm)
    return np.asarray(residuals), np.asarray(tangents), np.asarray(energies)


def batched_energy(order: int, x, lam, x0, lam0, cf, cm) -> np.ndarray:
    return np.asarray(_kernels(order).batched_energy(x, lam, x0, lam0, cf, cm))


def perturb_states(nodal_states: Sequence[NodeState], d) -> list:
    """Apply an element update vector d (positions additive, triads by left spin)."""
    d = np.asarray(d, dtype=float).reshape(-1, 6)
    return [
        NodeState(s.position + step[:3], np.asarray(exp_so3(step[3:])) @ s.triad)
        for s, step in zip(nodal_states, d)
    ]


# ── Finite-difference fallback ────────────────────────────────────────────────

def _updated_arrays(x, lam, d):
    d = d.reshape(-1, 6)
    return x + d[:, :3], np.array([np.asarray(exp_so3(t)) @ l for t, l in zip(d[:, 3:], lam)])


def _h_matrix_fd(kernels, x, lam, xi, step=FD_STEP):
    n = 6 * x.shape[0]
    h = np.zeros((6, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        r_plus, triad_plus = kernels.interpolate(*_updated_arrays(x, lam, e), xi)
        r_minus, triad_minus = kernels.interpolate(*_updated_arrays(x, lam, -e), xi)
        h[:3, j] = (np.asarray(r_plus) - np.asarray(r_minus)) / (2.0 * step)
        h[3:, j] = np.asarray(log_so3(np.asarray(triad_plus) @ np.asarray(triad_minus).T)) / (2.0 * step)
    return h


def _h_delta_fd(kernels, x, lam, xi, f, step=1e-6):
    n = 6 * x.shape[0]
    out = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        plus = np.asarray(kernels.h_matrix(*_updated_arrays(x, lam, e), xi)).T @ f
        minus = np.asarray(kernels.h_matrix(*_updated_arrays(x, lam, -e), xi)).T @ f
        out[:, j] = (plus - minus) / (2.0 * step)
    return out
