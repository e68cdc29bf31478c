"""
src/rotations/so3.py
====================
Rotation-group algebra on plain 3-vectors and 3x3 matrices:
  - skew / axial operators
  - exponential map (Rodrigues) and logarithm map (quaternion extraction)
  - tangent map T(psi) with delta_psi = T(psi) delta_theta
  - relative rotations and orthonormality checks

Everything is written in jax.numpy so the beam and coupling kernels can be
differentiated in forward mode straight through exp/log. Small-angle branches
use the double-where pattern so derivatives stay finite at psi = 0.
"""

import jax
import jax.numpy as jnp
import numpy as np

SMALL_ANGLE = 1e-6        # below this, closed forms switch to Taylor series
PI_SIGN_TOL = 1e-14       # |w| below this counts as a half-turn for the sign convention
ORTHO_TOL = 1e-12


# ── Skew / axial ──────────────────────────────────────────────────────────────

@jax.jit
def skew(a):
    """S(a) with S(a) b = a x b."""
    a = jnp.asarray(a, dtype=jnp.float64)
    zero = jnp.zeros_like(a[0])
    return jnp.array([
        [zero, -a[2], a[1]],
        [a[2], zero, -a[0]],
        [-a[1], a[0], zero],
    ])


@jax.jit
def axial(m):
    """Axial vector of the skew-symmetric part of m (inverse of skew on so(3))."""
    m = jnp.asarray(m, dtype=jnp.float64)
    return 0.5 * jnp.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


# ── Exponential map ───────────────────────────────────────────────────────────

@jax.jit
def exp_so3(psi):
    """Rodrigues' formula Lambda = I + sin(t)/t S + (1 - cos t)/t^2 S^2."""
    psi = jnp.asarray(psi, dtype=jnp.float64)
    theta2 = jnp.dot(psi, psi)
    small = theta2 < SMALL_ANGLE**2
    theta = jnp.sqrt(jnp.where(small, 1.0, theta2))
    half = 0.5 * theta
    a = jnp.where(small, 1.0 - theta2 / 6.0 + theta2**2 / 120.0, jnp.sin(theta) / theta)
    b = jnp.where(
        small,
        0.5 - theta2 / 24.0 + theta2**2 / 720.0,
        2.0 * jnp.sin(half) ** 2 / jnp.where(small, 1.0, theta2),
    )
    s = skew(psi)
    return jnp.eye(3, dtype=psi.dtype) + a * s + b * (s @ s)


# ── Logarithm map ─────────────────────────────────────────────────────────────

def _quaternion(lam):
    """Unit quaternion (w, v) of lam, largest-component branch, w >= 0.

    The branch with the largest 4 q_i^2 always has 4 q_i^2 >= 1; the other
    branches are evaluated at 1.0 so none of them feeds inf or nan into
    derivatives through jnp.select.
    """
    tr = jnp.trace(lam)
    diag = jnp.diagonal(lam)
    squares = jnp.array([1.0 + tr,
                         1.0 + 2.0 * diag[0] - tr,
                         1.0 + 2.0 * diag[1] - tr,
                         1.0 + 2.0 * diag[2] - tr])
    branch = jnp.argmax(squares)
    safe = jnp.where(jnp.arange(4) == branch, squares, 1.0)

    # w-branch
    w0 = 0.5 * jnp.sqrt(safe[0])
    d0 = 4.0 * w0
    q_w = jnp.array([w0,
                     (lam[2, 1] - lam[1, 2]) / d0,
                     (lam[0, 2] - lam[2, 0]) / d0,
                     (lam[1, 0] - lam[0, 1]) / d0])

    def axis_branch(i, j, k):
        qi = 0.5 * jnp.sqrt(safe[i + 1])
        d = 4.0 * qi
        q = [None, None, None]
        q[i] = qi
        q[j] = (lam[j, i] + lam[i, j]) / d
        q[k] = (lam[k, i] + lam[i, k]) / d
        w = (lam[k, j] - lam[j, k]) / d
        return jnp.array([w, q[0], q[1], q[2]])

    q = jnp.select(
        [branch == 0, branch == 1, branch == 2],
        [q_w, axis_branch(0, 1, 2), axis_branch(1, 2, 0)],
        axis_branch(2, 0, 1),
    )
    return jnp.where(q[0] < 0.0, -q, q)


@jax.jit
def log_so3(lam):
    """Rotation vector of lam with |psi| <= pi.

    At an exact half-turn the axis is chosen with its first nonzero component positive.
    """
    lam = jnp.asarray(lam, dtype=jnp.float64)
    q = _quaternion(lam)
    w, v = q[0], q[1:]
    n2 = jnp.dot(v, v)
    small = n2 < (0.5 * SMALL_ANGLE) ** 2
    n = jnp.sqrt(jnp.where(small, 1.0, n2))
    # 2 atan2(n, w) / n, with the series of atan(x)/x for small n (w ~ 1 there)
    w_small = jnp.where(small, w, 1.0)
    x2 = n2 / (w_small * w_small)
    factor = jnp.where(
        small,
        (2.0 / w_small) * (1.0 - x2 / 3.0 + x2**2 / 5.0),
        2.0 * jnp.arctan2(n, w) / n,
    )
    psi = factor * v

    mask = jnp.abs(psi) > 1e-12
    first = jnp.argmax(mask)
    flip = (jnp.abs(w) < PI_SIGN_TOL) & (psi[first] < 0.0)
    return jnp.where(flip, -psi, psi)


# ── Tangent map ───────────────────────────────────────────────────────────────

@jax.jit
def tangent_map(psi):
    """T(psi) = c I + (1 - c) e e^T - 1/2 S(psi), c = (t/2) cot(t/2).

    Maps multiplicative (spin) variations onto additive rotation-vector variations.
    Valid for |psi| < 2 pi.
    """
    psi = jnp.asarray(psi, dtype=jnp.float64)
    theta2 = jnp.dot(psi, psi)
    small = theta2 < SMALL_ANGLE**2
    theta2_safe = jnp.where(small, 1.0, theta2)
    half = 0.5 * jnp.sqrt(theta2_safe)
    c_full = half / jnp.tan(half)
    c = jnp.where(small, 1.0 - theta2 / 12.0 - theta2**2 / 720.0, c_full)
    d = jnp.where(
        small,
        1.0 / 12.0 + theta2 / 720.0 + theta2**2 / 30240.0,
        (1.0 - c_full) / theta2_safe,
    )
    return c * jnp.eye(3, dtype=psi.dtype) + d * jnp.outer(psi, psi) - 0.5 * skew(psi)


# ── Relative rotations / checks ───────────────────────────────────────────────

@jax.jit
def relative_rotation(lambda1, lambda2):
    """Lambda_21 = Lambda_2 Lambda_1^T."""
    return jnp.asarray(lambda2) @ jnp.asarray(lambda1).T


def orthonormality_error(lam) -> float:
    """Frobenius norm of Lambda^T Lambda - I."""
    lam = np.asarray(lam, dtype=float)
    return float(np.linalg.norm(lam.T @ lam - np.eye(3)))


def is_rotation(lam, tol: float = ORTHO_TOL) -> bool:
    """True if lam is orthonormal with det +1 to within tol."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (3, 3) or not np.all(np.isfinite(lam)):
        return False
    return orthonormality_error(lam) <= tol and abs(np.linalg.det(lam) - 1.0) <= tol


def smallest_rotation(a, b) -> np.ndarray:
    """Rotation taking unit vector a onto unit vector b about the axis a x b."""
    a = np.asarray(a, dtype=float) / np.linalg.norm(a)
    b = np.asarray(b, dtype=float) / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    c = float(np.dot(a, b))
    if s < 1e-14:
        if c > 0.0:
            return np.eye(3)
        # anti-parallel: half-turn about any axis normal to a
        helper = np.eye(3)[np.argmin(np.abs(a))]
        normal = np.cross(a, helper)
        return np.asarray(exp_so3(np.pi * normal / np.linalg.norm(normal)))
    return np.asarray(exp_so3(axis / s * np.arctan2(s, c)))
