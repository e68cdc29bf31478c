"""
src/coupling/constraints.py
===========================
Point coupling between two beam cross-sections.

Positional constraint:  g_r = r2 - r1 - 1/2 (Lambda1 R01 + Lambda2 R02)
Rotational constraint:  g_theta = log(Lambda2 Lambda02^T Lambda01 Lambda1^T)

Both vanish at the reference configuration, change sign when the two sides
are swapped and are invariant under superimposed rigid body motions.

Block naming follows the saddle-point system: Cqil maps multipliers onto the
generalized forces of side i (rows: force, moment), Clqi is the derivative of
the gap with respect to side i (columns: position, spin), Cqiqj is the
derivative of the side-i generalized forces with respect to side j at fixed
multipliers. Side 1 carries the minus sign, side 2 the plus sign.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import jax
import jax.numpy as jnp
import numpy as np

from src.beams.beam_element import CrossSectionState
from src.beams.sections import CrossSectionConstitutive
from src.errors import ModelInputError, SingularCouplingError
from src.rotations.so3 import exp_so3, log_so3, skew, tangent_map

logger = logging.getLogger(__name__)

SINGULAR_MARGIN = 1e-6
FD_STEP = 1e-7

LAGRANGE = "lagrange"
PENALTY = "penalty"


# ── Data types ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class CouplingReference:
    """Frozen reference data of a coupling pair."""
    R01: np.ndarray
    R02: np.ndarray
    Lambda01: np.ndarray
    Lambda02: np.ndarray

    @classmethod
    def from_states(cls, state1: CrossSectionState, state2: CrossSectionState) -> "CouplingReference":
        distance = np.asarray(state2.position, dtype=float) - np.asarray(state1.position, dtype=float)
        lam1 = np.asarray(state1.triad, dtype=float)
        lam2 = np.asarray(state2.triad, dtype=float)
        return cls(R01=lam1.T @ distance, R02=lam2.T @ distance, Lambda01=lam1.copy(), Lambda02=lam2.copy())

    def swapped(self) -> "CouplingReference":
        return CouplingReference(R01=-self.R02, R02=-self.R01, Lambda01=self.Lambda02, Lambda02=self.Lambda01)


@dataclass(frozen=True)
class CouplingSite:
    element_id: int
    xi: float


@dataclass(frozen=True)
class CouplingPair:
    id: int
    side_a: CouplingSite
    side_b: CouplingSite
    reference: CouplingReference
    enforcement: str = LAGRANGE
    eps_r: Optional[float] = None
    eps_theta: Optional[float] = None

    def __post_init__(self):
        for site in (self.side_a, self.side_b):
            if not -1.0 <= site.xi <= 1.0:
                raise ModelInputError(f"Coupling {self.id}: xi={site.xi} outside [-1, 1]")
        if self.enforcement not in (LAGRANGE, PENALTY):
            raise ModelInputError(f"Coupling {self.id}: unknown enforcement '{self.enforcement}'")
        if self.enforcement == PENALTY:
            if self.eps_r is None or self.eps_theta is None or self.eps_r <= 0.0 or self.eps_theta <= 0.0:
                raise ModelInputError(
                    f"Coupling {self.id}: penalty parameters must be positive, got {self.eps_r}, {self.eps_theta}"
                )

    @property
    def is_lagrange(self) -> bool:
        return self.enforcement == LAGRANGE


@dataclass(frozen=True)
class LagrangeMultipliers:
    lambda_r: np.ndarray
    lambda_theta: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.lambda_r, self.lambda_theta])


@dataclass(frozen=True)
class GeneralizedDeformation:
    g_r: np.ndarray
    g_theta: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.g_r, self.g_theta])


@dataclass
class CouplingBlocks:
    Cq1l: np.ndarray
    Cq2l: np.ndarray
    Cq1q1: np.ndarray
    Cq1q2: np.ndarray
    Cq2q1: np.ndarray
    Cq2q2: np.ndarray
    Clq1: np.ndarray
    Clq2: np.ndarray

    def force_block(self, side: int) -> np.ndarray:
        return self.Cq1l if side == 1 else self.Cq2l

    def stiffness_block(self, side: int, other: int) -> np.ndarray:
        return {(1, 1): self.Cq1q1, (1, 2): self.Cq1q2, (2, 1): self.Cq2q1, (2, 2): self.Cq2q2}[(side, other)]

    def gap_block(self, side: int) -> np.ndarray:
        return self.Clq1 if side == 1 else self.Clq2


def swap_coupling_sides(pair: CouplingPair) -> CouplingPair:
    """Same coupling with sides exchanged; the reference is rebuilt for the new order."""
    return replace(pair, side_a=pair.side_b, side_b=pair.side_a, reference=pair.reference.swapped())


# ── Gaps ──────────────────────────────────────────────────────────────────────

def positional_gap(state1: CrossSectionState, state2: CrossSectionState, ref: CouplingReference) -> np.ndarray:
    r1, r2 = np.asarray(state1.position, dtype=float), np.asarray(state2.position, dtype=float)
    lam1, lam2 = np.asarray(state1.triad, dtype=float), np.asarray(state2.triad, dtype=float)
    return r2 - r1 - 0.5 * (lam1 @ ref.R01 + lam2 @ ref.R02)


def _relative_rotation_vector(lam1, lam2, ref_link, theta):
    """log(exp(t2) Lambda2 ref_link (exp(t1) Lambda1)^T), ref_link = Lambda02^T Lambda01."""
    spun1 = exp_so3(theta[:3]) @ lam1
    spun2 = exp_so3(theta[3:]) @ lam2
    return log_so3(spun2 @ ref_link @ spun1.T)


def _rotational_moments(lam1, lam2, ref_link, lam_theta, theta):
    moment = tangent_map(_relative_rotation_vector(lam1, lam2, ref_link, theta)).T @ lam_theta
    return jnp.concatenate([-moment, moment])


_gap_jacobian = jax.jit(jax.jacfwd(_relative_rotation_vector, argnums=3))
_moment_jacobian = jax.jit(jax.jacfwd(_rotational_moments, argnums=4))
_relative_rotation = jax.jit(_relative_rotation_vector)


def _check_singular(psi: np.ndarray):
    angle = float(np.linalg.norm(psi))
    if angle >= np.pi - SINGULAR_MARGIN:
        raise SingularCouplingError(f"Relative rotation {angle:.8f} rad too close to pi")


def _rotation_inputs(state1, state2, ref):
    lam1 = np.asarray(state1.triad, dtype=float)
    lam2 = np.asarray(state2.triad, dtype=float)
    return lam1, lam2, ref.Lambda02.T @ ref.Lambda01


def rotational_gap(state1: CrossSectionState, state2: CrossSectionState, ref: CouplingReference) -> np.ndarray:
    lam1, lam2, link = _rotation_inputs(state1, state2, ref)
    psi = np.asarray(_relative_rotation(lam1, lam2, link, np.zeros(6)))
    _check_singular(psi)
    return psi


def generalized_deformation(state1, state2, ref) -> GeneralizedDeformation:
    return GeneralizedDeformation(positional_gap(state1, state2, ref), rotational_gap(state1, state2, ref))


# ── Blocks ────────────────────────────────────────────────────────────────────

def coupling_blocks_positional(state1, state2, ref: CouplingReference, lambda_r) -> CouplingBlocks:
    lam_r = np.asarray(lambda_r, dtype=float)
    r1, r2 = np.asarray(state1.position, dtype=float), np.asarray(state2.position, dtype=float)
    lam1, lam2 = np.asarray(state1.triad, dtype=float), np.asarray(state2.triad, dtype=float)
    eye = np.eye(3)
    moment_rows = -0.5 * np.asarray(skew(r2 - r1))

    cq1l = np.vstack([-eye, moment_rows])
    cq2l = np.vstack([eye, moment_rows])

    # moment rows -1/2 (r2 - r1) x lambda depend on the positions only
    s_lam = 0.5 * np.asarray(skew(lam_r))
    minus, plus = np.zeros((6, 6)), np.zeros((6, 6))
    minus[3:, :3] = -s_lam
    plus[3:, :3] = s_lam

    clq1 = np.hstack([-eye, 0.5 * np.asarray(skew(lam1 @ ref.R01))])
    clq2 = np.hstack([eye, 0.5 * np.asarray(skew(lam2 @ ref.R02))])
    return CouplingBlocks(
        Cq1l=cq1l, Cq2l=cq2l,
        Cq1q1=minus, Cq1q2=plus.copy(), Cq2q1=minus.copy(), Cq2q2=plus,
        Clq1=clq1, Clq2=clq2,
    )


def coupling_blocks_rotational(state1, state2, ref: CouplingReference, lambda_theta,
                               method: str = "ad") -> CouplingBlocks:
    lam1, lam2, link = _rotation_inputs(state1, state2, ref)
    lam_theta = np.asarray(lambda_theta, dtype=float)
    zero = np.zeros(6)
    psi = np.asarray(_relative_rotation(lam1, lam2, link, zero))
    _check_singular(psi)

    if method == "ad":
        gap_jac = np.asarray(_gap_jacobian(lam1, lam2, link, zero))
        moment_jac = np.asarray(_moment_jacobian(lam1, lam2, link, lam_theta, zero))
    elif method == "fd":
        gap_jac = _central_difference(lambda t: np.asarray(_relative_rotation(lam1, lam2, link, t)), 3)
        moment_jac = _central_difference(
            lambda t: np.asarray(_rotational_moments(lam1, lam2, link, lam_theta, t)), 6
        )
    else:
        raise ValueError(f"Unknown differentiation method: {method}")

    t_transpose = np.asarray(tangent_map(psi)).T
    zeros3 = np.zeros((3, 3))
    cq1l = np.vstack([zeros3, -t_transpose])
    cq2l = np.vstack([zeros3, t_transpose])

    def spin_block(sub):
        block = np.zeros((6, 6))
        block[3:, 3:] = sub
        return block

    return CouplingBlocks(
        Cq1l=cq1l, Cq2l=cq2l,
        Cq1q1=spin_block(moment_jac[:3, :3]), Cq1q2=spin_block(moment_jac[:3, 3:]),
        Cq2q1=spin_block(moment_jac[3:, :3]), Cq2q2=spin_block(moment_jac[3:, 3:]),
        Clq1=np.hstack([zeros3, gap_jac[:, :3]]), Clq2=np.hstack([zeros3, gap_jac[:, 3:]]),
    )


def _central_difference(func, rows: int, step: float = FD_STEP) -> np.ndarray:
    jac = np.zeros((rows, 6))
    for j in range(6):
        e = np.zeros(6)
        e[j] = step
        jac[:, j] = (func(e) - func(-e)) / (2.0 * step)
    return jac


def coupling_virtual_work(state1, state2, ref: CouplingReference, multipliers: LagrangeMultipliers,
                          dq1, dq2) -> float:
    """Virtual work of the coupling forces for side variations dq = (du, dtheta)."""
    pos = coupling_blocks_positional(state1, state2, ref, multipliers.lambda_r)
    rot = coupling_blocks_rotational(state1, state2, ref, multipliers.lambda_theta)
    f1 = pos.Cq1l @ multipliers.lambda_r + rot.Cq1l @ multipliers.lambda_theta
    f2 = pos.Cq2l @ multipliers.lambda_r + rot.Cq2l @ multipliers.lambda_theta
    return float(f1 @ np.asarray(dq1, dtype=float) + f2 @ np.asarray(dq2, dtype=float))


# ── Penalty ───────────────────────────────────────────────────────────────────

def penalty_multiplier(gap: GeneralizedDeformation, eps_r: float, eps_theta: float) -> LagrangeMultipliers:
    if eps_r <= 0.0 or eps_theta <= 0.0:
        raise ModelInputError(f"Penalty parameters must be positive, got {eps_r}, {eps_theta}")
    return LagrangeMultipliers(eps_r * np.asarray(gap.g_r), eps_theta * np.asarray(gap.g_theta))


def penalty_potential(gap: GeneralizedDeformation, eps_r: float, eps_theta: float) -> float:
    return 0.5 * (eps_r * float(gap.g_r @ gap.g_r) + eps_theta * float(gap.g_theta @ gap.g_theta))


def default_penalties(mat1: CrossSectionConstitutive, mat2: CrossSectionConstitutive, scale: float):
    """eps_r = scale E R, eps_theta = scale E R^3 with E, R averaged over both sides."""
    if scale <= 0.0:
        raise ModelInputError(f"Penalty scale must be positive, got {scale}")
    e_mean = 0.5 * (mat1.E + mat2.E)
    r_mean = 0.5 * (mat1.R + mat2.R)
    return scale * e_mean * r_mean, scale * e_mean * r_mean**3
