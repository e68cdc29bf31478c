"""
src/solver/newton.py
====================
Quasi-static Newton-Raphson with load stepping in pseudo-time.

Load step n runs at t = n * t_end / load_steps. Inside a step the prescribed
values are applied first, then the free DOFs are iterated; positions and
multipliers update additively, nodal rotations by left spin exp(dtheta) R.
A failed step is retried with halved increments from the last converged state.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config.settings import DENSE_LIMIT, INCREMENT_TOL, MAX_STEP_CUTS, NEWTON_MAX_ITER, NEWTON_TOL
from src.errors import ConvergenceError, ModelInputError, SingularCouplingError
from src.solver.assembly import assemble, energies, pair_multipliers
from src.solver.model import Model, ModelState

logger = logging.getLogger(__name__)


@dataclass
class SolveSettings:
    load_steps: int = 10
    newton_tol: float = NEWTON_TOL
    newton_max_iter: int = NEWTON_MAX_ITER
    step_cut_allowed: bool = True
    increment_tol: float = INCREMENT_TOL
    max_step_cuts: int = MAX_STEP_CUTS
    dense_limit: int = DENSE_LIMIT

    def __post_init__(self):
        if self.load_steps < 1 or self.newton_max_iter < 1:
            raise ModelInputError("load_steps and newton_max_iter must be positive")
        if self.newton_tol <= 0.0 or self.increment_tol <= 0.0:
            raise ModelInputError("Newton tolerances must be positive")

    @classmethod
    def for_model(cls, model: Model, **overrides) -> "SolveSettings":
        """Document settings, then explicit overrides, then configured defaults."""
        spec = model.solve_spec
        values = {"load_steps": spec.load_steps, "step_cut_allowed": spec.step_cut_allowed}
        for name in ("newton_tol", "newton_max_iter", "increment_tol"):
            if getattr(spec, name) is not None:
                values[name] = getattr(spec, name)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class StepRecord:
    step: int
    time: float
    state: ModelState
    iterations: int
    residual_norm: float
    internal_energy: float
    penalty_energy: float
    multipliers: Dict[int, np.ndarray] = field(default_factory=dict)
    step_cuts: int = 0


@dataclass
class SolutionHistory:
    model: Model
    steps: List[StepRecord] = field(default_factory=list)

    @property
    def final_state(self) -> ModelState:
        return self.steps[-1].state

    def position(self, node_id: int, step: int = -1) -> np.ndarray:
        return self.steps[step].state.positions[self.model.dofs.index(node_id)].copy()

    def total_energies(self) -> np.ndarray:
        return np.array([s.internal_energy + s.penalty_energy for s in self.steps])


# ── Linear solve ──────────────────────────────────────────────────────────────

def solve_linear(matrix: sp.spmatrix, rhs: np.ndarray, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Direct solve: dense LU below dense_limit unknowns, sparse LU above."""
    try:
        if matrix.shape[0] < dense_limit:
            solution = np.linalg.solve(matrix.toarray(), rhs)
        else:
            solution = spla.splu(sp.csc_matrix(matrix)).solve(rhs)
    except (np.linalg.LinAlgError, RuntimeError) as e:
        raise ConvergenceError(f"Linear solve failed: {e}") from e
    if not np.all(np.isfinite(solution)):
        raise ConvergenceError("Linear solve produced non-finite values")
    return solution


# ── Newton ────────────────────────────────────────────────────────────────────

def _record(model: Model, state: ModelState, step: int, t: float, iterations: int, norm: float,
            cuts: int = 0) -> StepRecord:
    energy = energies(model, state)
    return StepRecord(
        step=step, time=t, state=state.copy(), iterations=iterations, residual_norm=norm,
        internal_energy=energy["internal"], penalty_energy=energy["penalty"],
        multipliers=pair_multipliers(model, state), step_cuts=cuts,
    )


def _solve_at(model: Model, state: ModelState, t: float, settings: SolveSettings):
    """Newton iterations at fixed pseudo-time t; mutates and returns state."""
    model.apply_prescribed(state, t)
    free = model.free_dofs()
    increment_norm = np.inf
    for iteration in range(1, settings.newton_max_iter + 1):
        system = assemble(model, state, t)
        tol = settings.newton_tol * (1.0 + np.linalg.norm(system.external))
        norm = float(np.linalg.norm(system.residual[free]))
        if not np.isfinite(norm):
            raise ConvergenceError(f"Residual became non-finite at t={t:.6g}")
        if norm < tol and (iteration == 1 or increment_norm < settings.increment_tol):
            return state, iteration, norm

        delta = np.zeros(model.dofs.n_dofs)
        tangent = system.tangent[free][:, free]
        delta[free] = solve_linear(tangent, -system.residual[free], settings.dense_limit)
        increment_norm = float(np.linalg.norm(delta))
        state.apply_increment(model.dofs, delta)
        logger.debug(f"t={t:.6g} iteration {iteration}: |R|={norm:.3e}, |du|={increment_norm:.3e}")

    raise ConvergenceError(
        f"Newton did not converge at t={t:.6g} within {settings.newton_max_iter} iterations (|R|={norm:.3e})"
    )


def newton_solve(model: Model, settings: Optional[SolveSettings] = None,
                 state: Optional[ModelState] = None) -> SolutionHistory:
    settings = settings or SolveSettings.for_model(model)
    current = state.copy() if state is not None else model.reference_state()
    t_end = model.time_end
    history = SolutionHistory(model=model)
    history.steps.append(_record(model, current, 0, 0.0, 0, 0.0))

    logger.info(f"Solving '{model.name}': {settings.load_steps} load steps, {model.dofs.n_dofs} DOFs")
    t_done = 0.0
    for step in range(1, settings.load_steps + 1):
        t_target = step * t_end / settings.load_steps
        targets = [t_target]
        cuts, iterations, norm = 0, 0, 0.0
        while targets:
            t_next = targets[-1]
            try:
                trial, iterations, norm = _solve_at(model, current.copy(), t_next, settings)
            except (ConvergenceError, SingularCouplingError) as e:
                if not settings.step_cut_allowed or cuts >= settings.max_step_cuts:
                    logger.error(f"Load step {step} failed at t={t_next:.6g}: {e}")
                    raise ConvergenceError(f"Load step {step} failed after {cuts} step cuts: {e}") from e
                cuts += 1
                targets.append(0.5 * (t_done + t_next))
                logger.warning(f"Load step {step}: cutting increment to t={targets[-1]:.6g} ({e})")
                continue
            current, t_done = trial, t_next
            targets.pop()
        history.steps.append(_record(model, current, step, t_target, iterations, norm, cuts))
        logger.info(f"Load step {step}/{settings.load_steps} t={t_target:.4g}: "
                    f"{iterations} iterations, |R|={norm:.3e}")
    return history
