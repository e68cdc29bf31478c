"""
Tests for the load-stepping Newton solver in src/solver/newton.py.
"""

import numpy as np
import pytest
import scipy.sparse as sp

import src.solver.newton as newton
from src.coupling.constraints import generalized_deformation
from src.errors import ConvergenceError, ModelInputError
from src.scenarios.document import (
    DirichletSpec, ElementSpec, LoadSpec, MaterialSpec, ModelDocument, NodeSpec, SolveSpec,
)
from src.scenarios.generators import generate_crossed_beams, generate_l_shape
from src.solver.assembly import assemble, reaction_forces
from src.solver.model import build_model
from src.solver.newton import SolveSettings, newton_solve, solve_linear

E, RADIUS, LENGTH = 1.0, 0.05, 1.0
AREA = np.pi * RADIUS**2


def _cantilever(n_elements=4, force=(1e-6, 0.0, 0.0), moment=(0.0, 0.0, 0.0), load_steps=2, ramp=None,
                tip_dirichlet=None):
    nodes = [NodeSpec(k + 1, [LENGTH * k / n_elements, 0.0, 0.0]) for k in range(n_elements + 1)]
    elements = [ElementSpec(k + 1, 1, 1, [k + 1, k + 2]) for k in range(n_elements)]
    document = ModelDocument(
        name="cantilever",
        nodes=nodes,
        materials=[MaterialSpec(1, E, 0.0, RADIUS)],
        elements=elements,
        dirichlet=[DirichletSpec(node=1)],
        settings=SolveSpec(load_steps=load_steps),
    )
    tip = n_elements + 1
    if tip_dirichlet is not None:
        document.dirichlet.append(tip_dirichlet)
    else:
        load = LoadSpec(node=tip, force=list(force), moment=list(moment))
        if ramp is not None:
            load.ramp = ramp
        document.loads.append(load)
    return document, tip


class TestSolveSettings:

    def test_document_values_then_overrides(self):
        document, _ = _cantilever(load_steps=7)
        document.settings.newton_tol = 1e-8
        model = build_model(document)
        settings = SolveSettings.for_model(model, newton_max_iter=5, load_steps=None)
        assert settings.load_steps == 7
        assert settings.newton_tol == 1e-8
        assert settings.newton_max_iter == 5

    @pytest.mark.parametrize("kwargs", [{"load_steps": 0}, {"newton_tol": -1.0}, {"newton_max_iter": 0}])
    def test_rejects_invalid_values(self, kwargs):
        with pytest.raises(ModelInputError):
            SolveSettings(**kwargs)


class TestLinearSolve:

    def test_dense_and_sparse_paths_agree(self, rng):
        matrix = sp.csr_matrix(np.eye(8) * 4.0 + rng.normal(size=(8, 8)) * 0.1)
        rhs = rng.normal(size=8)
        np.testing.assert_allclose(solve_linear(matrix, rhs, dense_limit=100), solve_linear(matrix, rhs, dense_limit=1),
                                   rtol=1e-12)

    @pytest.mark.parametrize("dense_limit", [100, 1])
    def test_singular_matrix_raises(self, dense_limit):
        with pytest.raises(ConvergenceError):
            solve_linear(sp.csr_matrix((4, 4)), np.ones(4), dense_limit=dense_limit)


class TestNewtonSolve:

    def test_unloaded_model_converges_immediately(self):
        document = generate_l_shape(0.0, 2)
        document.loads[0].force = [0.0, 0.0, 0.0]
        document.loads[0].moment = [0.0, 0.0, 0.0]
        history = newton_solve(build_model(document))
        assert len(history.steps) == document.settings.load_steps + 1
        assert all(record.iterations == 1 for record in history.steps[1:])
        np.testing.assert_allclose(history.total_energies(), 0.0, atol=1e-25)

    def test_axial_tip_load(self):
        force = 1e-6
        document, tip = _cantilever(force=(force, 0.0, 0.0))
        model = build_model(document)
        history = newton_solve(model)
        displacement = history.position(tip) - model.reference_positions[tip]
        np.testing.assert_allclose(displacement, [force * LENGTH / (E * AREA), 0.0, 0.0], rtol=1e-8, atol=1e-15)
        reaction = reaction_forces(model, history.final_state, [1], history.steps[-1].time)
        np.testing.assert_allclose(reaction, [-force, 0.0, 0.0], rtol=1e-8, atol=1e-15)

    def test_transverse_tip_load_reaction_balances_load(self):
        force = np.array([0.0, 2e-6, -1e-6])
        document, tip = _cantilever(force=force)
        model = build_model(document)
        history = newton_solve(model)
        reaction = reaction_forces(model, history.final_state, [1], 1.0)
        np.testing.assert_allclose(reaction, -force, rtol=1e-7, atol=1e-14)

    def test_prescribed_tip_displacement(self):
        u = 1e-3
        bc = DirichletSpec(node=5, mask=[True, False, False, False, False, False], displacement=[u, 0.0, 0.0])
        document, tip = _cantilever(tip_dirichlet=bc)
        model = build_model(document)
        history = newton_solve(model)
        assert history.position(tip)[0] == pytest.approx(LENGTH + u, rel=1e-14)
        reaction = reaction_forces(model, history.final_state, [tip], 1.0)
        assert reaction[0] == pytest.approx(E * AREA * u / LENGTH, rel=1e-8)

    def test_pseudo_time_follows_longest_ramp(self):
        document, _ = _cantilever(load_steps=4, ramp=[[0.0, 0.0], [2.0, 1.0]])
        history = newton_solve(build_model(document))
        np.testing.assert_allclose([s.time for s in history.steps], [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_energy_grows_with_load(self):
        document, _ = _cantilever(force=(0.0, 1e-6, 0.0), load_steps=4)
        energies = newton_solve(build_model(document)).total_energies()
        assert energies[0] == 0.0
        assert np.all(np.diff(energies) > 0.0)

    def test_failed_step_is_halved(self, monkeypatch):
        document, tip = _cantilever(force=(0.0, 1e-6, 0.0), load_steps=2)
        model = build_model(document)
        reference = newton_solve(model)

        original = newton._solve_at
        failed = []

        def flaky(model, state, t, settings):
            if t == pytest.approx(0.5) and not failed:
                failed.append(t)
                raise ConvergenceError("forced failure")
            return original(model, state, t, settings)

        monkeypatch.setattr(newton, "_solve_at", flaky)
        history = newton_solve(model)
        assert history.steps[1].step_cuts == 1
        assert history.steps[2].step_cuts == 0
        np.testing.assert_allclose(history.position(tip), reference.position(tip), atol=1e-10)

    def test_failure_without_step_cuts(self):
        document, _ = _cantilever(force=(0.0, 0.0, 0.0), moment=(0.0, 0.0, 2.0 * np.pi * E * np.pi * RADIUS**4 / 4),
                                  load_steps=1)
        document.settings.step_cut_allowed = False
        model = build_model(document)
        with pytest.raises(ConvergenceError):
            newton_solve(model, SolveSettings.for_model(model, newton_max_iter=1))


class TestCoupledEquilibrium:

    @pytest.fixture(params=["l-shape", "crossed-beams"])
    def solved(self, request):
        if request.param == "l-shape":
            document = generate_l_shape(0.1, 2, "lagrange")
        else:
            document = generate_crossed_beams(2, "lagrange")
        model = build_model(document)
        return model, newton_solve(model)

    def test_gaps_close_at_convergence(self, solved):
        model, history = solved
        state = history.final_state
        tol = 1e-10 * (1.0 + np.linalg.norm(model.external_load(history.steps[-1].time)))
        assert model.pairs
        for pair in model.pairs:
            gap = generalized_deformation(model.cross_section(pair.side_a, state),
                                          model.cross_section(pair.side_b, state), pair.reference)
            assert np.linalg.norm(gap.as_vector()) < tol

    def test_global_residual_vanishes_at_convergence(self, solved):
        model, history = solved
        system = assemble(model, history.final_state, history.steps[-1].time)
        free = model.free_dofs()
        assert np.linalg.norm(system.residual[free]) <= 1e-10 * (1.0 + np.linalg.norm(system.external))
        assert np.linalg.norm(system.external) > 0.0
