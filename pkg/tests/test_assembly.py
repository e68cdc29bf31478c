"""
Tests for model construction and global assembly (src/solver/model.py, src/solver/assembly.py).
"""

import numpy as np
import pytest

from src.beams.beam_element import elastic_energy
from src.coupling.constraints import generalized_deformation, penalty_potential
from src.errors import ModelInputError
from src.scenarios.generators import generate_crossed_beams, generate_l_shape
from src.solver.assembly import assemble, energies, pair_multipliers, reaction_forces
from src.solver.model import Ramp, build_model, nodal_connection_constraint

FD_H = 1e-7


def _crossed_model(enforcement="lagrange", order=2):
    return build_model(generate_crossed_beams(1, enforcement, 10.0 if enforcement == "penalty" else None, order))


def _perturbed_state(model, rng, amplitude=0.05):
    state = model.reference_state()
    delta = rng.normal(size=model.dofs.n_dofs) * amplitude
    state.apply_increment(model.dofs, delta)
    return state


def _fd_tangent(model, state, method):
    n = model.dofs.n_dofs
    fd = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = FD_H
        plus, minus = state.copy(), state.copy()
        plus.apply_increment(model.dofs, e)
        minus.apply_increment(model.dofs, -e)
        fd[:, j] = (assemble(model, plus, method=method).residual
                    - assemble(model, minus, method=method).residual) / (2 * FD_H)
    return fd


class TestModelConstruction:

    def test_crossed_beams_dof_layout(self):
        model = _crossed_model()
        assert model.dofs.n_node_dofs == 6 * 6
        assert model.dofs.n_dofs == 6 * 6 + 6
        np.testing.assert_array_equal(model.dofs.pair_dofs(1), np.arange(36, 42))

    def test_projection_places_coupling_at_midpoints(self):
        model = _crossed_model(order=1)
        pair = model.pairs[0]
        assert pair.side_a.xi == pytest.approx(0.0, abs=1e-12)
        assert pair.side_b.xi == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(np.linalg.norm(pair.reference.R01), 0.1, rtol=1e-12)

    def test_penalty_parameters_default_from_scale(self):
        model = _crossed_model("penalty")
        pair = model.pairs[0]
        assert pair.eps_r == pytest.approx(10.0 * 0.05)
        assert pair.eps_theta == pytest.approx(10.0 * 0.05**3)
        assert model.dofs.n_dofs == 36

    def test_nodal_connection_shares_dofs(self):
        document = generate_l_shape(0.0, 2, "nodal")
        b, c = document.connections[0]
        merged = build_model(document)
        document.connections.clear()
        separate = build_model(document)
        assert separate.dofs.n_dofs - merged.dofs.n_dofs == 6
        np.testing.assert_array_equal(merged.dofs.node_dofs(b), merged.dofs.node_dofs(c))
        assert (b, c) == (3, 4)

    def test_nodal_connection_needs_coincident_nodes(self):
        model = build_model(generate_l_shape(0.1, 2, "lagrange"))
        with pytest.raises(ModelInputError, match="reference positions differ"):
            nodal_connection_constraint(model, 3, 4)

    def test_ramp_and_time_end(self):
        ramp = Ramp.from_points([[0.0, 0.0], [2.0, 1.0], [4.0, 1.0]])
        assert ramp(1.0) == pytest.approx(0.5)
        assert ramp(5.0) == pytest.approx(1.0)
        assert ramp.end == 4.0
        assert _crossed_model().time_end == 1.0


class TestAssembly:

    @pytest.mark.parametrize("enforcement", ["lagrange", "penalty"])
    def test_reference_configuration_is_in_equilibrium(self, enforcement):
        model = _crossed_model(enforcement)
        system = assemble(model, model.reference_state(), 0.0)
        np.testing.assert_allclose(system.residual, 0.0, atol=1e-12)

    def test_multiplier_block_is_zero(self, rng):
        model = _crossed_model()
        system = assemble(model, _perturbed_state(model, rng))
        lam = model.dofs.pair_dofs(1)
        np.testing.assert_array_equal(system.tangent[lam][:, lam].toarray(), 0.0)

    def test_external_load_enters_residual(self):
        model = _crossed_model()
        system = assemble(model, model.reference_state(), 0.5)
        tip = model.dofs.node_dofs(model.loads[0].node)
        np.testing.assert_allclose(system.residual[tip], -0.5 * np.array([0.0, 5e-6, 0.0, 0.0, 0.0, 5e-6]))

    @pytest.mark.parametrize("enforcement", ["lagrange", "penalty"])
    @pytest.mark.parametrize("method", ["ad", "fd"])
    def test_tangent_matches_finite_differences(self, enforcement, method, rng):
        model = _crossed_model(enforcement)
        state = _perturbed_state(model, rng)
        tangent = assemble(model, state, method=method).tangent.toarray()
        fd = _fd_tangent(model, state, method)
        np.testing.assert_allclose(tangent, fd, atol=1e-5 * np.abs(tangent).max())

    def test_energies(self, rng):
        model = _crossed_model("penalty")
        state = _perturbed_state(model, rng)
        result = energies(model, state)
        internal = sum(elastic_energy(e, model.element_states(e, state)) for e in model.elements)
        pair = model.pairs[0]
        gap = generalized_deformation(model.cross_section(pair.side_a, state),
                                      model.cross_section(pair.side_b, state), pair.reference)
        assert result["internal"] == pytest.approx(internal, rel=1e-10)
        assert result["penalty"] == pytest.approx(penalty_potential(gap, pair.eps_r, pair.eps_theta), rel=1e-12)
        np.testing.assert_allclose(pair_multipliers(model, state)[1][:3], pair.eps_r * gap.g_r)

    def test_reference_energies_vanish(self):
        model = _crossed_model("penalty")
        result = energies(model, model.reference_state())
        assert result["internal"] == pytest.approx(0.0, abs=1e-20)
        assert result["penalty"] == pytest.approx(0.0, abs=1e-20)

    def test_reactions_need_a_support(self):
        model = _crossed_model()
        with pytest.raises(ModelInputError, match="no translational Dirichlet"):
            reaction_forces(model, model.reference_state(), [model.loads[0].node])
