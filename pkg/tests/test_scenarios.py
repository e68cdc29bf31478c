"""
Tests for model documents, example generators and study drivers.

Runs marked `slow` reproduce the full reference studies; deselect them with -m "not slow".
"""

import copy
import json

import numpy as np
import pytest

import src.scenarios.studies as studies
from src.errors import ConvergenceError, ModelInputError
from src.scenarios.document import (
    AUTO_CPP, document_from_dict, document_to_dict, load_document, save_document, validate_document,
)
from src.scenarios.generators import (
    BEAM_RADIUS, CYLINDER_DIAMETER, CYLINDER_RADIUS, axial_fiber_position, cylinder_bottom_nodes,
    cylinder_dimensions, cylinder_top_nodes, generate_crossed_beams, generate_double_helix, generate_l_shape,
    generate_wire_cylinder, helix_height, loaded_node, ring_position,
)
from src.scenarios.studies import (
    convergence_meshes, has_limit_point, loglog_slope, relative_error, run_connector_sweep,
    run_convergence_study, run_cylinder_buckling, run_objectivity_test, run_penalty_sweep, tip_position,
)
from src.solver.model import build_model

PUBLISHED_TIP_NODAL = np.array([0.3955198482, 1.0491290072, 0.5837450180])
PUBLISHED_TIP_PENALTY_1000 = np.array([0.3955136632, 1.0491332269, 0.5837370378])


def _swapped_sides(document):
    swapped = copy.deepcopy(document)
    for coupling in swapped.couplings:
        coupling.element_a, coupling.element_b = coupling.element_b, coupling.element_a
        if coupling.xi != AUTO_CPP:
            coupling.xi = list(reversed(coupling.xi))
    return swapped


# ── Documents ─────────────────────────────────────────────────────────────────

class TestDocuments:

    def test_round_trip_through_json(self, tmp_path):
        document = generate_crossed_beams(3, "penalty", 100.0)
        path = save_document(document, tmp_path / "models" / "crossed.json")
        assert load_document(path) == document
        assert json.loads(path.read_text())["couplings"][0]["xi"] == AUTO_CPP

    def test_dict_form_keeps_connections(self):
        document = generate_l_shape(0.0, 2, "nodal")
        assert document_from_dict(document_to_dict(document)).connections == [[3, 4]]

    def test_unknown_field_is_an_input_error(self):
        data = document_to_dict(generate_l_shape(0.0, 2))
        data["nodes"][0]["colour"] = "red"
        with pytest.raises(ModelInputError, match="Malformed"):
            document_from_dict(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelInputError, match="Cannot read"):
            load_document(tmp_path / "absent.json")

    @pytest.mark.parametrize("mutate,message", [
        (lambda d: d.nodes.append(copy.deepcopy(d.nodes[0])), "Duplicate node"),
        (lambda d: setattr(d.elements[0], "material", 99), "unknown material"),
        (lambda d: setattr(d.elements[0], "order", 4), "order must be"),
        (lambda d: setattr(d.elements[0], "nodes", [1]), "needs 2 nodes"),
        (lambda d: setattr(d.materials[0], "R", 0.0), "must be positive"),
        (lambda d: setattr(d.materials[0], "nu", 0.5), "Poisson"),
        (lambda d: setattr(d.couplings[0], "xi", [1.0, -1.5]), "outside"),
        (lambda d: setattr(d.couplings[0], "xi", "nearest"), "auto-cpp"),
        (lambda d: setattr(d.couplings[0], "enforcement", "penalty"), "penalty needs"),
        (lambda d: setattr(d.dirichlet[0], "ramp", [[0.0, 0.0], [0.0, 1.0]]), "strictly increasing"),
        (lambda d: setattr(d.dirichlet[0], "mask", [True] * 3), "6 entries"),
        (lambda d: setattr(d.loads[0], "node", 999), "unknown node"),
        (lambda d: d.connections.append([1, 999]), "Connection"),
        (lambda d: setattr(d.settings, "load_steps", 0), "load_steps"),
    ])
    def test_validation_errors(self, mutate, message):
        document = generate_l_shape(0.0, 2)
        mutate(document)
        with pytest.raises(ModelInputError, match=message):
            validate_document(document)

    def test_partial_rotation_mask_with_rotation_is_rejected(self):
        document = generate_l_shape(0.0, 2)
        document.dirichlet[0].mask = [True, True, True, True, False, False]
        document.dirichlet[0].rotation = [0.1, 0.0, 0.0]
        with pytest.raises(ModelInputError, match="rotation DOFs"):
            validate_document(document)


# ── Generators ────────────────────────────────────────────────────────────────

class TestGenerators:

    @pytest.mark.parametrize("offset", [0.0, 2.0 * BEAM_RADIUS])
    def test_l_shape_geometry(self, offset):
        document = generate_l_shape(offset, 10)
        positions = {n.id: np.asarray(n.position) for n in document.nodes}
        np.testing.assert_allclose(positions[1], [0.0, 0.0, 0.0])
        np.testing.assert_allclose(positions[11], [1.0, 0.0, 0.0])
        np.testing.assert_allclose(positions[12], [1.0, offset, 0.0])
        np.testing.assert_allclose(positions[loaded_node(document)], [1.0, offset, 1.0])
        coupling = document.couplings[0]
        assert (coupling.element_a, coupling.element_b, coupling.xi) == (10, 11, [1.0, -1.0])
        assert document.loads[0].force == [0.0, 5e-6, 0.0]
        assert document.loads[0].moment == [0.0, 0.0, 5e-6]

    def test_l_shape_variants(self):
        with pytest.raises(ModelInputError):
            generate_l_shape(0.1, 4, "nodal")
        with pytest.raises(ModelInputError):
            generate_l_shape(0.0, 4, connector_stiffness=10.0)
        document = generate_l_shape(0.1, 4, connector_stiffness=10.0)
        assert not document.couplings
        assert document.elements[-1].nodes == [5, 6]
        assert document.materials[-1].E == pytest.approx(10.0)

    @pytest.mark.parametrize("n_elements,xi", [(4, 1.0), (3, 0.0)])
    def test_crossed_beams_coupling_parameter(self, n_elements, xi):
        model = build_model(generate_crossed_beams(n_elements))
        pair = model.pairs[0]
        assert abs(pair.side_a.xi) == pytest.approx(xi, abs=1e-10)
        assert abs(pair.side_b.xi) == pytest.approx(xi, abs=1e-10)
        assert np.linalg.norm(pair.reference.R01) == pytest.approx(2.0 * BEAM_RADIUS, rel=1e-10)

    def test_cylinder_counts_and_supports(self):
        document = generate_wire_cylinder(16, 10, load_steps=100)
        assert len(document.couplings) == 160
        assert len(cylinder_top_nodes(document)) == 16
        assert len(cylinder_bottom_nodes(document)) == 16
        spacing, height = cylinder_dimensions(16, 10)
        assert spacing == pytest.approx(np.pi * CYLINDER_DIAMETER / 16)
        assert height == pytest.approx(10 * spacing)
        assert document.loads[0].ramp[1] == [0.01, 1.0]

    def test_cylinder_fibers_touch_at_crossings(self):
        n_axi, n_circ = 8, 3
        spacing, _ = cylinder_dimensions(n_axi, n_circ)
        for i in range(1, n_axi + 1):
            for j in range(1, n_circ + 1):
                fiber = axial_fiber_position(i, spacing * (j - 0.5), n_axi)
                ring = ring_position(j, i * 2.0 * np.pi / n_axi, n_axi)
                assert np.linalg.norm(fiber - ring) == pytest.approx(2.0 * CYLINDER_RADIUS, rel=1e-12)

        model = build_model(generate_wire_cylinder(n_axi, n_circ, elems_per_ring=8, elems_per_axial=3))
        for pair in model.pairs:
            assert np.linalg.norm(pair.reference.R01) == pytest.approx(2.0 * CYLINDER_RADIUS, rel=0.1)

    def test_cylinder_rejects_odd_fiber_count(self):
        with pytest.raises(ModelInputError):
            generate_wire_cylinder(15, 10)

    def test_double_helix(self):
        document = generate_double_helix()
        assert len(document.couplings) == 20
        connector_orders = {e.order for e in document.elements if e.material == 2}
        assert connector_orders == {1, 2, 3}
        positions = {n.id: np.asarray(n.position) for n in document.nodes}
        top = positions[document.dirichlet[0].node]
        assert top[2] == pytest.approx(helix_height())
        model = build_model(document)
        assert all(not pair.is_lagrange for pair in model.pairs)

    def test_symmetric_side_order_gives_same_reference(self):
        document = generate_l_shape(0.0, 2, "penalty", 10.0)
        a, b = build_model(document).pairs[0], build_model(_swapped_sides(document)).pairs[0]
        np.testing.assert_allclose(b.reference.R01, -a.reference.R02, atol=1e-15)
        assert (a.eps_r, a.eps_theta) == (b.eps_r, b.eps_theta)


# ── Study helpers ─────────────────────────────────────────────────────────────

class TestStudyHelpers:

    def test_loglog_slope(self):
        h = np.array([0.5, 0.25, 0.125])
        assert loglog_slope(h, 3.0 * h**2) == pytest.approx(2.0)
        assert loglog_slope(h, 1.0 / h) == pytest.approx(-1.0)
        assert np.isnan(loglog_slope([1.0], [1.0]))
        assert loglog_slope([1.0, 2.0, 4.0], [1.0, np.nan, 4.0]) == pytest.approx(1.0)

    def test_has_limit_point(self):
        assert has_limit_point([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 1.5])
        assert not has_limit_point([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0])
        assert not has_limit_point([0.0, 1.0, 2.0], [0.0, -1.0, -2.0])

    def test_relative_error(self):
        assert relative_error(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)

    def test_convergence_meshes(self):
        assert convergence_meshes(2) == [(2, "even"), (3, "odd"), (4, "even"), (5, "odd")]

    def test_convergence_reference_must_be_finest(self):
        with pytest.raises(ModelInputError, match="finer"):
            run_convergence_study(max_k=3, reference_elements=8)

    def test_failed_sweep_run_is_nan_row(self, monkeypatch):
        reference = np.array([1.0, 2.0, 2.0])

        def fake_tip(document, node, **overrides):
            coupling = document.couplings[0]
            if coupling.enforcement == "lagrange":
                return reference
            if coupling.penalty_scale == 10.0:
                raise ConvergenceError("no convergence")
            return reference + 3.0 / coupling.penalty_scale

        monkeypatch.setattr(studies, "tip_position", fake_tip)
        result = run_penalty_sweep(generate_l_shape(0.0, 2), [1.0, 10.0, 100.0])
        assert result.header == ["lambda", "rx", "ry", "rz", "err"]
        assert result.column("lambda") == [1.0, 10.0, 100.0]
        assert all(np.isnan(v) for v in result.rows[1][1:])
        assert result.failures == ["penalty 10: no convergence"]
        assert result.summary["slope"] == pytest.approx(-1.0)


# ── Reference examples ────────────────────────────────────────────────────────

class TestLShape:

    def test_lagrange_coupling_matches_nodal_connection(self):
        lagrange = generate_l_shape(0.0, 10, "lagrange")
        nodal = generate_l_shape(0.0, 10, "nodal")
        tip = loaded_node(lagrange)
        r_lagrange = tip_position(lagrange, tip)
        r_nodal = tip_position(nodal, tip)
        np.testing.assert_allclose(r_lagrange, r_nodal, rtol=1e-8)
        np.testing.assert_allclose(r_nodal, PUBLISHED_TIP_NODAL, rtol=1e-2)

    def test_penalty_side_order_does_not_matter(self):
        document = generate_l_shape(2.0 * BEAM_RADIUS, 4, "penalty", 100.0)
        tip = loaded_node(document)
        np.testing.assert_allclose(tip_position(_swapped_sides(document), tip), tip_position(document, tip),
                                   atol=1e-10)

    @pytest.mark.slow
    def test_penalty_sweep_converges_to_lagrange(self):
        result = run_penalty_sweep(generate_l_shape(0.0, 10), [1.0, 10.0, 100.0, 1000.0])
        errors = result.column("err")
        assert result.failures == []
        assert all(b < a for a, b in zip(errors, errors[1:]))
        assert result.summary["slope"] == pytest.approx(-1.0, abs=0.2)
        tip = np.array(result.rows[-1][1:4], dtype=float)
        np.testing.assert_allclose(tip, PUBLISHED_TIP_PENALTY_1000, rtol=1e-2)

    @pytest.mark.slow
    def test_penalty_with_offset_approaches_lagrange(self):
        result = run_penalty_sweep(generate_l_shape(2.0 * BEAM_RADIUS, 10), [1.0, 10.0, 100.0, 1000.0, 1e4])
        errors = result.column("err")
        assert all(b < a for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 1e-5

    @pytest.mark.slow
    def test_connector_sweep_runs(self):
        result = run_connector_sweep(2.0 * BEAM_RADIUS, [1.0, 100.0], 10)
        assert result.failures == []
        assert result.column("err")[1] < result.column("err")[0]


class TestCrossedBeams:

    @pytest.mark.slow
    def test_mesh_convergence_orders(self):
        result = run_convergence_study(7, 512)
        assert result.summary["slope_even"] == pytest.approx(2.0, abs=0.25)
        assert result.summary["slope_odd"] == pytest.approx(1.0, abs=0.25)

    @pytest.mark.slow
    @pytest.mark.parametrize("enforcement,scale", [("lagrange", None), ("penalty", 100.0)])
    def test_energy_is_invariant_under_rigid_rotation(self, enforcement, scale):
        result = run_objectivity_test(enforcement, 9, 50, penalty_scale=scale)
        assert result.summary["max_relative_energy_change"] < 1e-8
        assert result.summary["loading_monotone"] == 1.0
        assert result.summary["rotate_back_error"] < 1e-8


class TestWireCylinder:

    @pytest.mark.slow
    def test_buckling_curve_has_limit_point(self):
        result = run_cylinder_buckling()
        assert len(result.rows) == 101
        assert result.summary["has_limit_point"] == 1.0
        assert result.summary["equilibrium_error"] < 1e-8
        assert result.summary["peak_force"] > 0.0
